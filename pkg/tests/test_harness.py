import json
import os
import subprocess
import sys

import numpy as np
import pytest

from infotests import cli, harness, processes
from infotests.bitstream import ParameterError, read_file


def spec(**kw):
    base = dict(source="bernoulli", test="bookstack", trials=6, n_bits=4000, s=8, master_seed=3)
    base.update(kw)
    return harness.ExperimentSpec(**base)


def test_report_counts():
    rep = harness.run_experiment(spec())
    assert rep.trials == 6 and len(rep.outcomes) == 6
    assert rep.rejections == sum(o["decision"] == "reject" for o in rep.outcomes)
    assert rep.failures == 0


def test_reproducible_minus_walltime():
    a = harness.run_experiment(spec(test="order")).to_dict()
    b = harness.run_experiment(spec(test="order")).to_dict()
    a.pop("wall_time"), b.pop("wall_time")
    assert json.dumps(a) == json.dumps(b)


def test_order_of_execution_irrelevant():
    s = spec(trials=10, source="two-faced", k=2, pi=0.3)
    a = harness.run_experiment(s)
    b = harness.run_experiment(s, order=list(reversed(range(10))))
    assert a.outcomes == b.outcomes


def test_parallel_matches_serial():
    s = spec(trials=4)
    assert harness.run_experiment(s, workers=2).outcomes == harness.run_experiment(s).outcomes


def test_trial_seeds_distinct():
    seeds = np.random.SeedSequence(0).spawn(1000)
    states = {tuple(s.generate_state(4)) for s in seeds}
    assert len(states) == 1000


def test_randu_segments_disjoint():
    s = spec(source="randu", n_bits=800, trials=3)
    parts = [harness.trial_sample(s, i).bits for i in range(3)]
    assert np.array_equal(np.concatenate(parts), processes.randu_bits(2400).bits)


def test_randu_period_warning():
    with pytest.warns(RuntimeWarning):
        assert not harness.check_randu_budget(spec(source="randu", n_bits=2**30, trials=5))
    assert harness.check_randu_budget(spec(source="randu", n_bits=10**6, trials=100))


def test_failures_recorded():
    rep = harness.run_experiment(spec(test="compress", compressor_cmd="definitely-not-a-binary-xyz"))
    assert rep.failures == 6 and rep.rejections == 0
    assert all(o["error"] for o in rep.outcomes)


def test_spec_validation():
    with pytest.raises(ParameterError):
        spec(trials=0)
    with pytest.raises(ParameterError):
        spec(source="nowhere")
    with pytest.raises(ParameterError):
        spec(source="dir")


def test_dir_source(tmp_path):
    for i in range(3):
        (tmp_path / f"f{i}.bin").write_bytes(processes.randu_bytes(2000, processes.randu_jump(1, 2000 * i)).tobytes())
    rep = harness.run_experiment(harness.ExperimentSpec(source="dir", input_dir=str(tmp_path), test="kt", trials=3))
    assert rep.failures == 0
    rep = harness.run_experiment(harness.ExperimentSpec(source="dir", input_dir=str(tmp_path), test="kt", trials=4))
    assert rep.failures == 1


@pytest.mark.parametrize("cmd", ["builtin:zlib", "builtin:bz2", "builtin:lzma"])
def test_builtin_compressors(cmd):
    data = bytes(1000)
    assert 0 < harness.measure_compressed_size(data, cmd) < 1000


def test_shell_compressor_stdin_and_path():
    data = b"abc" * 500
    assert harness.measure_compressed_size(data, "cat") == len(data)
    assert harness.measure_compressed_size(data, "cat {}") == len(data)
    gz = harness.measure_compressed_size(data, "gzip -9 -c")
    assert gz < len(data)


# -- report formats

def test_csv_header_only_when_empty():
    rep = harness.ExperimentReport(0, 0, 0, [], 0.0, {"test": "order"})
    assert harness.emit_report(rep, "csv") == ",".join(harness.CSV_FIELDS) + "\n"


def test_csv_rows_and_round_trip():
    rep = harness.run_experiment(spec(trials=100, n_bits=2000))
    text = harness.emit_report(rep, "csv")
    lines = text.strip().split("\n")
    assert len(lines) == 1 + 100 + 1
    rows, summary = harness.parse_report_csv(text)
    assert rows == rep.outcomes
    assert summary == {"rejections": rep.rejections, "trials": 100, "failures": 0}


def test_json_round_trip():
    rep = harness.run_experiment(spec(test="kt", trials=3))
    back = harness.report_from_json(harness.emit_report(rep, "json"))
    assert back == rep


def test_table_format():
    rep = harness.run_experiment(spec(trials=2))
    text = harness.emit_report(rep, "table")
    assert "bookstack" in text and "/2" in text
    with pytest.raises(ParameterError):
        harness.emit_report(rep, "xml")


# -- CLI

def test_cli_generate_and_test(tmp_path, capsys):
    out = tmp_path / "r.bin"
    assert cli.main(["generate", "--source", "randu", "--n-bits", "100000", "--out", str(out)]) == 0
    assert out.stat().st_size == 12500
    assert np.array_equal(read_file(out).bits, processes.randu_bits(100000).bits)
    assert cli.main(["test", str(out), "--test", "bookstack", "--s", "20"]) == 0
    rec = json.loads(capsys.readouterr().out.strip())
    assert rec["decision"] == "reject" and rec["degrees_of_freedom"] == 1
    assert cli.main(["test", str(out), "--test", "order", "--s", "12", "--cuts", "100,1000"]) == 0
    rec = json.loads(capsys.readouterr().out.strip())
    assert rec["parameters"]["boundaries"] == [100, 1000, 4096]
    assert cli.main(["test", str(out), "--test", "compress", "--cmd", "builtin:lzma"]) == 0
    rec = json.loads(capsys.readouterr().out.strip())
    assert rec["test"] == "compress"


def test_cli_two_faced_generate(tmp_path):
    out = tmp_path / "t.bin"
    args = ["generate", "--source", "two-faced", "--k", "3", "--pi", "0.2", "--kind", "tbar",
            "--n-bits", "803", "--seed", "9", "--out", str(out)]
    assert cli.main(args) == 0
    assert out.stat().st_size == 101


def test_cli_advise(capsys):
    assert cli.main(["advise", "--n-bits", "5120", "--c", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["suggested_s"] == 16


def test_cli_experiment_formats(capsys):
    args = ["experiment", "--source", "bernoulli", "--test", "order", "--trials", "5",
            "--n-bits", "3000", "--s", "8", "--format", "csv"]
    assert cli.main(args) == 0
    assert len(capsys.readouterr().out.strip().split("\n")) == 7


def test_cli_exit_codes(capsys):
    assert cli.main(["experiment", "--test", "compress", "--trials", "2", "--n-bits", "800",
                     "--compressor-cmd", "no-such-compressor-abc"]) == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["experiment", "--trials", "two"])
    assert exc.value.code == 1
    assert cli.main(["advise", "--n-bits", "3"]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "infotests", "advise", "--n-bits", "1000000"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["suggested_s"] == 25


def test_fallback_path_same_results():
    code = (
        "import json, numpy as np;"
        "from infotests import processes as p, ranking as r, compression as c, _jit; from infotests.bitstream import to_blocks;"
        "seq = p.two_faced_sample(p.MarkovSpec(5, 'T', 0.3), 20000, p.make_rng(4));"
        "ru = p.randu_bits(20000);"
        "print(json.dumps([_jit.USE_NUMBA, int(seq.bits.sum()), int(ru.bits.sum()),"
        " r.book_stack_positions(to_blocks(ru, 10).ordinals).tolist()[-50:],"
        " r.order_test_positions(to_blocks(seq, 10).ordinals).tolist()[-50:],"
        " round(c.kt_code_length(seq, 3), 6)]))"
    )
    runs = []
    for flag in ("0", "1"):
        env = {**os.environ, "INFOTESTS_NO_NUMBA": flag}
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        runs.append(json.loads(out.stdout))
    assert runs[0][0] is True and runs[1][0] is False
    assert runs[0][1:] == runs[1][1:]
