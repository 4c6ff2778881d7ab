"""Experiment driver: make T samples, test each at level alpha, count rejections.

Per-trial randomness comes from ``SeedSequence(master_seed).spawn(trials)``
feeding PCG64, so a trial's sample does not depend on which worker runs it or
in what order. RANDU trials read consecutive, disjoint segments of the single
stream started at ``X_0 = 1``.
"""
from __future__ import annotations

import bz2
import csv
import io
import json
import lzma
import shlex
import subprocess
import tempfile
import time
import warnings
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import compression, processes, ranking
from .advisor import suggest_block_length
from .bitstream import BitSequence, ParameterError, read_file

SOURCES = ("randu", "bernoulli", "two-faced", "dir")
TESTS = ("bookstack", "order", "kt", "compress")
FORMATS = ("json", "csv", "table")
CSV_FIELDS = ("trial", "test", "decision", "statistic", "p_value", "critical_value", "error")

_BUILTIN_COMPRESSORS = {
    "builtin:zlib": lambda d: zlib.compress(d, 9),
    "builtin:bz2": lambda d: bz2.compress(d, 9),
    "builtin:lzma": lambda d: lzma.compress(d, preset=9),
}


def measure_compressed_size(data: bytes, cmd: str) -> int:
    """Byte size of ``data`` after compression.

    ``cmd`` is either ``builtin:zlib|bz2|lzma`` or a shell-style command. A
    command containing ``{}`` gets the path of a temporary input file there;
    otherwise the data is piped to stdin. The output size is whatever the
    command writes to stdout.
    """
    if cmd in _BUILTIN_COMPRESSORS:
        return len(_BUILTIN_COMPRESSORS[cmd](data))
    argv = shlex.split(cmd)
    if not argv:
        raise ParameterError("empty compressor command")
    if any("{}" in a for a in argv):
        with tempfile.NamedTemporaryFile(suffix=".bin", delete=False) as fh:
            fh.write(data)
            path = fh.name
        try:
            argv = [a.replace("{}", path) for a in argv]
            proc = subprocess.run(argv, stdout=subprocess.PIPE, stderr=subprocess.PIPE, check=True)
        finally:
            Path(path).unlink(missing_ok=True)
    else:
        proc = subprocess.run(argv, input=data, stdout=subprocess.PIPE, stderr=subprocess.PIPE, check=True)
    return len(proc.stdout)


@dataclass
class ExperimentSpec:
    source: str
    test: str
    trials: int
    n_bits: int | None = None
    alpha: float = 0.01
    master_seed: int = 0
    s: int | None = None
    a1_size: int | None = None
    cuts: tuple | None = None
    k: int = 1
    pi: float = 0.2
    kind: str = "T"
    input_dir: str | None = None
    bit_order: str = "msb"
    kt_order: int = 0
    gate: str = "gamma_hat"
    compressor_cmd: str = "builtin:zlib"
    alpha_exponent: int = compression.DEFAULT_ALPHA_EXPONENT

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ParameterError(f"source must be one of {SOURCES}")
        if self.test not in TESTS:
            raise ParameterError(f"test must be one of {TESTS}")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.source == "dir":
            if not self.input_dir:
                raise ParameterError("source 'dir' needs input_dir")
        elif not self.n_bits or self.n_bits < 1:
            raise ParameterError("n_bits must be >= 1 for generated sources")
        if self.cuts is not None:
            self.cuts = tuple(int(c) for c in self.cuts)


@dataclass
class ExperimentReport:
    rejections: int
    trials: int
    failures: int
    outcomes: list
    wall_time: float
    parameters: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _input_files(spec):
    return sorted(p for p in Path(spec.input_dir).iterdir() if p.is_file())


def trial_sample(spec: ExperimentSpec, index: int, seed=None) -> BitSequence:
    if spec.source == "randu":
        n_bytes = -(-spec.n_bits // 8)
        x0 = processes.randu_jump(processes.RANDU_SEED, index * n_bytes)
        return processes.randu_bits(spec.n_bits, x0)
    if spec.source == "dir":
        files = _input_files(spec)
        if index >= len(files):
            raise ParameterError(f"trial {index} has no input file ({len(files)} files)")
        seq = read_file(files[index], spec.bit_order)
        if spec.n_bits:
            seq = BitSequence(seq.bits[: spec.n_bits])
        return seq
    if seed is None:
        seed = np.random.SeedSequence(spec.master_seed).spawn(index + 1)[index]
    rng = processes.make_rng(seed)
    if spec.source == "bernoulli":
        return processes.bernoulli_bits(spec.n_bits, rng)
    markov = processes.MarkovSpec(spec.k, spec.kind, spec.pi)
    return processes.two_faced_sample(markov, spec.n_bits, rng)


def apply_test(spec: ExperimentSpec, seq: BitSequence) -> dict:
    """Run the configured test on one sample and flatten the outcome."""
    if spec.test in ("bookstack", "order"):
        s = spec.s or suggest_block_length(seq.length_bits).suggested_s
        size = 1 << s
        if spec.cuts:
            partition = ranking.PartitionSpec.from_cuts(size, spec.cuts)
        else:
            partition = ranking.default_partition(size, spec.a1_size)
        out = ranking.run_ranking_test(seq, spec.test, s, partition, spec.alpha)
        return {
            "test": spec.test,
            "decision": out.decision,
            "statistic": out.statistic_x2,
            "p_value": out.p_value,
            "critical_value": None,
            "error": None,
        }
    if spec.test == "kt":
        out = compression.kt_test(seq, spec.alpha, spec.kt_order, spec.gate)
    else:
        data = seq.to_bytes(spec.bit_order)
        size = measure_compressed_size(data, spec.compressor_cmd)
        out = compression.external_compressor_test(len(data), size, spec.alpha_exponent)
    return {
        "test": spec.test,
        "decision": out.decision,
        "statistic": out.observed_length_bits,
        "p_value": None,
        "critical_value": out.critical_value_bits,
        "error": None,
    }


def _run_trial(args):
    spec, index, seed = args
    try:
        record = apply_test(spec, trial_sample(spec, index, seed))
    except Exception as exc:  # recorded, counted as a failure
        record = {
            "test": spec.test,
            "decision": "error",
            "statistic": None,
            "p_value": None,
            "critical_value": None,
            "error": f"{type(exc).__name__}: {exc}",
        }
    return {"trial": index, **record}


def check_randu_budget(spec: ExperimentSpec) -> bool:
    """Warn when the RANDU segments would wrap around the 2^29 period."""
    if spec.source == "randu" and spec.n_bits * spec.trials > 8 * (1 << 29):
        warnings.warn("RANDU segments exceed the generator period 2^29", RuntimeWarning)
        return False
    return True


def run_experiment(spec: ExperimentSpec, workers: int = 1, order=None) -> ExperimentReport:
    """Run every trial; ``order`` optionally permutes execution order (results are sorted)."""
    check_randu_budget(spec)
    seeds = np.random.SeedSequence(spec.master_seed).spawn(spec.trials)
    indices = list(range(spec.trials)) if order is None else list(order)
    jobs = [(spec, i, seeds[i]) for i in indices]
    start = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_trial, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        outcomes = [_run_trial(job) for job in jobs]
    wall = time.perf_counter() - start
    outcomes.sort(key=lambda r: r["trial"])
    return ExperimentReport(
        rejections=sum(r["decision"] == "reject" for r in outcomes),
        trials=spec.trials,
        failures=sum(r["decision"] == "error" for r in outcomes),
        outcomes=outcomes,
        wall_time=wall,
        parameters=asdict(spec),
    )


# ------------------------------------------------------------------ output

def _table_params(p):
    test = p["test"]
    if test in ("bookstack", "order"):
        if p.get("cuts"):
            part = f"cuts={','.join(map(str, p['cuts']))}"
        elif p.get("a1_size"):
            part = f"|A1|={p['a1_size']}"
        else:
            part = "|A1|=5*sqrt(2^s)"
        return f"s={p.get('s') or 'advised'}, {part}"
    if test == "kt":
        return f"order={p['kt_order']}, gate={p['gate']}"
    return f"cmd={p['compressor_cmd']}, alpha=2^-{p['alpha_exponent']}"


def emit_report(report: ExperimentReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in report.outcomes:
            writer.writerow({k: "" if row.get(k) is None else row[k] for k in CSV_FIELDS})
        if report.outcomes:
            writer.writerow({
                "trial": "summary",
                "test": report.parameters.get("test", ""),
                "decision": f"{report.rejections}/{report.trials}",
                "statistic": "",
                "p_value": "",
                "critical_value": "",
                "error": report.failures,
            })
        return buf.getvalue()
    if fmt == "table":
        p = report.parameters
        n_bits = p.get("n_bits") or "file"
        head = ("test", "parameters", "n_bits", "rejected")
        row = (p.get("test", ""), _table_params(p), str(n_bits), f"{report.rejections}/{report.trials}")
        widths = [max(len(a), len(b)) for a, b in zip(head, row)]
        line = lambda cells: " | ".join(c.ljust(w) for c, w in zip(cells, widths))
        out = [line(head), "-+-".join("-" * w for w in widths), line(row)]
        if report.failures:
            out.append(f"failed trials: {report.failures}")
        return "\n".join(out) + "\n"
    raise ParameterError(f"format must be one of {FORMATS}")


def _parse_cell(key, value):
    if value == "":
        return None
    if key == "trial":
        return int(value)
    if key in ("statistic", "p_value", "critical_value"):
        return float(value)
    return value


def parse_report_csv(text: str):
    """Inverse of the CSV emitter: ``(rows, summary)``; summary is None when empty."""
    rows, summary = [], None
    for rec in csv.DictReader(io.StringIO(text)):
        if rec["trial"] == "summary":
            rej, trials = rec["decision"].split("/")
            summary = {"rejections": int(rej), "trials": int(trials), "failures": int(rec["error"])}
            continue
        rows.append({k: _parse_cell(k, rec[k]) for k in CSV_FIELDS})
    return rows, summary


def report_from_json(text: str) -> ExperimentReport:
    return ExperimentReport(**json.loads(text))
