"""Information-theoretic randomness tests: compression gates, book-stack and
order tests over s-bit words, two-faced test sources and a block-length advisor."""

from .bitstream import BitSequence, BlockStream, ParameterError, from_bytes, read_file, to_blocks
from .processes import MarkovSpec, ResourceError

__all__ = [
    "BitSequence",
    "BlockStream",
    "MarkovSpec",
    "ParameterError",
    "ResourceError",
    "from_bytes",
    "read_file",
    "to_blocks",
]
__version__ = "0.1.0"
