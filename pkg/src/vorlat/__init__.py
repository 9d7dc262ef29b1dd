"""Lattice constellations with Voronoi shaping and low-cost encoding."""

from .codes import (
    BUILTIN_CHAINS,
    CodeChain,
    LinearCode,
    builtin_chain,
    load_chain,
    make_rep_spc_chain,
    ml_decode,
)
from .intmat import IntMatrix, hnf_lower_triangular
from .lattice import (
    DiagonalScale,
    Lattice,
    direct_sum,
    is_sublattice,
    load_lattice,
    quotient_order,
    standard_lattice,
)
from .quantize import (
    fold_batch,
    fold_mod_lattice,
    make_quantizer,
    second_moment_mc,
    short_vectors,
)
from .shaping import (
    BUILTIN_SPECS,
    Message,
    VoronoiCodeSpec,
    builtin_spec,
    get_spec,
    load_spec,
)
from .simulate import (
    ChannelConfig,
    WerPoint,
    average_energy,
    complexity_bench,
    decode_lattice,
    sigma_for,
    transmit,
    wer_gap_db,
    wer_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_CHAINS",
    "BUILTIN_SPECS",
    "ChannelConfig",
    "CodeChain",
    "DiagonalScale",
    "IntMatrix",
    "Lattice",
    "LinearCode",
    "Message",
    "VoronoiCodeSpec",
    "WerPoint",
    "average_energy",
    "builtin_chain",
    "builtin_spec",
    "complexity_bench",
    "decode_lattice",
    "direct_sum",
    "fold_batch",
    "fold_mod_lattice",
    "get_spec",
    "hnf_lower_triangular",
    "is_sublattice",
    "load_chain",
    "load_lattice",
    "load_spec",
    "make_quantizer",
    "make_rep_spc_chain",
    "ml_decode",
    "quotient_order",
    "second_moment_mc",
    "short_vectors",
    "sigma_for",
    "standard_lattice",
    "transmit",
    "wer_gap_db",
    "wer_sweep",
    "__version__",
]
