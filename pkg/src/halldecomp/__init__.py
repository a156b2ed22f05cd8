"""Hall-interval decompositions of AllDifferent, Permutation, GCC and Same.

The decompositions run on a small trail-based propagation engine and can
also be emitted as pseudo-Boolean (OPB) formulas.
"""

from .decomp import (
    Consistency,
    DecompositionError,
    GlobalSpec,
    Kind,
    post_alldiff,
    post_alldiff_bc,
    post_alldiff_rc,
    post_bi_clique,
    post_gcc,
    post_global,
    post_permutation,
    post_same,
)
from .encoder import DecodeError, EncodeError, VarMap, decode_model, encode_opb
from .engine import (
    Branching,
    Change,
    Engine,
    EngineUsageError,
    Fixpoint,
    PruneResult,
    SolveStatus,
)
from .generators import gen_double_wheel, gen_php
from .instance import InstanceError, InstanceFile, Method, build, check_solution

__version__ = "0.1.0"
