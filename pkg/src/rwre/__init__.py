"""Random walks in i.i.d. Dirichlet environments on Z^d with bounded jumps.

Lattice geometry and laws live in :mod:`rwre.lattice`, environments in
:mod:`rwre.environment`, simulation in :mod:`rwre.walk`, loop erasures in
:mod:`rwre.erasure`, the cylinder digraph in :mod:`rwre.graph` and the
Monte Carlo estimators in :mod:`rwre.experiments`.
"""

__version__ = "0.1.0"

from .lattice import (  # noqa: E402
    Direction,
    InvalidPathError,
    JumpLaw,
    UnsupportedDimensionError,
    check_c3,
    first_hit,
    lateral_first_exit,
    prec_compare,
    validate_path,
)
from .environment import DirichletLaw, annealed_drift, annealed_drift_exact, site_distribution  # noqa: E402
from .walk import HalfSpaceStop, StopRule, WalkRecord, run_two_walks, run_walk  # noqa: E402
from .erasure import (  # noqa: E402
    ErasureFamily,
    ErasureInterval,
    event_B_horizon,
    event_G,
    event_G_bruteforce,
    reachable_erasures,
)
from .graph import (  # noqa: E402
    DEL,
    M,
    CylinderSpec,
    WeightedDigraph,
    build_cylinder,
    canonicalize,
    class_sums,
    divergence,
    graph_env_draw,
    graph_first_hits,
)

__all__ = [
    "CylinderSpec",
    "DEL",
    "Direction",
    "DirichletLaw",
    "ErasureFamily",
    "ErasureInterval",
    "HalfSpaceStop",
    "InvalidPathError",
    "JumpLaw",
    "M",
    "StopRule",
    "UnsupportedDimensionError",
    "WalkRecord",
    "WeightedDigraph",
    "annealed_drift",
    "annealed_drift_exact",
    "build_cylinder",
    "canonicalize",
    "check_c3",
    "class_sums",
    "divergence",
    "event_B_horizon",
    "event_G",
    "event_G_bruteforce",
    "first_hit",
    "graph_env_draw",
    "graph_first_hits",
    "lateral_first_exit",
    "prec_compare",
    "reachable_erasures",
    "run_two_walks",
    "run_walk",
    "site_distribution",
    "validate_path",
]
