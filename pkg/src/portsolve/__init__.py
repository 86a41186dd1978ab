"""Steady-state port behavior of one-port circuits by monotone operator splitting."""

from portsolve.signal import Signal, Spectrum, dft, idft, inner, norm, read_csv, write_csv
from portsolve.operators import (
    Gain,
    Lti,
    MonotonicityReport,
    Negated,
    OffsetOutput,
    StaticNonlinearity,
    apply,
    cayley,
    check_monotone,
    cubic,
    resolvent,
    saturation,
)
from portsolve.splitting import (
    Sinusoid,
    SolverConfig,
    SolveResult,
    douglas_rachford,
    dr_map,
    fixed_point_drive,
    forward_backward,
)
from portsolve.circuit import Inverse, Leaf, Sum, effective_relation_linear, solve_naive, solve_nested
from portsolve.mixed import MixedProblem, VdpParams, mmdr, vdp_period, vdp_problem, vdp_solve

__version__ = "0.1.0"
