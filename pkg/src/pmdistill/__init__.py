"""Entanglement distillation for polarization-entangled pairs in PMD-degraded fiber."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    AlignmentSpec,
    FiberSpec,
    SourceSpec,
    SpectralState,
    aligned_density,
    generic_density,
    overlap_closed,
    overlap_quadrature,
    psp_align,
    spectral_form,
)
from .distill import (  # noqa: E402
    DistillTrace,
    Protocol,
    RoundResult,
    bbpssw_round,
    bell_diagonal,
    distill_misaligned,
    distill_round_analytic,
    distill_round_circuit,
    prep_unitaries,
    run_protocol,
)
from .yields import SweepSpec, sweep, target_yield_bound, upper_bound_yield, yield_of  # noqa: E402
