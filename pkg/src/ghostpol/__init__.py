"""Nonlocal polarimetric discrimination toolkit.

Simulates polarization-entangled photon pairs probing rotatable
polarization objects, the resulting coincidence response curves,
counting statistics, state tomography and the distinguishability
analysis of the measured response points.
"""

from .countsim import CountModel, RunSet, correct_counts, simulate_counts, simulate_runs
from .discern import (
    DistinguishabilityReport,
    EllipsoidRegion,
    SampleStats,
    analyze_families,
    analyze_family,
    max_distinguishable_subset,
    separable,
    step_stats,
    summarize,
)
from .ghost import (
    ProbeTransform,
    ResponseCurve,
    coincidence_probability,
    heralded_idler,
    normalize_dataset,
    sweep_family,
)
from .optproj import (
    OptimizationConfig,
    OptimizationResult,
    ProjectorParam,
    nearest_feasible,
    objective_min_separation,
    optimize,
)
from .polcalc import (
    PolElement,
    compose,
    element_jones,
    jones_to_mueller,
    kraus_from_mueller,
    mueller_to_choi,
    rotation_jones,
)
from .qstate import (
    StateMetrics,
    TwoQubitDensity,
    bell_psi_plus,
    concurrence,
    fidelity,
    linear_entropy,
    metrics,
    partial_trace,
    werner,
)
from .tomo import (
    ReconstructionResult,
    TomographyRecord,
    canonical_projections,
    reconstruct_mle,
    simulate_tomography,
)

__version__ = "0.1.0"
