"""Pseudo-random single- and multi-qubit unitaries from Clifford+T gates,
with tools to measure their convergence to Haar/CUE statistics."""

from .qcore import (
    CZ,
    GATES,
    H,
    P,
    T,
    apply_cz_layer,
    apply_single_qubit_gate,
    dagger,
    haar_cue_sample,
    matmul,
    unitarity_defect,
)
from .singleq import (
    EulerParams,
    SequenceStep,
    enumerate_parameters,
    extract_euler,
    project_su2,
    sequence_unitary,
)
from .prcircuit import CircuitConfig, EnsembleSpec, build_unitary, sample_ensemble, step_unitary_apply
from .stats import (
    DistanceSeries,
    FitResult,
    Histogram,
    MomentReport,
    distance,
    fit_convergence,
    histogram_build,
    moment_cue,
    moment_deviation,
    moment_empirical,
    target_cue_l_mass,
    target_uniform_mass,
)

__version__ = "0.1.0"
