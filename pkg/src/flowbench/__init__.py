"""Desk-scale workbench for inversion-free editing of rectified-flow models.

Exact Gaussian-mixture velocity fields stand in for a trained network, so the
editing algorithms, their noise schedules, and their failure modes can be
studied quantitatively and verified against closed-form and Monte-Carlo
oracles.
"""

from .editor import (
    AncSchedule,
    EditConfig,
    EditTrace,
    NoiseBank,
    PRESETS,
    StepRecord,
    anc_step,
    constant_sga_schedule,
    dynaedit,
    edit_projection,
    flowedit,
    noisy_source,
    noisy_target,
    ode_inversion_baseline,
    sdedit_baseline,
    sga_aggregate,
    velocity_difference,
)
from .flowmodel import (
    Condition,
    ConditionedMixture,
    FlowModel,
    GaussianComponent,
    VelocityQuery,
    condition_on_first_frame,
    posterior_x0_mean,
    single_condition_model,
    time_grid,
)
from .metrics import (
    MetricReport,
    correlation_trace,
    energy_distance,
    jitter_energy,
    lowfreq_alignment,
)
from .tensorcore import LatentField, RngStream, axpy, cosine_sim, gaussian, neg_mse, stream_for

__version__ = "0.1.0"

__all__ = [
    "AncSchedule",
    "Condition",
    "ConditionedMixture",
    "EditConfig",
    "EditTrace",
    "FlowModel",
    "GaussianComponent",
    "LatentField",
    "MetricReport",
    "NoiseBank",
    "PRESETS",
    "RngStream",
    "StepRecord",
    "VelocityQuery",
    "anc_step",
    "axpy",
    "condition_on_first_frame",
    "constant_sga_schedule",
    "correlation_trace",
    "cosine_sim",
    "dynaedit",
    "edit_projection",
    "energy_distance",
    "flowedit",
    "gaussian",
    "jitter_energy",
    "lowfreq_alignment",
    "neg_mse",
    "noisy_source",
    "noisy_target",
    "ode_inversion_baseline",
    "posterior_x0_mean",
    "sdedit_baseline",
    "sga_aggregate",
    "single_condition_model",
    "stream_for",
    "time_grid",
    "velocity_difference",
]
