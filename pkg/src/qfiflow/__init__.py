"""Quantum Fisher information flow in time-local open-system dynamics."""

from .dynamics import (
    DissipativeChannel,
    ParamTrajectory,
    StepperConfig,
    TimeLocalGenerator,
    apply_generator,
    co_integrate,
    finite_diff_param_deriv,
)
from .models import DampedJCParams, build_generator, markov_control, optimal_probe, probe_param_deriv
from .qfi_flow import (
    FlowSample,
    FlowSeries,
    SldResult,
    analyze_trajectory,
    channel_subflow_factor,
    cramer_rao_bound,
    flow_decomposed,
    flow_direct,
    qfi,
    qfi_bloch,
    sld,
    witness,
)

__version__ = "0.1.0"
