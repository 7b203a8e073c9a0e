"""Second-quantized simulation of heralded entanglement concentration with linear optics."""

from .analysis import (
    default_grid,
    p_recyclable,
    p_success,
    recycling_gain,
    simulate_total_probability,
    sweep,
    total_probability,
    verify_tables,
)
from .circuits import (
    CircuitPlan,
    ProtocolSpec,
    build_plan,
    prepare_sources,
    recyclable_to_input,
    run_to_premeasurement,
)
from .detection import (
    DetectionEvent,
    FeedForward,
    HeraldedOutcome,
    Label,
    apply_feedforward,
    classify,
    enumerate_outcomes,
    herald,
    herald_events,
)
from .elements import attenuation, beam_splitter, hwp, pbs, sigma_z, time_delay
from .fock import (
    ModeLabel,
    ModeTransform,
    OccupationConfig,
    PhotonicState,
    Polarization,
    TimeBin,
    apply_transform,
    fidelity,
    inner_product,
    norm,
    project_and_collapse,
    tensor,
)

__version__ = "0.1.0"
