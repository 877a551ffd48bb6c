"""vrlab: simulated calculators, a passive observer, and active falsification.

Build catalog machines whose manufacturers may misdeclare what they
simulate, watch their output coordinates through finite-resolution sensors,
fit candidate dynamics, and probe the input coordinates to confirm or
overturn the claims.
"""

__version__ = "0.1.0"

from .calculators import (  # noqa: F401
    CATALOG_IDS,
    CENTRAL_FORCE,
    FREE_MOTION,
    FREE_MOTION_BOUNDED,
    HARMONIC,
    Calculator,
    Declaration,
    DofPartition,
    WallLine,
    build,
    declared_acceleration,
)
from .dynamics import (  # noqa: F401
    CentralPull,
    Disk,
    GearDrive,
    Rotor,
    SimulationError,
    Spring,
    WallBox,
    World,
    central_force,
    collide_disks,
    reflect,
    step,
    total_energy,
)
from .observer import (  # noqa: F401
    AGREES,
    DISAGREES,
    NON_PHYSICAL,
    PHYSICAL_AS_DECLARED,
    PHYSICAL_WITH_INFERRED,
    EventList,
    FitResult,
    InsufficientEvidenceError,
    ObserverConfig,
    SensorSpec,
    Trajectory,
    Verdict,
    classify,
    detect_events,
    estimate_derivatives,
    fit,
    infer_constraints,
    observe,
)
from .prober import (  # noqa: F401
    ProbeError,
    ProbePlan,
    ProbeRecord,
    ProbeReport,
    falsify,
    newton_residual,
    run_probe,
    stop_and_release,
)
from .vec import Vec2  # noqa: F401
