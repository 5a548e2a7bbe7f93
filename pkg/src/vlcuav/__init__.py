"""UAV-assisted VLC data-collection simulator and training harness."""

from .altitude import AltitudeProblem, grid_argmax, optimal_altitude, squared_radius, stationary_points
from .channel import (
    LinkGeometry,
    VlcParams,
    capacity,
    channel_gain,
    comm_radius,
    concentrator_gain,
    from_physical,
    gain_threshold,
    lambertian_order,
    reception_radius,
)
from .config import ExperimentConfig, from_dict, load_config
from .errors import (
    ConfigError,
    GeometryError,
    InfeasibleAltitudeError,
    InvalidParameterError,
    PlanningError,
    PlanValidationError,
    TrainingDivergedError,
    VlcUavError,
)
from .replay import ReplayBuffer, Transition
from .td3 import Td3Agent, Td3Config, raw_to_action
from .world import (
    ActionCmd,
    DataCollectionEnv,
    EnvState,
    EpisodeLog,
    RewardParams,
    WorldInstance,
    run_episode,
    validate_episode,
)

__version__ = "0.1.0"
