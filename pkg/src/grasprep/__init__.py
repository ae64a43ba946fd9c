"""Quality-diversity grasp repertoires: generate diverse grasping
trajectories in simulation, score them under noise, and adapt them to
observed object poses at deployment time."""

from .adaptation import (
    AdaptationFrames,
    FilterReport,
    adapt_state,
    adapt_trajectory,
    filter_trajectory,
    select_grasps,
)
from .kinematics import (
    IKParams,
    Joint,
    RobotModel,
    forward_kinematics,
    inverse_kinematics,
)
from .persistence import (
    RunConfig,
    load_object,
    load_repertoire,
    load_robot,
    load_scene,
    model_hash,
    resolve_robot,
    resolve_scene,
    save_object,
    save_repertoire,
    save_robot,
    save_scene,
)
from .qd import (
    Archive,
    Elite,
    Genome,
    MapElitesConfig,
    MapElitesResult,
    SearchBounds,
    approach_bounds,
    decode,
    run_map_elites,
)
from .quality import (
    NoiseSpec,
    QualityVector,
    compute_quality,
    fitness,
    rank_repertoire,
    sample_noise,
)
from .rollout import GraspOutcome, GripperCommand, RolloutParams, Trajectory, rollout
from .scene import ObjectModel, SceneModel
from .se3 import EndEffectorState, RigidTransform
from .workspace import GridResult, GridSpec, evaluate_grid, export_heatmap

__version__ = "0.1.0"

__all__ = [
    "AdaptationFrames",
    "Archive",
    "Elite",
    "EndEffectorState",
    "FilterReport",
    "Genome",
    "GraspOutcome",
    "GridResult",
    "GridSpec",
    "GripperCommand",
    "IKParams",
    "Joint",
    "MapElitesConfig",
    "MapElitesResult",
    "NoiseSpec",
    "ObjectModel",
    "QualityVector",
    "RigidTransform",
    "RobotModel",
    "RolloutParams",
    "RunConfig",
    "SceneModel",
    "SearchBounds",
    "Trajectory",
    "adapt_state",
    "adapt_trajectory",
    "approach_bounds",
    "compute_quality",
    "decode",
    "evaluate_grid",
    "export_heatmap",
    "filter_trajectory",
    "fitness",
    "forward_kinematics",
    "inverse_kinematics",
    "load_object",
    "load_repertoire",
    "load_robot",
    "load_scene",
    "model_hash",
    "rank_repertoire",
    "resolve_robot",
    "resolve_scene",
    "rollout",
    "run_map_elites",
    "sample_noise",
    "save_object",
    "save_repertoire",
    "save_robot",
    "save_scene",
    "select_grasps",
    "__version__",
]
