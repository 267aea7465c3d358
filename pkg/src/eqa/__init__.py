"""Frontier-exploration embodied question answering on deterministic 2D
gridworlds, with pluggable language/vision oracles and an evaluation
harness."""

from .geometry import (
    DEFAULT_CELL_SIZE,
    FACING_TOLERANCE_RAD,
    FORWARD_STEP_M,
    SENSOR_MAX_RANGE_M,
    SENSOR_RAYS,
    TURN_STEP_DEG,
)
from .harness import (
    EpisodeConfig,
    EpisodeResult,
    SweepResult,
    Trace,
    compute_metrics,
    format_results_table,
    normalize_answer,
    run_episode,
    run_sweep,
    run_vqa_only,
)
from .mapping import (
    DetectionModel,
    SemanticMap,
    detect_frontiers,
    target_cells,
    update_map,
)
from .oracles import (
    MockOracle,
    OracleConfig,
    OracleError,
    QuestionParse,
    RemoteOracle,
    Snapshot,
    build_oracle,
    make_snapshot,
)
from .planner import (
    MemoryEntry,
    PlannerState,
    StopPolicy,
    check_stop,
    maybe_memorize,
    next_action,
    plan_path,
    select_goal,
)
from .world import (
    AgentPose,
    GridScene,
    NoPathError,
    Observation,
    QAItem,
    SceneError,
    load_scene,
    load_scene_file,
    make_start,
    observe,
    shortest_path,
    step,
)

__version__ = "0.1.0"
