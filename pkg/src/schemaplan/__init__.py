"""Learning binary cause-effect schemas of deterministic grid arcade worlds
and planning actions by inference over the grounded factor graph."""

from .agent import AgentConfig, PlannerAgent, TrainingLog, act, run_episode, run_training
from .catalog import Catalog, DEFAULT_CATALOG
from .env import (ACTIONS, Action, Ball, BallSpawn, ConfigError, FrameState,
                  UsageError, VariantId, VariantSpec, load_variant_config,
                  render_ascii, reset, step, variant_spec)
from .harness import (ExperimentConfig, ResultsTable, VariantResult,
                      half_negative_breakdown, load_schemas, run_experiment,
                      save_schemas)
from .learner import (SchemaSet, UngroundedSchema, evaluate_fw, learn_schema_set,
                      learn_schemas, objective)
from .network import (GroundedNetwork, GroundedSchema, SelfTransition,
                      attribute_next, ground, schema_fires, simulate_forward)
from .percept import (AttributeGrid, DatasetAccumulator, TrainingMatrix,
                      build_dataset, frame_to_grid, grid_to_frame,
                      neighborhood_vector)
from .planner import (Clamp, ClampSet, MaxMarginals, Plan, avoid_negatives,
                      backtrack, feasibility_forward_pass, plan, select_goal)

__version__ = "0.1.0"
