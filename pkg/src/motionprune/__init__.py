"""Motion-gated visual token pruning scheduler.

A standalone kit for scheduling visual-token pruning in vision-language-action
inference: SE(3) window kinematics, a binary motion gate, text-driven Top-K
token selection, an analytic transformer FLOPs model, score diagnostics, and
an episode replay harness with a CLI.
"""

__version__ = "0.1.0"

from .errors import (DegenerateInput, InvalidArgument, InvalidState,
                     MotionPruneError, ParseError)
from .se3 import (ActionIncrement, ActionWindow, Pose, compose_step,
                  euler_to_rotation, fk_window, window_distance)
from .gate import (GateConfig, GateState, extrema_rule, gate_step, gate_trace,
                   mean_rule)
from .scoring import (EmbeddingMatrix, ImportanceScores, ProjectionWeights,
                      PruneDecision, Segment, SegmentKind, aggregate_importance,
                      assemble_pruned, attention_scores, prune_pipeline,
                      topk_per_view)
from .flops import (ModelDims, PRESETS, adp_flops, baseline_flops,
                    dims_from_preset, episode_expected_flops, flops_table,
                    layer_flops, scoring_flops)
from .stats import (entropy, layer_stats_rows, normalize, participation_ratio,
                    random_retention_probability)
from .config import ConfigError, RunConfig, parse_config
from .harness import (EpisodeLog, RunReport, WindowRecord, compare_random,
                      load_episode, run_episode, save_episode, synth_episode)
from .fileio import (read_embeddings, read_weights, write_embeddings,
                     write_weights)
from .calibrate import FitResult, fit_reported
