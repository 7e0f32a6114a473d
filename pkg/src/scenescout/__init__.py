"""Camera-pose search over renderable scenes.

Given a renderer and a scalar criterion, search pose space for views that
optimize the criterion with guided random search, pose interpolation or an
evolutionary search, and measure the gain over the training views.
"""

from .errors import (BudgetInfeasible, ConfigError, DegenerateFrame, EmptyPeaks,
                     EmptyTrainingSet, GridTooLarge, MalformedMatrix, NonPositiveScore,
                     ParseError, ScorerError)
from .geometry import (CameraPose, generate_pose, look_at_target, matrix_to_pose,
                       pose_to_matrix, quat_slerp, slerp_poses)
from .metrics import RegimeSpec, RunReport, cvir, mcvir, regime_children
from .oracle import PoseGrid, brute_force_best, grid_quantile
from .scene import (Image, PosedImageSet, SceneSpec, Sphere, load_posed_set, load_scene,
                    render, save_posed_set, save_scene, training_ring)
from .scoring import Direction, PoseScorer, Scorer, salient_pixel_count
from .search import Candidate, Mode, SearchConfig, explore_scene

__version__ = "0.1.0"
