"""
Brute-force oracle
==================

Exhaustively score a lattice of camera origins aimed at a handful of
targets. The best grid score is a yardstick for what a search run reached.
"""

# %%
from scenescout.metrics import RegimeSpec, regime_children
from scenescout.oracle import PoseGrid, brute_force_best, grid_quantile, spread_targets
from scenescout.scene import SceneSpec, Sphere, training_ring
from scenescout.scoring import salient_scorer
from scenescout.search import SearchConfig, explore_scene

scene = SceneSpec([Sphere((0, 0, 0), 1.0, (255, 0, 0))], resolution=(32, 32))
scorer = salient_scorer((255, 0, 0))

grid = PoseGrid(mins=(-5, -5, -5), maxs=(5, 5, 5), steps=(9, 9, 9),
                targets=spread_targets((0, 0, 0), 1.0, 4))
result = brute_force_best(scene, scorer, grid)
print(f"{grid.size} grid poses, {result.skipped} degenerate")
print("best score", result.best.score, "at", result.best.pose.origin)
for q in (0.5, 0.9, 0.99):
    print(f"quantile {q}: {grid_quantile(result.scores, q)}")

# %% [markdown]
# Where does a search run land relative to the grid?

# %%
training = training_ring(scene, 24, 5.0)
cg = regime_children(len(training), 5, RegimeSpec.low())
_, report = explore_scene(training, scene, scorer, SearchConfig("egps", 5, cg, seed=1))
print(f"EGPS best {report.best_score} = {report.best_score / result.best.score:.0%} of the grid best")
