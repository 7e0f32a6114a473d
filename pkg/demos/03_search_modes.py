"""
Comparing the three search modes
================================

Seed a population with a ring of training views, then let guided random
search (grs), pose interpolation (pibs) and the evolutionary search (egps)
spend the same budget.
"""

# %%
import numpy as np

from scenescout.metrics import RegimeSpec, regime_children
from scenescout.scene import SceneSpec, Sphere, training_ring
from scenescout.scoring import salient_scorer
from scenescout.search import SearchConfig, explore_scene

scene = SceneSpec([Sphere((0, 0, 0), 1.0, (255, 0, 0))], resolution=(48, 48))
training = training_ring(scene, 20, radius=6.0, height=1.0)
scorer = salient_scorer((255, 0, 0))

# %% [markdown]
# The low-pose regime caps the run at 300 images including the training
# views; with 5 epochs that fixes the number of children per epoch.

# %%
regime = RegimeSpec.low()
children = regime_children(len(training), 5, regime)
print("children per epoch:", children)

# %%
for mode in ("grs", "pibs", "egps"):
    bests = []
    for seed in range(5):
        top, report = explore_scene(training, scene, scorer,
                                    SearchConfig(mode, 5, children, topk=5, topc=8, seed=seed))
        bests.append(report.best_score)
    print(f"{mode:5s} best per seed {bests}  median {np.median(bests):.0f}")

# %% [markdown]
# The report keeps per-epoch statistics and the improvement metrics.

# %%
top, report = explore_scene(training, scene, scorer, SearchConfig("egps", 5, children, seed=0))
for row in report.epochs:
    print(row)
print(f"CVIR {report.cvir:.1f}%  mCVIR {report.mcvir:.1f}%")
print("best pose origin:", np.round(top[0].pose.origin, 3))
