"""
Rendering a sphere scene and scoring views
==========================================

The built-in renderer ray-casts spheres with a pinhole camera. A scorer maps
each image to a positive number; the salient-pixel scorer counts pixels of a
target color.
"""

# %%
import math
from pathlib import Path

from scenescout.geometry import look_at_target
from scenescout.scene import SceneSpec, Sphere, render, write_ppm
from scenescout.scoring import salient_scorer

scene = SceneSpec([Sphere((0, 0, 0), 1.0, (255, 0, 0)),
                   Sphere((2.5, 0, -1), 0.6, (0, 128, 255))],
                  background=(0, 0, 0), fov_y=45.0, resolution=(96, 96))
score = salient_scorer((255, 0, 0))

# %% [markdown]
# Moving the camera closer makes the red disc bigger. Compare the pixel
# count with the analytic area of the projected silhouette.

# %%
f = 0.5 * scene.height / math.tan(math.radians(scene.fov_y) / 2)
for d in (8.0, 5.0, 3.0, 2.8):
    img = render(scene, look_at_target((0, 0, d), (0, 0, 0)))
    analytic = math.pi * (f * math.tan(math.asin(1.0 / d))) ** 2
    print(f"distance {d:4.1f}: score {score(img):7.0f}   analytic area {analytic:8.1f}")

# %% [markdown]
# Looking away from the red sphere leaves only the background, which scores
# the floor value of 1. Images are written as binary PPM.

# %%
away = render(scene, look_at_target((0, 0, 5), (0, 0, 10)))
print("looking away:", score(away))

out = Path("demo_out")
out.mkdir(exist_ok=True)
write_ppm(render(scene, look_at_target((1, 1, 4), (0.5, 0, 0))), out / "two_spheres.ppm")
print("wrote", out / "two_spheres.ppm")
