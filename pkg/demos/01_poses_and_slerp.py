"""
Camera poses and SLERP
======================

Build camera frames from (origin, look_at, up), convert them to 4x4
camera-to-world matrices and back, and interpolate between two views.
"""

# %%
import numpy as np

from scenescout.geometry import (generate_pose, look_at_target, matrix_to_pose, pose_to_matrix,
                                 quat_angle, quat_from_matrix, rotation_of, slerp_poses)

# %% [markdown]
# The frame is re-orthonormalized, so the look direction and up vector do not
# have to be perpendicular on input. Here up is tilted toward the view.

# %%
pose = generate_pose(origin=(0, 0, 5), look_at=(0, 0, -1), up=(0, 1, -0.1))
print("look_at", pose.look_at)
print("up     ", pose.up)
print("right  ", pose.right)

# %% [markdown]
# Columns of the matrix are right, up, -look_at and the origin.

# %%
m = pose_to_matrix(pose)
print(np.round(m, 4))
back = matrix_to_pose(m)
print("round trip exact to 1e-12:", back.allclose(pose, atol=1e-12))

# %% [markdown]
# Aim two cameras at the origin from a quarter circle apart and sample the
# path between them. Rotation follows SLERP, so the angle to the first view
# grows in equal steps; the origin moves along the chord.

# %%
a = look_at_target((5, 0, 0), (0, 0, 0))
b = look_at_target((0, 0, 5), (0, 0, 0))
qa = quat_from_matrix(rotation_of(a))
for p in slerp_poses(a, b, 4):
    q = quat_from_matrix(rotation_of(p))
    print(np.round(p.origin, 3), f"{np.degrees(quat_angle(qa, q)):6.2f} deg")
