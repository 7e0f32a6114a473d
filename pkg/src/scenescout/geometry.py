"""Camera poses, look-at frames and quaternion interpolation.

Conventions: right-handed world, cameras look down their local -z axis.
A camera-to-world matrix has columns ``(right, up, -look_at, origin)``.
Quaternions are numpy arrays ordered ``(w, x, y, z)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrame, MalformedMatrix

PARALLEL_TOL = 1e-6
UNIT_TOL = 1e-9


def _vec3(v, name):
    a = np.array(v, dtype=np.float64).reshape(-1)
    if a.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite, got {a}")
    return a


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CameraPose:
    """Camera origin plus a unit viewing direction and a unit up vector.

    Instances are immutable. Use :func:`generate_pose` to build one from
    arbitrary (unnormalized, non-orthogonal) vectors.
    """

    origin: np.ndarray
    look_at: np.ndarray
    up: np.ndarray

    def __post_init__(self):
        origin = _vec3(self.origin, "origin")
        look = _vec3(self.look_at, "look_at")
        up = _vec3(self.up, "up")
        if abs(np.linalg.norm(look) - 1.0) > UNIT_TOL:
            raise DegenerateFrame(f"look_at is not unit length: {look}")
        if abs(np.linalg.norm(up) - 1.0) > UNIT_TOL:
            raise DegenerateFrame(f"up is not unit length: {up}")
        if abs(float(look @ up)) >= 1.0 - PARALLEL_TOL:
            raise DegenerateFrame("look_at and up are parallel")
        object.__setattr__(self, "origin", _frozen(origin))
        object.__setattr__(self, "look_at", _frozen(look))
        object.__setattr__(self, "up", _frozen(up))

    @property
    def right(self):
        r = np.cross(self.look_at, self.up)
        return r / np.linalg.norm(r)

    def as_array(self):
        """Flat ``(origin, look_at, up)`` vector of 9 floats."""
        return np.concatenate([self.origin, self.look_at, self.up])

    def allclose(self, other, atol=1e-9):
        return bool(np.allclose(self.as_array(), other.as_array(), rtol=0.0, atol=atol))

    def __repr__(self):
        fmt = lambda v: "(" + ", ".join(f"{x:.6g}" for x in v) + ")"  # noqa: E731
        return (f"CameraPose(origin={fmt(self.origin)}, look_at={fmt(self.look_at)}, "
                f"up={fmt(self.up)})")


def generate_pose(origin, look_at, up):
    """Assemble a valid pose from raw components.

    ``look_at`` is normalized and ``up`` is Gram-Schmidt re-orthogonalized
    against it.

    Raises:
        DegenerateFrame: if either direction has zero length or they are
            parallel within 1e-6.
    """
    origin = _vec3(origin, "origin")
    look = _vec3(look_at, "look_at")
    up = _vec3(up, "up")
    ln = np.linalg.norm(look)
    un = np.linalg.norm(up)
    if ln < 1e-12:
        raise DegenerateFrame("look_at has zero length")
    if un < 1e-12:
        raise DegenerateFrame("up has zero length")
    look = look / ln
    up = up / un
    if abs(float(look @ up)) >= 1.0 - PARALLEL_TOL:
        raise DegenerateFrame("look_at is parallel to up")
    # two passes keep dot(look, up) at rounding level even for near-parallel input
    for _ in range(2):
        up = up - (up @ look) * look
        up = up / np.linalg.norm(up)
    return CameraPose(origin, look, up)


def look_at_target(origin, target, up=(0.0, 1.0, 0.0)):
    """Pose at ``origin`` aimed at the point ``target``."""
    origin = _vec3(origin, "origin")
    return generate_pose(origin, _vec3(target, "target") - origin, up)


def pose_to_matrix(pose):
    """4x4 camera-to-world matrix with columns ``(right, up, -look_at, origin)``."""
    m = np.eye(4)
    m[:3, 0] = pose.right
    m[:3, 1] = pose.up
    m[:3, 2] = -pose.look_at
    m[:3, 3] = pose.origin
    return m


def rotation_of(pose):
    return pose_to_matrix(pose)[:3, :3]


def matrix_to_pose(m):
    """Decompose a camera-to-world matrix into a :class:`CameraPose`.

    The rotation block may deviate from orthonormality by up to 1e-4; it is
    projected back onto SO(3) before decomposition.

    Raises:
        MalformedMatrix: wrong shape, non-finite entries, bad last row,
            singular / reflecting / non-orthonormal rotation block.
    """
    try:
        m = np.array(m, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise MalformedMatrix(f"not a numeric matrix: {exc}") from None
    if m.shape == (16,):
        m = m.reshape(4, 4)
    if m.shape != (4, 4):
        raise MalformedMatrix(f"expected a 4x4 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise MalformedMatrix("matrix has non-finite entries")
    if np.max(np.abs(m[3] - (0.0, 0.0, 0.0, 1.0))) > 1e-9:
        raise MalformedMatrix(f"last row must be (0, 0, 0, 1), got {m[3].tolist()}")
    rot = m[:3, :3]
    det = np.linalg.det(rot)
    if abs(det) < 1e-9:
        raise MalformedMatrix("rotation block is singular")
    if det < 0:
        raise MalformedMatrix("rotation block is a reflection (left-handed frame)")
    if np.max(np.abs(rot.T @ rot - np.eye(3))) > 1e-4:
        raise MalformedMatrix("rotation block is not orthonormal within 1e-4")
    u, _, vt = np.linalg.svd(rot)
    rot = u @ vt
    look = -rot[:, 2]
    up = rot[:, 1]
    try:
        return CameraPose(m[:3, 3], look / np.linalg.norm(look), up / np.linalg.norm(up))
    except DegenerateFrame as exc:
        raise MalformedMatrix(str(exc)) from None


# -- quaternions -------------------------------------------------------------

def quat_normalize(q):
    q = np.asarray(q, dtype=np.float64)
    return q / np.linalg.norm(q)


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate([[np.cos(angle / 2.0)], np.sin(angle / 2.0) * axis])


def quat_multiply(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_angle(q1, q2):
    """Rotation angle in radians taking ``q1`` to ``q2`` (in [0, pi])."""
    rel = quat_multiply(quat_conjugate(quat_normalize(q1)), quat_normalize(q2))
    # atan2 form stays accurate for tiny angles, unlike arccos(dot)
    return 2.0 * np.arctan2(np.linalg.norm(rel[1:]), abs(rel[0]))


def quat_to_matrix(q):
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(r):
    """Unit quaternion of a 3x3 rotation matrix (Shepperd's method)."""
    r = np.asarray(r, dtype=np.float64)
    tr = np.trace(r)
    if tr > 0:
        s = 2.0 * np.sqrt(1.0 + tr)
        q = [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = 2.0 * np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2])
        q = [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s]
    elif r[1, 1] > r[2, 2]:
        s = 2.0 * np.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2])
        q = [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s]
    else:
        s = 2.0 * np.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1])
        q = [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s]
    q = quat_normalize(q)
    return q if q[0] >= 0 else -q


def quat_slerp(q1, q2, t):
    """Spherical linear interpolation along the shortest arc.

    The rotation angle between ``q1`` and the result is exactly ``t`` times
    the total angle. Nearly identical inputs fall back to normalized lerp.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    q1 = quat_normalize(q1)
    q2 = quat_normalize(q2)
    dot = float(q1 @ q2)
    if dot < 0.0:
        q2 = -q2
        dot = -dot
    if dot > 1.0 - 1e-9:
        return quat_normalize((1.0 - t) * q1 + t * q2)
    theta = np.arccos(dot)
    s = np.sin(theta)
    out = (np.sin((1.0 - t) * theta) / s) * q1 + (np.sin(t * theta) / s) * q2
    return quat_normalize(out)


def interpolate_pose(p1, p2, t):
    """Pose at fraction ``t`` between two poses.

    Rotation follows quaternion SLERP of the two camera frames; the origin is
    interpolated linearly.
    """
    q = quat_slerp(quat_from_matrix(rotation_of(p1)), quat_from_matrix(rotation_of(p2)), t)
    rot = quat_to_matrix(q)
    origin = (1.0 - t) * p1.origin + t * p2.origin
    return generate_pose(origin, -rot[:, 2], rot[:, 1])


def slerp_poses(p1, p2, steps):
    """``steps`` interior poses at ``t = i / (steps + 1)``; endpoints excluded."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    return [interpolate_pose(p1, p2, i / (steps + 1)) for i in range(1, steps + 1)]
