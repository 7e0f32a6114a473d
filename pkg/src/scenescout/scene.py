"""Synthetic sphere scenes, a pinhole ray-cast renderer and posed-image files.

The renderer is flat shaded: each pixel takes the color of the nearest sphere
hit by the ray through the pixel center, or the background color.
"""

import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MalformedMatrix, ParseError
from .geometry import look_at_target, matrix_to_pose, pose_to_matrix, rotation_of

FORMAT_VERSION = 1


def _rgb(value, name):
    c = tuple(int(v) for v in value)
    if len(c) != 3 or any(not 0 <= v <= 255 for v in c):
        raise ValueError(f"{name} must be three integers in [0, 255], got {value!r}")
    return c


@dataclass(frozen=True)
class Sphere:
    center: tuple
    radius: float
    color: tuple = (255, 0, 0)

    def __post_init__(self):
        center = tuple(float(v) for v in self.center)
        if len(center) != 3 or not all(math.isfinite(v) for v in center):
            raise ValueError(f"sphere center must be 3 finite numbers, got {self.center!r}")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"sphere radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "color", _rgb(self.color, "sphere color"))


@dataclass(frozen=True)
class SceneSpec:
    spheres: tuple
    background: tuple = (0, 0, 0)
    fov_y: float = 45.0
    resolution: tuple = (64, 64)

    def __post_init__(self):
        spheres = tuple(s if isinstance(s, Sphere) else Sphere(**s) for s in self.spheres)
        if not spheres:
            raise ValueError("a scene needs at least one sphere")
        if not 0.0 < self.fov_y < 180.0:
            raise ValueError(f"fov_y must lie in (0, 180), got {self.fov_y}")
        w, h = (int(v) for v in self.resolution)
        if w < 1 or h < 1:
            raise ValueError(f"resolution must be positive, got {self.resolution!r}")
        object.__setattr__(self, "spheres", spheres)
        object.__setattr__(self, "background", _rgb(self.background, "background"))
        object.__setattr__(self, "fov_y", float(self.fov_y))
        object.__setattr__(self, "resolution", (w, h))

    @property
    def width(self):
        return self.resolution[0]

    @property
    def height(self):
        return self.resolution[1]

    def focal_length(self):
        """Focal length in pixels implied by the vertical field of view."""
        return 0.5 * self.height / math.tan(math.radians(self.fov_y) / 2.0)

    def with_resolution(self, width, height):
        return SceneSpec(self.spheres, self.background, self.fov_y, (width, height))

    def to_dict(self):
        return {
            "format_version": FORMAT_VERSION,
            "spheres": [
                {"center": list(s.center), "radius": s.radius, "color": list(s.color)}
                for s in self.spheres
            ],
            "background": list(self.background),
            "fov_y": self.fov_y,
            "resolution": list(self.resolution),
        }


@dataclass(frozen=True, eq=False)
class Image:
    """8-bit RGB image; ``pixels`` has shape ``(height, width, 3)``."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, 3):
            raise ValueError(
                f"pixel array shape {px.shape} does not match {self.height}x{self.width}x3")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    def tobytes(self):
        return self.pixels.tobytes()

    def __eq__(self, other):
        return (isinstance(other, Image) and self.width == other.width
                and self.height == other.height and self.tobytes() == other.tobytes())

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PosedEntry:
    id: str
    pose: object
    image: Image = None
    file_path: str = None


@dataclass
class PosedImageSet:
    entries: list = field(default_factory=list)
    fov_y: float = 45.0
    width: int = 64
    height: int = 64

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.id in seen:
                raise ParseError(f"duplicate frame id {e.id!r}")
            seen.add(e.id)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def poses(self):
        return [e.pose for e in self.entries]


# -- rendering ---------------------------------------------------------------

@functools.lru_cache(maxsize=16)
def _camera_rays(width, height, fov_y):
    """Unit ray directions in camera coordinates, one per pixel, row-major."""
    f = 0.5 * height / math.tan(math.radians(fov_y) / 2.0)
    xs = (np.arange(width) + 0.5 - width / 2.0) / f
    ys = -(np.arange(height) + 0.5 - height / 2.0) / f
    gx, gy = np.meshgrid(xs, ys)
    d = np.stack([gx, gy, -np.ones_like(gx)], axis=-1).reshape(-1, 3)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    d.setflags(write=False)
    return d


def render(scene, pose):
    """Ray-cast ``scene`` from ``pose``; byte-identical for identical inputs."""
    w, h = scene.resolution
    dirs = _camera_rays(w, h, scene.fov_y) @ rotation_of(pose).T
    origin = pose.origin
    t_best = np.full(dirs.shape[0], np.inf)
    hit_index = np.full(dirs.shape[0], -1)
    for k, sphere in enumerate(scene.spheres):
        oc = origin - np.asarray(sphere.center)
        b = dirs @ oc
        c = float(oc @ oc) - sphere.radius ** 2
        disc = b * b - c
        hit = disc >= 0.0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t0 = -b - sq
        t1 = -b + sq
        # nearest intersection in front of the camera (far root when inside)
        t = np.where(t0 > 1e-9, t0, np.where(t1 > 1e-9, t1, np.inf))
        closer = hit & (t < t_best)
        t_best = np.where(closer, t, t_best)
        hit_index = np.where(closer, k, hit_index)
    palette = np.array([s.color for s in scene.spheres] + [scene.background], dtype=np.uint8)
    pixels = palette[hit_index].reshape(h, w, 3)
    return Image(w, h, pixels)


def projected_disc_area(scene, distance, radius=None):
    """Analytic pixel area of a sphere seen head-on at ``distance``.

    The silhouette of a sphere of radius r at distance d is the cone of
    half-angle asin(r / d), which meets the image plane in a disc of radius
    f * tan(asin(r / d)).
    """
    r = scene.spheres[0].radius if radius is None else radius
    half_angle = math.asin(r / distance)
    return math.pi * (scene.focal_length() * math.tan(half_angle)) ** 2


# -- image files -------------------------------------------------------------

def write_ppm(image, path):
    path = Path(path)
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    path.write_bytes(header + image.tobytes())


def read_ppm(path):
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1
    if tokens[0] != b"P6" or int(tokens[3]) != 255:
        raise ParseError(f"{path}: only binary 8-bit PPM (P6) images are supported")
    w, h = int(tokens[1]), int(tokens[2])
    px = np.frombuffer(data[pos:pos + w * h * 3], dtype=np.uint8)
    if px.size != w * h * 3:
        raise ParseError(f"{path}: truncated pixel data")
    return Image(w, h, px.reshape(h, w, 3))


# -- scene / pose files ------------------------------------------------------

def _read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported format_version {version!r}")
    return doc


def load_scene(path):
    doc = _read_json(path)
    try:
        return SceneSpec(
            spheres=tuple(Sphere(**s) for s in doc["spheres"]),
            background=tuple(doc.get("background", (0, 0, 0))),
            fov_y=doc.get("fov_y", 45.0),
            resolution=tuple(doc.get("resolution", (64, 64))),
        )
    except KeyError as exc:
        raise ParseError(f"{path}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def save_scene(scene, path):
    Path(path).write_text(json.dumps(scene.to_dict(), indent=2) + "\n")


def load_posed_set(path, load_images=True):
    """Read a pose file (``frames`` of row-major camera-to-world matrices).

    Frames carrying a ``file_path`` get their image loaded (relative to the
    pose file) when ``load_images`` is true; other frames are pose-only.
    """
    path = Path(path)
    doc = _read_json(path)
    frames = doc.get("frames")
    if not isinstance(frames, list):
        raise ParseError(f"{path}: field 'frames' must be a list")
    entries = []
    seen = set()
    for i, frame in enumerate(frames):
        where = f"{path}: frames[{i}]"
        if not isinstance(frame, dict):
            raise ParseError(f"{where}: expected an object")
        fid = frame.get("id")
        if not isinstance(fid, str):
            raise ParseError(f"{where}: field 'id' must be a string")
        if fid in seen:
            raise ParseError(f"{where}: duplicate id {fid!r}")
        seen.add(fid)
        matrix = frame.get("transform_matrix")
        if matrix is None:
            raise ParseError(f"{where} (id {fid!r}): missing field 'transform_matrix'")
        flat = np.array(matrix, dtype=object).reshape(-1)
        if flat.size != 16 or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                      for v in flat):
            raise ParseError(f"{where} (id {fid!r}): 'transform_matrix' must hold 16 numbers")
        try:
            pose = matrix_to_pose(np.array(flat, dtype=np.float64).reshape(4, 4))
        except MalformedMatrix as exc:
            raise MalformedMatrix(f"frame {fid!r}: {exc}") from None
        file_path = frame.get("file_path")
        image = None
        if file_path is not None and load_images:
            try:
                image = read_ppm(path.parent / file_path)
            except OSError as exc:
                raise ParseError(f"{where} (id {fid!r}): cannot read image: {exc.strerror}") from None
        entries.append(PosedEntry(fid, pose, image, file_path))
    try:
        return PosedImageSet(entries, fov_y=float(doc.get("fov_y", 45.0)),
                             width=int(doc.get("width", 64)), height=int(doc.get("height", 64)))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def save_posed_set(posed, path):
    frames = []
    for e in posed.entries:
        frame = {"id": e.id,
                 "transform_matrix": [float(v) for v in pose_to_matrix(e.pose).reshape(-1)]}
        if e.file_path is not None:
            frame["file_path"] = e.file_path
        frames.append(frame)
    doc = {"format_version": FORMAT_VERSION, "frames": frames, "fov_y": posed.fov_y,
           "width": posed.width, "height": posed.height}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def training_ring(scene, count, radius, height=0.0, up=(0.0, 1.0, 0.0)):
    """``count`` pose-only entries evenly spaced on a horizontal circle.

    The circle is centered (in x/z) on the first sphere, sits at world height
    ``height`` and every camera aims at the first sphere's center.
    """
    if count < 2:
        raise ValueError(f"count must be >= 2, got {count}")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    cx, _, cz = scene.spheres[0].center
    entries = []
    for k in range(count):
        theta = 2.0 * math.pi * k / count
        origin = (cx + radius * math.cos(theta), height, cz + radius * math.sin(theta))
        pose = look_at_target(origin, scene.spheres[0].center, up)
        entries.append(PosedEntry(f"ring_{k:03d}", pose))
    w, h = scene.resolution
    return PosedImageSet(entries, fov_y=scene.fov_y, width=w, height=h)
