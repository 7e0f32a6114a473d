"""Scoring criteria: image scorers, pose scorers and synthetic landscapes.

Every scorer must return a finite, strictly positive value so that the
improvement ratios in :mod:`scenescout.metrics` stay well defined. External
criteria that can be zero or negative have to be shifted by their author.
"""

import base64
import enum
import json
import math
import shlex
import subprocess
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EmptyPeaks, ScorerError


class Direction(enum.Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


def _checked(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ScorerError(f"scorer {name!r} returned a non-numeric value {value!r}") from None
    if not math.isfinite(value) or value <= 0.0:
        raise ScorerError(f"scorer {name!r} returned {value!r}; scores must be finite and > 0")
    return value


@dataclass(frozen=True)
class Scorer:
    """Criterion evaluated on a rendered :class:`~scenescout.scene.Image`."""

    name: str
    score: Callable
    direction: Direction = Direction.MAXIMIZE
    params: dict = field(default_factory=dict, compare=False)

    needs_render = True

    def __call__(self, image):
        return _checked(self.name, self.score(image))


@dataclass(frozen=True)
class PoseScorer:
    """Criterion evaluated directly on a pose, skipping rendering."""

    name: str
    score: Callable
    direction: Direction = Direction.MAXIMIZE
    params: dict = field(default_factory=dict, compare=False)

    needs_render = False

    def __call__(self, pose):
        return _checked(self.name, self.score(pose))


def salient_pixel_count(image, target_color, tolerance=0):
    """One plus the number of pixels within ``tolerance`` of ``target_color``."""
    diff = np.abs(image.pixels.astype(np.int16) - np.asarray(target_color, dtype=np.int16))
    return 1.0 + float(np.count_nonzero(np.all(diff <= tolerance, axis=-1)))


def direction_angle(a, b):
    """Angle in radians between two direction vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return math.atan2(np.linalg.norm(np.cross(a, b)), float(a @ b))


def _kernel(pose, peak, length_scale):
    d_o = float(np.linalg.norm(pose.origin - peak.origin))
    d_a = direction_angle(pose.look_at, peak.look_at)
    return math.exp(-(d_o ** 2 + d_a ** 2) / (2.0 * length_scale ** 2))


def gaussian_landscape_score(pose, peak, length_scale):
    """Smooth unimodal criterion peaking at ``peak`` with value 1.01."""
    if not length_scale > 0:
        raise ValueError(f"length_scale must be positive, got {length_scale}")
    return _kernel(pose, peak, length_scale) + 0.01


def multimodal_landscape_score(pose, peaks, length_scale=1.0):
    """Max over weighted Gaussian bumps, plus 0.01.

    ``peaks`` is a sequence of ``(peak_pose, weight)`` pairs.
    """
    if len(peaks) == 0:
        raise EmptyPeaks("multimodal landscape needs at least one peak")
    if not length_scale > 0:
        raise ValueError(f"length_scale must be positive, got {length_scale}")
    best = 0.0
    for peak, weight in peaks:
        if not weight > 0:
            raise ValueError(f"peak weights must be positive, got {weight}")
        best = max(best, weight * _kernel(pose, peak, length_scale))
    return best + 0.01


def salient_scorer(target_color, tolerance=0):
    target = tuple(int(v) for v in target_color)
    return Scorer(
        "salient",
        lambda image: salient_pixel_count(image, target, tolerance),
        params={"color": list(target), "tolerance": tolerance},
    )


def gaussian_scorer(peak, length_scale=1.0):
    return PoseScorer(
        "gaussian",
        lambda pose: gaussian_landscape_score(pose, peak, length_scale),
        params={"peak_origin": peak.origin.tolist(), "peak_look": peak.look_at.tolist(),
                "length_scale": length_scale},
    )


def multimodal_scorer(peaks, length_scale=1.0):
    peaks = list(peaks)
    if not peaks:
        raise EmptyPeaks("multimodal landscape needs at least one peak")
    return PoseScorer(
        "multimodal",
        lambda pose: multimodal_landscape_score(pose, peaks, length_scale),
        params={"peaks": [[p.origin.tolist(), p.look_at.tolist(), w] for p, w in peaks],
                "length_scale": length_scale},
    )


class ExternalScorer(Scorer):
    """Image scorer backed by a user executable.

    The command is started once per image. It receives one JSON line on
    stdin, ``{"width", "height", "pixels_b64"}`` (raw RGB bytes, row-major),
    and must answer with one JSON line ``{"score": number}``.
    """

    def __init__(self, command, timeout=60.0, direction=Direction.MAXIMIZE):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise ValueError("external scorer command is empty")
        super().__init__("external", self._run, direction,
                         params={"cmd": command if isinstance(command, str) else shlex.join(argv)})
        object.__setattr__(self, "argv", argv)
        object.__setattr__(self, "timeout", timeout)

    @staticmethod
    def encode_request(image):
        return json.dumps({
            "width": image.width,
            "height": image.height,
            "pixels_b64": base64.b64encode(image.tobytes()).decode("ascii"),
        }) + "\n"

    @staticmethod
    def decode_response(text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) != 1:
            raise ScorerError(f"external scorer must print exactly one line, got {len(lines)}")
        try:
            doc = json.loads(lines[0])
        except json.JSONDecodeError:
            raise ScorerError(f"external scorer printed invalid JSON: {lines[0][:80]!r}") from None
        if not isinstance(doc, dict) or "score" not in doc:
            raise ScorerError("external scorer response lacks a 'score' field")
        value = doc["score"]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScorerError(f"external scorer returned a non-numeric score {value!r}")
        return _checked("external", value)

    def _run(self, image):
        try:
            proc = subprocess.run(self.argv, input=self.encode_request(image),
                                  capture_output=True, text=True, timeout=self.timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ScorerError(f"external scorer failed to run: {exc}") from None
        if proc.returncode != 0:
            raise ScorerError(
                f"external scorer exited with {proc.returncode}: {proc.stderr.strip()[:200]}")
        return self.decode_response(proc.stdout)
