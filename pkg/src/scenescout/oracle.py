"""Exhaustive grid evaluation used as ground truth for search quality."""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFrame, GridTooLarge
from .geometry import look_at_target
from .scene import render
from .search import Candidate

MAX_EVALUATIONS = 10 ** 6


@dataclass(frozen=True, eq=False)
class PoseGrid:
    """Origin lattice times a set of aim points, with a fixed up vector."""

    mins: tuple
    maxs: tuple
    steps: tuple
    targets: tuple
    up: tuple = (0.0, 1.0, 0.0)

    def __post_init__(self):
        steps = tuple(int(s) for s in self.steps)
        if len(steps) != 3 or min(steps) < 1:
            raise ValueError(f"steps must be three integers >= 1, got {self.steps!r}")
        if not self.targets:
            raise ValueError("at least one target is required")
        object.__setattr__(self, "mins", tuple(float(v) for v in self.mins))
        object.__setattr__(self, "maxs", tuple(float(v) for v in self.maxs))
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "targets", tuple(tuple(float(v) for v in t) for t in self.targets))

    @property
    def size(self):
        return math.prod(self.steps) * len(self.targets)

    def axis_values(self, axis):
        n = self.steps[axis]
        if n == 1:
            return np.array([(self.mins[axis] + self.maxs[axis]) / 2.0])
        return np.linspace(self.mins[axis], self.maxs[axis], n)

    def lattice(self):
        """Origins and targets in lattice order (x slowest, target fastest)."""
        xs, ys, zs = (self.axis_values(a) for a in range(3))
        for x, y, z, target in itertools.product(xs, ys, zs, self.targets):
            yield (float(x), float(y), float(z)), target


def spread_targets(center, radius, count):
    """``count`` aim points: ``center`` first, the rest on a Fibonacci sphere."""
    center = np.asarray(center, dtype=np.float64)
    out = [tuple(center)]
    n = count - 1
    golden = math.pi * (3.0 - math.sqrt(5.0))
    for i in range(n):
        y = 1.0 - 2.0 * (i + 0.5) / n
        r = math.sqrt(max(0.0, 1.0 - y * y))
        phi = golden * i
        out.append(tuple(center + radius * np.array([r * math.cos(phi), y, r * math.sin(phi)])))
    return out[:count]


@dataclass
class OracleResult:
    best: Candidate
    scores: np.ndarray
    candidates: list = field(repr=False)
    grid_size: int = 0
    skipped: int = 0


def brute_force_best(scene, scorer, grid, workers=1):
    """Evaluate every grid pose and return the best one.

    Poses whose frame is degenerate (target at the origin, or aim parallel to
    ``up``) are skipped and counted. Ties go to the earliest lattice pose.

    Raises:
        GridTooLarge: if the grid holds more than 10**6 poses.
    """
    if grid.size > MAX_EVALUATIONS:
        raise GridTooLarge(f"grid has {grid.size} poses, limit is {MAX_EVALUATIONS}")
    poses = []
    skipped = 0
    for origin, target in grid.lattice():
        try:
            poses.append(look_at_target(origin, target, grid.up))
        except DegenerateFrame:
            skipped += 1
    if not poses:
        raise ValueError("every grid pose is degenerate")

    if scorer.needs_render:
        def evaluate(pose):
            return scorer(render(scene, pose))
    else:
        evaluate = scorer

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(evaluate, poses, chunksize=64))
    else:
        scores = [evaluate(p) for p in poses]
    scores = np.array(scores)
    candidates = [Candidate(i, p, float(s), tag="oracle") for i, (p, s) in enumerate(zip(poses, scores))]
    if scorer.direction.value == "maximize":
        best_i = int(np.argmax(scores))
    else:
        best_i = int(np.argmin(scores))
    return OracleResult(candidates[best_i], scores, candidates, grid.size, skipped)


def grid_quantile(scores, q):
    """Nearest-rank empirical quantile of ``scores`` (q in [0, 1])."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    s = np.sort(np.asarray(scores, dtype=np.float64))
    if s.size == 0:
        raise ValueError("no scores")
    rank = max(1, math.ceil(q * s.size - 1e-9))
    return float(s[rank - 1])
