"""Pose search over a scene: guided random search (GRS), pose interpolation
search (PIBS) and evolution-guided pose search (EGPS).

Every epoch runs in three phases. New poses are generated serially from one
seeded generator, then rendered and scored (optionally in a thread pool,
results joined by index), then appended to the population. The generated
poses therefore never depend on evaluation parallelism.
"""

import enum
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .errors import ConfigError, DegenerateFrame, ScorerError
from .geometry import generate_pose, slerp_poses
from .scene import render
from .scoring import Direction

log = logging.getLogger(__name__)

MUTATION_SCALE = 0.1
MUTATION_PROBS = (0.05, 0.9, 0.05)
GRS_RETRIES = 8
MCVIR_N = 10
THREADS_ENV = "SCENESCOUT_THREADS"


class Mode(enum.Enum):
    GRS = "grs"
    PIBS = "pibs"
    EGPS = "egps"


@dataclass(frozen=True)
class Candidate:
    id: int
    pose: object
    score: float
    epoch: int = 0
    mode: Mode = None
    tag: str = None

    @property
    def provenance(self):
        if self.tag:
            return self.tag
        return "training" if self.epoch == 0 else "generated"


class Population:
    """Candidates in insertion order; ids are assigned on insertion."""

    def __init__(self):
        self._items = []

    def add(self, pose, score, epoch=0, mode=None):
        if self._items and epoch < self._items[-1].epoch:
            raise ValueError("candidates must be added in epoch order")
        c = Candidate(len(self._items), pose, float(score), epoch, mode)
        self._items.append(c)
        return c

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __getitem__(self, i):
        return self._items[i]

    @property
    def scores(self):
        return [c.score for c in self._items]

    def ranked(self, direction=Direction.MAXIMIZE):
        return rank(self._items, direction)


def rank(candidates, direction=Direction.MAXIMIZE):
    """Best first; ties keep the lower id first."""
    sign = -1.0 if direction is Direction.MAXIMIZE else 1.0
    return sorted(candidates, key=lambda c: (sign * c.score, c.id))


@dataclass(frozen=True)
class SearchConfig:
    mode: Mode
    epochs: int = 5
    children_per_epoch: int = 50
    topk: int = 10
    topc: int = 10
    seed: int = 0
    score_threshold: float = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "mode", Mode(self.mode))
        except ValueError:
            raise ConfigError("mode", f"unknown mode {self.mode!r}") from None
        for name in ("epochs", "children_per_epoch", "topk", "topc"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(name, f"must be a positive integer, got {value!r}")
        if self.mode is Mode.PIBS and self.topc < 2:
            raise ConfigError("topc", "PIBS needs topc >= 2 to form pairs")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.score_threshold is not None and not math.isfinite(self.score_threshold):
            raise ConfigError("score_threshold", "must be finite")

    def to_dict(self):
        return {
            "mode": self.mode.value,
            "epochs": int(self.epochs),
            "children_per_epoch": int(self.children_per_epoch),
            "topk": int(self.topk),
            "topc": int(self.topc),
            "seed": int(self.seed),
            "score_threshold": self.score_threshold,
        }


# -- GRS ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GrsState:
    min_pos: np.ndarray
    max_pos: np.ndarray
    all_look_at: list
    mean_up: np.ndarray

    @classmethod
    def from_poses(cls, poses):
        poses = list(poses)
        if not poses:
            raise ValueError("GRS needs at least one training pose")
        origins = np.array([p.origin for p in poses])
        up = np.mean([p.up for p in poses], axis=0)
        norm = np.linalg.norm(up)
        # opposing ups can cancel out; fall back to the first training frame
        mean_up = up / norm if norm > 1e-9 else np.array(poses[0].up)
        return cls(origins.min(axis=0), origins.max(axis=0),
                   [np.array(p.look_at) for p in poses], mean_up)


def grs_epoch(state, children, rng):
    """Sample ``children`` poses inside the training-origin box.

    Each origin is uniform per axis in ``[min_pos, max_pos]``; the view
    direction is drawn with replacement from the training directions and the
    up vector is the mean training up. Degenerate frames are redrawn up to 8
    times.
    """
    out = []
    for _ in range(children):
        for attempt in range(GRS_RETRIES + 1):
            origin = rng.uniform(state.min_pos, state.max_pos)
            look = state.all_look_at[rng.integers(len(state.all_look_at))]
            try:
                out.append(generate_pose(origin, look, state.mean_up))
                break
            except DegenerateFrame:
                if attempt == GRS_RETRIES:
                    raise
    return out


# -- PIBS --------------------------------------------------------------------

@dataclass
class PibsState:
    explored_pairs: set = field(default_factory=set)
    history: list = field(default_factory=list)

    def seen(self, a, b):
        return frozenset((a.id, b.id)) in self.explored_pairs

    def mark(self, a, b):
        self.explored_pairs.add(frozenset((a.id, b.id)))
        self.history.append((a.id, b.id))


def round_half_up(x):
    return math.floor(x + 0.5)


def interpolation_step(children, pair_count):
    return max(1, round_half_up(children / pair_count))


def usable_pair_count(available, children):
    """Largest pair count whose rounded step keeps the epoch within budget."""
    n = min(available, children)
    while n > 1 and interpolation_step(children, n) * n > children:
        n -= 1
    return n


def generate_pairs(ranked, topc, state, children, rng):
    """Unexplored pairs among the ``topc`` best candidates.

    Falls back to the whole population once the top pairs are used up. When
    more pairs are available than the epoch budget can interpolate, a random
    subset is kept. Returned pairs are recorded in ``state``.
    """
    def unexplored(pool):
        return [(a, b) for i, a in enumerate(pool) for b in pool[i + 1:] if not state.seen(a, b)]

    pairs = unexplored(ranked[:topc])
    if not pairs and len(ranked) > topc:
        pairs = unexplored(ranked)
    if not pairs:
        return []
    n = usable_pair_count(len(pairs), children)
    if n < len(pairs):
        keep = np.sort(rng.choice(len(pairs), size=n, replace=False))
        pairs = [pairs[i] for i in keep]
    for a, b in pairs:
        state.mark(a, b)
    return pairs


def pibs_epoch(ranked, topc, children, state, rng):
    pairs = generate_pairs(ranked, topc, state, children, rng)
    if not pairs:
        return []
    step = interpolation_step(children, len(pairs))
    out = []
    for a, b in pairs:
        out.extend(slerp_poses(a.pose, b.pose, step))
    return out


# -- EGPS --------------------------------------------------------------------

def parent_pool_size(n):
    """Size of the better half: ceil(n / 2), at least 2."""
    return min(n, max(2, math.ceil(n / 2)))


def sample_pair_biased(ranked, rng):
    """Two distinct parents from the better half, favoring higher ranks.

    Rank ``i`` of ``m`` gets weight ``m - i``; the second parent is drawn from
    the same weights with the first one removed.
    """
    if len(ranked) < 2:
        raise ValueError("need at least two candidates to form a pair")
    m = parent_pool_size(len(ranked))
    weights = np.arange(m, 0, -1, dtype=np.float64)
    i = rng.choice(m, p=weights / weights.sum())
    weights[i] = 0.0
    j = rng.choice(m, p=weights / weights.sum())
    return ranked[i], ranked[j]


def crossover(p1, p2, rng):
    """Blend two parents.

    The up vector is the component-wise mean of the parents' ups (left
    unnormalized). Each origin and view-direction component is drawn
    uniformly between the parents' values.
    """
    up = (p1.up + p2.up) / 2.0
    origin = rng.uniform(np.minimum(p1.origin, p2.origin), np.maximum(p1.origin, p2.origin))
    look = rng.uniform(np.minimum(p1.look_at, p2.look_at), np.maximum(p1.look_at, p2.look_at))
    return origin, look, up


def mutation(origin, look_at, p1, p2, rng):
    """Perturb each of the six components by -g, 0 or +g.

    ``g = 0.1 * (p1 - p2)`` per component, with probabilities 0.05 / 0.9 /
    0.05, drawn independently per component.
    """
    gap = MUTATION_SCALE * (np.concatenate([p1.origin, p1.look_at])
                            - np.concatenate([p2.origin, p2.look_at]))
    sign = rng.choice(3, size=6, p=MUTATION_PROBS) - 1
    delta = sign * gap
    return np.asarray(origin) + delta[:3], np.asarray(look_at) + delta[3:]


def egps_child(ranked, rng):
    a, b = sample_pair_biased(ranked, rng)
    origin, look, up = crossover(a.pose, b.pose, rng)
    origin, look = mutation(origin, look, a.pose, b.pose, rng)
    for look_try, up_try in ((look, up), (a.pose.look_at, up), (a.pose.look_at, a.pose.up)):
        try:
            return generate_pose(origin, look_try, up_try)
        except DegenerateFrame:
            continue
    raise AssertionError("unreachable: parent frame is always valid")


def egps_epoch(ranked, children, rng):
    return [egps_child(ranked, rng) for _ in range(children)]


# -- driver ------------------------------------------------------------------

def default_workers():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        raise ConfigError(THREADS_ENV, f"must be an integer, got {value!r}") from None


class _Evaluator:
    """Renders (when needed) and scores poses, retrying a failure once."""

    def __init__(self, scene, scorer, workers):
        if scorer.needs_render and scene is None:
            raise ConfigError("scene", "an image scorer needs a scene to render")
        self.scene = scene
        self.scorer = scorer
        self.workers = workers

    def _once(self, pose):
        if self.scorer.needs_render:
            return self.scorer(render(self.scene, pose)), 1
        return self.scorer(pose), 0

    def evaluate(self, pose):
        """Returns ``(score or None, renders, error message or None)``."""
        renders = 0
        err = None
        for _ in range(2):
            try:
                score, r = self._once(pose)
                return score, renders + r, None
            except (ScorerError, DegenerateFrame) as exc:
                renders += int(self.scorer.needs_render)
                err = str(exc)
        return None, renders, err

    def evaluate_many(self, poses):
        if self.workers <= 1 or len(poses) < 2:
            return [self.evaluate(p) for p in poses]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(self.evaluate, poses))


def _meets(score, threshold, direction):
    return score >= threshold if direction is Direction.MAXIMIZE else score <= threshold


def explore_scene(training, scene, scorer, config, workers=None):
    """Search ``scene`` for poses that optimize ``scorer``.

    Args:
        training: :class:`~scenescout.scene.PosedImageSet` seeding the
            population. Stored images are scored directly; pose-only
            entries are rendered first.
        scene: scene to render, or ``None`` for a pose scorer.
        scorer: :class:`~scenescout.scoring.Scorer` or ``PoseScorer``.
        config: :class:`SearchConfig`.
        workers: evaluation threads; defaults to ``$SCENESCOUT_THREADS`` or 1.

    Returns:
        ``(top, report)``: the ``topk`` best candidates, best first, and a
        :class:`~scenescout.metrics.RunReport`.
    """
    if len(training) == 0:
        raise ConfigError("training", "at least one training pose is required")
    workers = default_workers() if workers is None else max(1, int(workers))
    direction = scorer.direction
    evaluator = _Evaluator(scene, scorer, workers)
    rng = np.random.default_rng(config.seed)
    population = Population()
    timings = {"initial_scoring": 0.0, "generation": 0.0, "evaluation": 0.0}
    failures = []
    renders = 0
    evaluations = 0

    t0 = time.perf_counter()
    pending = [e for e in training if e.image is None or not scorer.needs_render]
    results = dict(zip((e.id for e in pending), evaluator.evaluate_many([e.pose for e in pending])))
    for entry in training:
        if entry.id in results:
            score, r, err = results[entry.id]
            renders += r
            if score is None:
                raise ScorerError(f"training frame {entry.id!r} could not be scored: {err}")
        else:
            score = scorer(entry.image)
        evaluations += 1
        population.add(entry.pose, score)
    timings["initial_scoring"] = time.perf_counter() - t0
    train_scores = population.scores

    grs_state = GrsState.from_poses(training.poses) if config.mode is Mode.GRS else None
    pibs_state = PibsState() if config.mode is Mode.PIBS else None
    if config.mode is Mode.EGPS and len(population) < 2:
        raise ConfigError("training", "EGPS needs at least two training poses")

    epochs = []
    shortfall = []
    stopped_at = None
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        cg = config.children_per_epoch
        if config.mode is Mode.GRS:
            poses = grs_epoch(grs_state, cg, rng)
        elif config.mode is Mode.PIBS:
            poses = pibs_epoch(population.ranked(direction), config.topc, cg, pibs_state, rng)
        else:
            poses = egps_epoch(population.ranked(direction), cg, rng)
        t1 = time.perf_counter()
        timings["generation"] += t1 - t0

        epoch_renders = 0
        for i, (score, r, err) in enumerate(evaluator.evaluate_many(poses)):
            epoch_renders += r
            if score is None:
                failures.append({"epoch": epoch, "index": i, "error": err})
                log.warning("epoch %d: pose %d dropped after retry: %s", epoch, i, err)
                continue
            population.add(poses[i], score, epoch, config.mode)
        timings["evaluation"] += time.perf_counter() - t1
        renders += epoch_renders
        evaluations += len(poses)
        if len(poses) < cg:
            shortfall.append({"epoch": epoch, "requested": cg, "emitted": len(poses)})
            log.warning("epoch %d: emitted %d of %d requested poses", epoch, len(poses), cg)

        ranked = population.ranked(direction)
        top10 = ranked[:MCVIR_N]
        stats = {
            "epoch": epoch,
            "emitted": len(poses),
            "renders": epoch_renders,
            "population": len(population),
            "best_score": ranked[0].score,
            "top10_mean": math.fsum(c.score for c in top10) / len(top10),
        }
        epochs.append(stats)
        log.info("epoch %d/%d [%s]: emitted %d, best %.6g, top-10 mean %.6g",
                 epoch, config.epochs, config.mode.value, len(poses),
                 stats["best_score"], stats["top10_mean"])
        if config.score_threshold is not None and _meets(ranked[0].score, config.score_threshold,
                                                         direction):
            stopped_at = epoch
            log.info("score threshold %g reached after epoch %d", config.score_threshold, epoch)
            break

    all_scores = population.scores
    top = population.ranked(direction)[:config.topk]
    notes = [f"epoch {s['epoch']}: emitted {s['emitted']} of {s['requested']} requested poses"
             for s in shortfall]
    if pibs_state is not None:
        notes.append(f"{len(pibs_state.history)} pose pairs interpolated")
    report = metrics.RunReport(
        config={**config.to_dict(), "scorer": {"name": scorer.name,
                                               "direction": direction.value,
                                               "params": scorer.params}},
        epochs=epochs,
        training_count=len(train_scores),
        total_images=len(population),
        render_count=renders,
        evaluations=evaluations,
        cvir=metrics.cvir(all_scores, train_scores, direction),
        mcvir=metrics.mcvir(all_scores, train_scores, MCVIR_N, direction),
        cvir_uninverted=metrics.cvir(all_scores, train_scores, direction, uninverted=True),
        mcvir_uninverted=metrics.mcvir(all_scores, train_scores, MCVIR_N, direction,
                                       uninverted=True),
        top=top,
        shortfall=shortfall,
        failures=failures,
        notes=notes,
        stopped_early_at=stopped_at,
        timings=timings,
        candidates=list(population),
        interpolated_pairs=list(pibs_state.history) if pibs_state else [],
    )
    return top, report
