"""Improvement ratios, pose-budget regimes and run reports."""

import csv
import enum
import json
import math
from dataclasses import dataclass, field

from .errors import BudgetInfeasible, EmptyTrainingSet, NonPositiveScore
from .scoring import Direction

CSV_HEADER = ["id", "provenance", "epoch", "score",
              "origin_x", "origin_y", "origin_z",
              "look_x", "look_y", "look_z",
              "up_x", "up_y", "up_z"]


def _validate(all_scores, train_scores):
    all_scores = [float(s) for s in all_scores]
    train_scores = [float(s) for s in train_scores]
    if not train_scores:
        raise EmptyTrainingSet("training score list is empty")
    for s in all_scores + train_scores:
        if not (math.isfinite(s) and s > 0.0):
            raise NonPositiveScore(f"scores must be finite and > 0, got {s!r}")
    return all_scores, train_scores


def _ratio(novel, reference, direction, uninverted):
    if direction is Direction.MINIMIZE and not uninverted:
        return (reference / novel - 1.0) * 100.0
    return (novel / reference - 1.0) * 100.0


def cvir(all_scores, train_scores, direction=Direction.MAXIMIZE, uninverted=False):
    """Percent improvement of the best score overall over the best training score.

    ``all_scores`` must contain the training scores. For minimizing criteria
    the ratio is inverted so that improvement is positive; pass
    ``uninverted=True`` to get ``min(all) / min(train)`` instead.
    """
    all_scores, train_scores = _validate(all_scores, train_scores)
    pick = max if direction is Direction.MAXIMIZE else min
    return _ratio(pick(all_scores), pick(train_scores), direction, uninverted)


def _top_mean(scores, k, direction):
    ranked = sorted(scores, reverse=direction is Direction.MAXIMIZE)
    top = ranked[:k]
    return math.fsum(top) / len(top)


def mcvir(all_scores, train_scores, n=10, direction=Direction.MAXIMIZE, uninverted=False):
    """Percent improvement of the mean of the ``n`` best scores.

    When the training set holds fewer than ``n`` scores both means are taken
    over ``len(train_scores)`` values, which keeps the value non-negative for
    a superset (and equal to :func:`cvir` when ``n == 1``).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    all_scores, train_scores = _validate(all_scores, train_scores)
    k = min(n, len(train_scores))
    return _ratio(_top_mean(all_scores, k, direction), _top_mean(train_scores, k, direction),
                  direction, uninverted)


class Regime(enum.Enum):
    LOW_POSE = "low"
    HIGH_POSE = "high"
    CUSTOM = "custom"


REGIME_BOUNDS = {Regime.LOW_POSE: (250, 300), Regime.HIGH_POSE: (900, 1000)}
DEFAULT_BUDGETS = {Regime.LOW_POSE: 300, Regime.HIGH_POSE: 1000}


@dataclass(frozen=True)
class RegimeSpec:
    """Total image budget (training plus generated) for one run."""

    name: Regime
    total_budget: int

    def __post_init__(self):
        name = Regime(self.name)
        object.__setattr__(self, "name", name)
        if int(self.total_budget) != self.total_budget or self.total_budget < 1:
            raise ValueError(f"total_budget must be a positive integer, got {self.total_budget!r}")
        lo, hi = self.bounds
        if not lo <= self.total_budget <= hi:
            raise ValueError(
                f"{name.value} regime budget must lie in [{lo}, {hi}], got {self.total_budget}")

    @classmethod
    def low(cls, budget=DEFAULT_BUDGETS[Regime.LOW_POSE]):
        return cls(Regime.LOW_POSE, budget)

    @classmethod
    def high(cls, budget=DEFAULT_BUDGETS[Regime.HIGH_POSE]):
        return cls(Regime.HIGH_POSE, budget)

    @property
    def bounds(self):
        return REGIME_BOUNDS.get(self.name, (1, self.total_budget))

    def to_dict(self):
        return {"name": self.name.value, "total_budget": self.total_budget,
                "bounds": list(self.bounds)}


def regime_children(training_count, epochs, regime):
    """Children per epoch so that training + epochs * children fits the budget."""
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    if training_count >= regime.total_budget:
        raise BudgetInfeasible(
            f"{training_count} training images already meet the budget of {regime.total_budget}")
    children = (regime.total_budget - training_count) // epochs
    total = training_count + epochs * children
    lo, hi = regime.bounds
    if children < 1 or not lo <= total <= hi:
        raise BudgetInfeasible(
            f"{training_count} training + {epochs} x {children} children = {total} images, "
            f"outside [{lo}, {hi}]")
    return children


# -- reports -----------------------------------------------------------------

def candidate_row(c):
    return [c.id, c.provenance, c.epoch, repr(c.score),
            *(repr(float(v) + 0.0) for v in c.pose.origin),
            *(repr(float(v) + 0.0) for v in c.pose.look_at),
            *(repr(float(v) + 0.0) for v in c.pose.up)]


def candidate_dict(c):
    return {
        "id": c.id,
        "provenance": c.provenance,
        "epoch": c.epoch,
        "score": c.score,
        "origin": [float(v) for v in c.pose.origin],
        "look_at": [float(v) for v in c.pose.look_at],
        "up": [float(v) for v in c.pose.up],
    }


def write_candidates_csv(candidates, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for c in candidates:
            writer.writerow(candidate_row(c))


def read_candidates_csv(path):
    """Rows of a candidate table as dicts with numeric fields converted."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        rows = []
        for row in reader:
            out = {k: float(v) for k, v in row.items() if k not in ("id", "provenance", "epoch")}
            out["id"] = int(row["id"])
            out["epoch"] = int(row["epoch"])
            out["provenance"] = row["provenance"]
            rows.append(out)
    return rows


@dataclass
class RunReport:
    """Outcome of one search run.

    ``timings`` holds wall-clock seconds per phase and is kept out of
    :meth:`to_dict` by default so the serialized report is reproducible.
    ``candidates`` is the whole population in insertion order; only the
    top-k list is serialized to JSON (the full table goes to CSV).
    """

    config: dict
    epochs: list
    training_count: int
    total_images: int
    render_count: int
    evaluations: int
    cvir: float
    mcvir: float
    cvir_uninverted: float
    mcvir_uninverted: float
    top: list
    shortfall: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    stopped_early_at: int = None
    timings: dict = field(default_factory=dict)
    candidates: list = field(default_factory=list, repr=False)
    interpolated_pairs: list = field(default_factory=list, repr=False)

    @property
    def best_score(self):
        return self.top[0].score if self.top else None

    def to_dict(self, include_timings=False):
        d = {
            "config": self.config,
            "training_count": self.training_count,
            "total_images": self.total_images,
            "render_count": self.render_count,
            "evaluations": self.evaluations,
            "cvir": self.cvir,
            "mcvir": self.mcvir,
            "cvir_uninverted": self.cvir_uninverted,
            "mcvir_uninverted": self.mcvir_uninverted,
            "best_score": self.best_score,
            "epochs": self.epochs,
            "stopped_early_at": self.stopped_early_at,
            "shortfall": self.shortfall,
            "failures": self.failures,
            "notes": self.notes,
            "top": [candidate_dict(c) for c in self.top],
        }
        if include_timings:
            d["timings"] = self.timings
        return d

    def to_json(self, include_timings=False):
        return json.dumps(self.to_dict(include_timings), indent=2) + "\n"
