"""Command-line front end.

Subcommands:
    run      one search run; writes report.json, candidates.csv, timings.json
    matrix   sweep scenes x modes x regimes x seeds; writes aggregate.csv
    oracle   exhaustive grid evaluation; writes oracle.json and oracle.csv
    ring     write a synthetic training pose file around a scene

Progress goes to stderr; machine-readable output only to files.
Exit codes: 0 ok, 2 invalid configuration, 3 scorer or render failure,
1 when some matrix cells failed.
"""

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (BudgetInfeasible, ConfigError, GridTooLarge, MalformedMatrix, ParseError,
                     ScorerError)
from .geometry import generate_pose
from .metrics import (DEFAULT_BUDGETS, Regime, RegimeSpec, regime_children,
                      write_candidates_csv)
from .oracle import PoseGrid, brute_force_best, grid_quantile, spread_targets
from .scene import load_posed_set, load_scene, render, save_posed_set, training_ring, write_ppm
from .scoring import ExternalScorer, gaussian_scorer, salient_scorer
from .search import SearchConfig, default_workers, explore_scene

log = logging.getLogger("scenescout")

EXIT_OK = 0
EXIT_CELL_FAILED = 1
EXIT_CONFIG = 2
EXIT_SCORER = 3

SCORERS = ("salient", "gaussian", "external")


def _floats(text, n=3):
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    if len(values) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return values


def _ints(text):
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 3 comma-separated integers, got {text!r}")
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected 3 comma-separated integers, got {text!r}")
    return values


def _u64(text):
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def parse_scorer_args(pairs):
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError("scorer-arg", f"expected key=value, got {item!r}")
        out[key] = value
    return out


def build_scorer(name, args, scene=None):
    """Instantiate a scorer from its CLI name and ``key=value`` arguments."""
    args = dict(args)
    try:
        if name == "salient":
            if "color" in args:
                color = tuple(int(v) for v in args.pop("color").split(","))
            elif scene is not None:
                color = scene.spheres[0].color
            else:
                raise ConfigError("scorer-arg", "salient scorer needs color=r,g,b")
            scorer = salient_scorer(color, int(args.pop("tolerance", 0)))
        elif name == "gaussian":
            origin = _floats(args.pop("peak_origin", "0,0,0"))
            look = _floats(args.pop("peak_look", "0,0,-1"))
            up = _floats(args.pop("peak_up", "0,1,0"))
            scorer = gaussian_scorer(generate_pose(origin, look, up),
                                     float(args.pop("length_scale", 1.0)))
        elif name == "external":
            if "cmd" not in args:
                raise ConfigError("scorer-arg", "external scorer needs cmd=<command>")
            scorer = ExternalScorer(args.pop("cmd"), timeout=float(args.pop("timeout", 60.0)))
        else:
            raise ConfigError("scorer", f"unknown scorer {name!r}; choose from {SCORERS}")
    except (argparse.ArgumentTypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("scorer-arg", str(exc)) from None
    if args:
        raise ConfigError("scorer-arg", f"unknown arguments for {name}: {sorted(args)}")
    return scorer


def build_regime(name, budget):
    try:
        regime = Regime(name)
    except ValueError:
        raise ConfigError("regime", f"unknown regime {name!r}") from None
    if budget is None:
        if regime is Regime.CUSTOM:
            raise ConfigError("budget", "the custom regime needs --budget")
        budget = DEFAULT_BUDGETS[regime]
    try:
        return RegimeSpec(regime, int(budget))
    except ValueError as exc:
        raise ConfigError("budget", str(exc)) from None


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def execute_run(scene_path, poses_path, mode, regime, epochs, topk, topc, seed, scorer_name,
                scorer_args, out, threshold=None, save_images=False, workers=None):
    """Run one search and write its outputs to ``out``; returns the report."""
    scene = load_scene(scene_path)
    training = load_posed_set(poses_path)
    scorer = build_scorer(scorer_name, scorer_args, scene)
    try:
        children = regime_children(len(training), epochs, regime)
    except (BudgetInfeasible, ValueError) as exc:
        raise ConfigError("budget", str(exc)) from None
    config = SearchConfig(mode, epochs, children, topk, topc, seed, threshold)
    top, report = explore_scene(training, scene, scorer, config, workers=workers)
    report.config.update({
        "regime": regime.to_dict(),
        "scorer": {**report.config["scorer"], "cli_name": scorer_name,
                   "cli_args": dict(sorted(scorer_args.items()))},
        "scene": {"path": str(scene_path), "sha256": _sha256(scene_path)},
        "poses": {"path": str(poses_path), "sha256": _sha256(poses_path)},
        "version": __version__,
    })
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    write_candidates_csv(report.candidates, out / "candidates.csv")
    (out / "timings.json").write_text(json.dumps(report.timings, indent=2) + "\n")
    if save_images and scorer.needs_render:
        for rank, c in enumerate(top):
            write_ppm(render(scene, c.pose), out / f"top_{rank:02d}_id{c.id}.ppm")
    return report


def cmd_run(args):
    regime = build_regime(args.regime, args.budget)
    report = execute_run(args.scene, args.poses, args.mode, regime, args.epochs, args.topk,
                         args.topc, args.seed, args.scorer, parse_scorer_args(args.scorer_arg),
                         args.out, args.threshold, args.save_images)
    if report.failures:
        log.error("%d poses could not be scored; see report.json", len(report.failures))
        return EXIT_SCORER
    return EXIT_OK


AGGREGATE_HEADER = ["scene", "mode", "regime", "budget", "seed", "status", "cvir", "mcvir",
                    "best_score", "renders", "total_images", "wall_time_s", "run_dir"]


def load_matrix(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("matrix", f"cannot read {path}: {exc}") from None
    base = path.parent
    for key in ("scenes", "modes", "regimes", "seeds"):
        if not doc.get(key):
            raise ConfigError(key, "must be a nonempty list")
    scenes = []
    for i, s in enumerate(doc["scenes"]):
        if not isinstance(s, dict) or "scene" not in s or "poses" not in s:
            raise ConfigError(f"scenes[{i}]", "needs 'scene' and 'poses' paths")
        scenes.append({"name": s.get("name", Path(s["scene"]).stem),
                       "scene": base / s["scene"], "poses": base / s["poses"]})
    regimes = [build_regime(r["name"], r.get("budget")) if isinstance(r, dict)
               else build_regime(r, None) for r in doc["regimes"]]
    scorer = doc.get("scorer", {"name": "salient"})
    for m in doc["modes"]:
        SearchConfig(m, topc=int(doc.get("topc", 10)))
    return {
        "scenes": scenes,
        "modes": [str(m).lower() for m in doc["modes"]],
        "regimes": regimes,
        "seeds": [_u64(str(s)) for s in doc["seeds"]],
        "scorer": scorer.get("name", "salient"),
        "scorer_args": {k: str(v) for k, v in scorer.get("args", {}).items()},
        "epochs": int(doc.get("epochs", 5)),
        "topk": int(doc.get("topk", 10)),
        "topc": int(doc.get("topc", 10)),
    }


def cmd_matrix(args):
    matrix = load_matrix(args.matrix)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    failed = 0
    for scene in matrix["scenes"]:
        for mode in matrix["modes"]:
            for regime in matrix["regimes"]:
                for seed in matrix["seeds"]:
                    run_dir = (out / scene["name"]
                               / f"{mode}_{regime.name.value}{regime.total_budget}_seed{seed}")
                    row = {"scene": scene["name"], "mode": mode, "regime": regime.name.value,
                           "budget": regime.total_budget, "seed": seed, "run_dir": str(run_dir)}
                    t0 = time.perf_counter()
                    try:
                        report = execute_run(scene["scene"], scene["poses"], mode, regime,
                                             matrix["epochs"], matrix["topk"], matrix["topc"],
                                             seed, matrix["scorer"], matrix["scorer_args"],
                                             run_dir)
                        row.update(status="ok" if not report.failures else "scorer_failures",
                                   cvir=repr(report.cvir), mcvir=repr(report.mcvir),
                                   best_score=repr(report.best_score),
                                   renders=report.render_count, total_images=report.total_images)
                        failed += bool(report.failures)
                    except Exception as exc:  # a failed cell must not stop the sweep
                        failed += 1
                        row["status"] = f"failed: {type(exc).__name__}: {exc}"
                        log.error("cell %s failed: %s", run_dir, exc)
                    row["wall_time_s"] = f"{time.perf_counter() - t0:.3f}"
                    rows.append(row)
                    log.info("cell %s: %s", run_dir, row["status"])
    with open(out / "aggregate.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, AGGREGATE_HEADER, lineterminator="\n", restval="")
        writer.writeheader()
        writer.writerows(rows)
    return EXIT_CELL_FAILED if failed else EXIT_OK


def cmd_oracle(args):
    scene = load_scene(args.scene)
    scorer = build_scorer(args.scorer, parse_scorer_args(args.scorer_arg), scene)
    first = scene.spheres[0]
    center = np.asarray(first.center)
    extent = 5.0 * first.radius
    mins = args.grid_min or tuple(center - extent)
    maxs = args.grid_max or tuple(center + extent)
    targets = list(args.target or [])
    if not targets:
        targets = spread_targets(first.center, first.radius, args.targets)
    elif args.targets_given:
        raise ConfigError("targets", "use either --targets or --target, not both")
    try:
        grid = PoseGrid(mins, maxs, args.grid_steps, targets, args.up)
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None
    try:
        result = brute_force_best(scene, scorer, grid, workers=default_workers())
    except GridTooLarge as exc:
        raise ConfigError("grid-steps", str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    best = result.best
    doc = {
        "scene": {"path": str(args.scene), "sha256": _sha256(args.scene)},
        "scorer": {"name": scorer.name, "params": scorer.params},
        "grid": {"mins": list(grid.mins), "maxs": list(grid.maxs), "steps": list(grid.steps),
                 "targets": [list(t) for t in grid.targets], "up": list(grid.up)},
        "evaluations": grid.size,
        "degenerate_skipped": result.skipped,
        "best": {"score": best.score, "origin": best.pose.origin.tolist(),
                 "look_at": best.pose.look_at.tolist(), "up": best.pose.up.tolist()},
        "quantiles": {str(q): grid_quantile(result.scores, q)
                      for q in (0.0, 0.5, 0.9, 0.99, 1.0)},
    }
    (out / "oracle.json").write_text(json.dumps(doc, indent=2) + "\n")
    write_candidates_csv(result.candidates, out / "oracle.csv")
    log.info("oracle: %d grid poses, best score %g", grid.size, best.score)
    return EXIT_OK


def cmd_ring(args):
    scene = load_scene(args.scene)
    save_posed_set(training_ring(scene, args.count, args.radius, args.height), args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="scenescout", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scorer(p):
        p.add_argument("--scorer", default="salient", choices=SCORERS)
        p.add_argument("--scorer-arg", action="append", metavar="K=V", default=[])

    run = sub.add_parser("run", help="run one search")
    run.add_argument("--scene", required=True)
    run.add_argument("--poses", required=True)
    run.add_argument("--mode", required=True, type=str.lower, choices=("grs", "pibs", "egps"))
    run.add_argument("--regime", default="low", choices=("low", "high", "custom"))
    run.add_argument("--budget", type=int)
    run.add_argument("--epochs", type=int, default=5)
    run.add_argument("--topk", type=int, default=10)
    run.add_argument("--topc", type=int, default=10)
    run.add_argument("--seed", type=_u64, default=0)
    run.add_argument("--threshold", type=float, help="stop once the best score reaches this")
    run.add_argument("--save-images", action="store_true", help="write top-k renders as PPM")
    run.add_argument("--out", required=True)
    add_scorer(run)
    run.set_defaults(func=cmd_run)

    mat = sub.add_parser("matrix", help="sweep an experiment matrix file")
    mat.add_argument("matrix")
    mat.add_argument("--out", required=True)
    mat.set_defaults(func=cmd_matrix)

    orc = sub.add_parser("oracle", help="exhaustive grid evaluation")
    orc.add_argument("--scene", required=True)
    orc.add_argument("--grid-min", type=_floats, help="x,y,z (write as --grid-min=-5,-5,-5)")
    orc.add_argument("--grid-max", type=_floats)
    orc.add_argument("--grid-steps", type=_ints, default=(11, 11, 11))
    orc.add_argument("--targets", type=int, default=None,
                     help="number of aim points spread around the first sphere (default 4)")
    orc.add_argument("--target", type=_floats, action="append", help="explicit aim point x,y,z")
    orc.add_argument("--up", type=_floats, default=(0.0, 1.0, 0.0))
    orc.add_argument("--out", required=True)
    add_scorer(orc)
    orc.set_defaults(func=cmd_oracle)

    ring = sub.add_parser("ring", help="write a ring of training poses around a scene")
    ring.add_argument("--scene", required=True)
    ring.add_argument("--count", type=int, default=35)
    ring.add_argument("--radius", type=float, default=5.0)
    ring.add_argument("--height", type=float, default=0.0)
    ring.add_argument("--out", required=True)
    ring.set_defaults(func=cmd_ring)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "oracle":
        args.targets_given = args.targets is not None
        if args.targets is None:
            args.targets = 4
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"scenescout: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, MalformedMatrix, FileNotFoundError, ValueError) as exc:
        print(f"scenescout: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScorerError as exc:
        print(f"scenescout: scorer failure: {exc}", file=sys.stderr)
        return EXIT_SCORER


if __name__ == "__main__":
    sys.exit(main())
