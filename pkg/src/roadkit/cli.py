"""Command-line front end for the road-network toolkit.

Subcommands: labelgen, vectorize, eval, tile-plan, ga-forward, losscheck,
check. A JSON config file can supply any option; explicit flags win over the
config, which wins over defaults. ``ROADKIT_THREADS`` caps the worker pool.
Exit codes: 0 success, 1 validation failure, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import attention, formats, labels, losses, metrics, tiling, vectorize
from .graph import (
    GraphParseError,
    GraphSchemaError,
    RoadGraph,
    Window,
    crop_graph,
    parse_graph,
    serialize_graph,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


@dataclass(frozen=True)
class RunConfig:
    """Merged defaults / config-file / flag settings for one invocation."""

    input: str | None = None
    pred: str | None = None
    gt: str | None = None
    out: str | None = None
    width: int = 256
    height: int = 256
    theta: float = 2.0
    lam: float = math.exp(-0.5)
    node_radius: float = 4.0
    rho: float = 3.0
    snap_radius: float = 4.0
    sample_spacing: float = 50.0
    rdp_tolerance: float = vectorize.DEFAULT_RDP_TOLERANCE
    min_spur: float = vectorize.DEFAULT_MIN_SPUR
    patch: int = tiling.DEFAULT_PATCH
    stride: int = tiling.DEFAULT_STRIDE
    margin: int = tiling.DEFAULT_MARGIN
    features: str | None = None
    weights: str | None = None
    reduction: int = 4
    trials: int = 100
    threads: int = 0  # 0 = hardware default
    seed: int = 0


def _load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    path = getattr(args, "config", None)
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise SystemExit(_io_error(f"cannot read config {path}: {exc}"))
        except json.JSONDecodeError as exc:
            raise SystemExit(_validation_error(f"bad config {path}: {exc}"))
        known = {f.name for f in fields(RunConfig)}
        unknown = set(doc) - known
        if unknown:
            raise SystemExit(_validation_error(f"unknown config keys: {sorted(unknown)}"))
        cfg = replace(cfg, **doc)
    overrides = {
        f.name: getattr(args, f.name)
        for f in fields(RunConfig)
        if getattr(args, f.name, None) is not None
    }
    return replace(cfg, **overrides)


def _io_error(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_IO


def _validation_error(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_VALIDATION


def _thread_count(cfg: RunConfig) -> int:
    env = os.environ.get("ROADKIT_THREADS")
    if env:
        return max(1, int(env))
    if cfg.threads > 0:
        return cfg.threads
    return max(1, os.cpu_count() or 1)


def _collect(path_str: str, suffixes: tuple[str, ...]) -> list[Path]:
    path = Path(path_str)
    if path.is_file():
        return [path]
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix in suffixes)
    raise FileNotFoundError(path_str)


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _run_parallel(items, worker, threads: int) -> list:
    if threads <= 1:
        return [worker(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, items))


def cmd_labelgen(cfg: RunConfig) -> int:
    if not cfg.input or not cfg.out:
        return _validation_error("labelgen requires --input and --out")
    try:
        files = _collect(cfg.input, (".json",))
    except FileNotFoundError as exc:
        return _io_error(f"input not found: {exc}")
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = labels.LabelParams(theta=cfg.theta, lam=cfg.lam, node_radius=cfg.node_radius)
    window = Window(0, 0, cfg.width, cfg.height)

    def work(path: Path) -> tuple[str, str | None]:
        try:
            g = crop_graph(parse_graph(path.read_text()), window)
        except (GraphParseError, GraphSchemaError, OSError) as exc:
            return path.stem, str(exc)
        mask, conn = labels.connectivity_label(g, cfg.width, cfg.height, params)
        formats.write_mask_pgm(out_dir / f"{path.stem}_mask.pgm", mask)
        formats.write_connectivity_pgm(out_dir / f"{path.stem}_conn.pgm", conn)
        return path.stem, None

    results = sorted(_run_parallel(files, work, _thread_count(cfg)))
    failures = {stem: err for stem, err in results if err}
    summary = {"processed": len(results) - len(failures), "failed": failures}
    _emit(summary, None)
    return EXIT_VALIDATION if failures else EXIT_OK


def cmd_vectorize(cfg: RunConfig) -> int:
    if not cfg.input or not cfg.out:
        return _validation_error("vectorize requires --input and --out")
    try:
        files = _collect(cfg.input, (".pgm",))
    except FileNotFoundError as exc:
        return _io_error(f"input not found: {exc}")
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def work(path: Path) -> tuple[str, str | None]:
        try:
            mask = formats.read_mask_pgm(path)
        except (formats.FormatError, OSError) as exc:
            return path.stem, str(exc)
        g = vectorize.mask_to_graph(mask, cfg.rdp_tolerance, cfg.min_spur)
        (out_dir / f"{path.stem}.json").write_text(serialize_graph(g))
        return path.stem, None

    results = sorted(_run_parallel(files, work, _thread_count(cfg)))
    failures = {stem: err for stem, err in results if err}
    _emit({"processed": len(results) - len(failures), "failed": failures}, None)
    return EXIT_VALIDATION if failures else EXIT_OK


def _load_pair(pred: Path, gt: Path, cfg: RunConfig) -> dict:
    params = metrics.AplsParams(snap_radius=cfg.snap_radius, sample_spacing=cfg.sample_spacing)
    record: dict = {"id": pred.stem}
    if pred.suffix == ".pgm":
        pm = formats.read_mask_pgm(pred)
        gm = formats.read_mask_pgm(gt)
        score = metrics.pixel_score(pm, gm, cfg.rho)
        record["iou"] = score.iou
        record["relaxed_iou"] = score.relaxed_iou
        record["rho"] = score.rho
        pg = vectorize.mask_to_graph(pm, cfg.rdp_tolerance, cfg.min_spur)
        gg = vectorize.mask_to_graph(gm, cfg.rdp_tolerance, cfg.min_spur)
        record["apls"] = metrics.apls(gg, pg, params)
    else:
        pg = parse_graph(pred.read_text())
        gg = parse_graph(gt.read_text())
        record["apls"] = metrics.apls(gg, pg, params)
    return record


def cmd_eval(cfg: RunConfig) -> int:
    if not cfg.pred or not cfg.gt:
        return _validation_error("eval requires --pred and --gt")
    try:
        pred_files = {p.stem: p for p in _collect(cfg.pred, (".pgm", ".json"))}
        gt_files = {p.stem: p for p in _collect(cfg.gt, (".pgm", ".json"))}
    except FileNotFoundError as exc:
        return _io_error(f"input not found: {exc}")
    orphans = sorted(set(pred_files) ^ set(gt_files))
    if orphans:
        return _validation_error(f"unpaired files: {orphans}")

    stems = sorted(pred_files)
    records = _run_parallel(
        stems, lambda s: _load_pair(pred_files[s], gt_files[s], cfg), _thread_count(cfg)
    )
    records.sort(key=lambda r: r["id"])
    means = {}
    for key in ("iou", "relaxed_iou", "apls"):
        vals = [r[key] for r in records if key in r]
        if vals:
            means[key] = sum(vals) / len(vals)
    _emit({"records": records, "means": means}, cfg.out)
    return EXIT_OK


def cmd_tile_plan(cfg: RunConfig) -> int:
    try:
        plan = tiling.plan_tiles(cfg.width, cfg.height, cfg.patch, cfg.stride, cfg.margin)
    except ValueError as exc:
        return _validation_error(str(exc))
    _emit(tiling.plan_to_dict(plan), cfg.out)
    return EXIT_OK


def cmd_ga_forward(cfg: RunConfig) -> int:
    if not cfg.features:
        return _validation_error("ga-forward requires --features")
    try:
        v = formats.read_feature_stack(cfg.features)
    except (formats.FormatError, OSError) as exc:
        return _io_error(str(exc))
    if cfg.weights:
        try:
            doc = json.loads(Path(cfg.weights).read_text())
            params = attention.GaParams(
                np.asarray(doc["w1"], dtype=np.float64),
                np.asarray(doc["b1"], dtype=np.float64),
                np.asarray(doc["w2"], dtype=np.float64),
                np.asarray(doc["b2"], dtype=np.float64),
            )
        except OSError as exc:
            return _io_error(str(exc))
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            return _validation_error(f"bad weight file: {exc}")
    else:
        rng = np.random.default_rng(cfg.seed)
        params = attention.GaParams.random(v.shape[0], cfg.reduction, rng)
    try:
        out = attention.ga_module(v, params)
    except ValueError as exc:
        return _validation_error(str(exc))
    _emit(
        {
            "shape": list(out.shape),
            "input_mean": float(v.mean()),
            "output_mean": float(out.mean()),
            "output_min": float(out.min()),
            "output_max": float(out.max()),
        },
        cfg.out,
    )
    return EXIT_OK


def _gradient_checks(cfg: RunConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    report = {}

    worst = 0.0
    for _ in range(cfg.trials):
        c, h, w = 3, 4, 4
        pred = rng.uniform(0.05, 0.95, (c, h, w))
        gt = np.zeros((c, h, w))
        picks = rng.integers(0, c, (h, w))
        for ci in range(c):
            gt[ci][picks == ci] = 1.0
        _, grad = losses.soft_iou_loss(pred, gt)
        numeric = losses.finite_diff_gradient(lambda x: losses.soft_iou_loss(x, gt)[0], pred)
        worst = max(worst, losses.max_relative_error(grad, numeric))
    report["soft_iou_grad_max_rel_err"] = worst

    worst = 0.0
    for _ in range(cfg.trials):
        c, h, w = 3, 4, 4
        pred = rng.uniform(0.05, 0.95, (c, h, w))
        gt = np.zeros((c, h, w))
        picks = rng.integers(0, c, (h, w))
        for ci in range(c):
            gt[ci][picks == ci] = 1.0
        weights = losses.inverse_boundary_weights(gt.mean(axis=(1, 2)))
        _, grad = losses.balanced_ce_loss(pred, gt, weights)
        numeric = losses.finite_diff_gradient(
            lambda x: losses.balanced_ce_loss(x, gt, weights)[0], pred
        )
        worst = max(worst, losses.max_relative_error(grad, numeric))
    report["balanced_ce_grad_max_rel_err"] = worst

    ga_trials = max(1, cfg.trials // 5)
    worst = 0.0
    for _ in range(ga_trials):
        c, h, w = 4, 5, 5
        v = rng.uniform(-1.0, 1.0, (c, h, w))
        params = attention.GaParams.random(c, 2, rng)
        probe = rng.uniform(-1.0, 1.0, (c, h, w))
        grad, _ = attention.ga_backward(v, params, probe)
        numeric = losses.finite_diff_gradient(
            lambda x: float((attention.ga_module(x, params) * probe).sum()), v
        )
        worst = max(worst, losses.max_relative_error(grad, numeric))
    report["ga_module_grad_max_rel_err"] = worst

    worst = 0.0
    for _ in range(ga_trials):
        c, h, w = 4, 6, 6
        v = rng.uniform(-1.0, 1.0, (c, h, w))
        params = attention.GaParams.random(c, 2, rng)
        branch = attention.ResidualBranchParams.random(c, rng)
        probe = rng.uniform(-1.0, 1.0, (c, h, w))
        grad, _, _ = attention.ga_resblock_backward(v, params, branch, probe)
        numeric = losses.finite_diff_gradient(
            lambda x: float((attention.ga_resblock(x, params, branch) * probe).sum()), v
        )
        worst = max(worst, losses.max_relative_error(grad, numeric))
    report["ga_resblock_grad_max_rel_err"] = worst
    return report


def cmd_losscheck(cfg: RunConfig) -> int:
    report = _gradient_checks(cfg)
    tol = 1e-4
    report["tolerance"] = tol
    report["passed"] = all(v < tol for k, v in report.items() if k.endswith("rel_err"))
    _emit(report, cfg.out)
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


def _random_graph(rng: np.random.Generator, spacing: int = 20, grid: int = 4) -> RoadGraph:
    """Random tree of axis-aligned lattice hops; edges never cross or overlap."""
    from .graph import GraphBuilder

    sites = [(x * spacing, y * spacing) for x in range(grid) for y in range(grid)]
    k = int(rng.integers(2, len(sites) + 1))
    chosen = [sites[i] for i in rng.choice(len(sites), size=k, replace=False)]
    builder = GraphBuilder()
    tree = [chosen[0]]
    rest = chosen[1:]
    while rest:
        site = rest[0]
        anchor = min(tree, key=lambda a: abs(site[0] - a[0]) + abs(site[1] - a[1]))
        x, y = anchor
        path = [(x, y)]
        while x != site[0]:
            x += spacing if site[0] > x else -spacing
            path.append((x, y))
        while y != site[1]:
            y += spacing if site[1] > y else -spacing
            path.append((x, y))
        last = max(i for i, p in enumerate(path) if p in tree)
        path = path[last:]
        for p, q in zip(path, path[1:]):
            builder.add_polyline([(float(p[0]), float(p[1])), (float(q[0]), float(q[1]))])
        tree.extend(path[1:])
        rest = [s for s in rest if s not in tree]
    return builder.build()


def cmd_check(cfg: RunConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    report: dict = {"checks": {}}

    worst = 0.0
    for _ in range(50):
        h = int(rng.integers(4, 33))
        w = int(rng.integers(4, 33))
        mask = (rng.random((h, w)) < 0.15).astype(np.uint8)
        exact = labels.distance_map(mask)
        brute = labels.brute_force_distance_map(mask)
        finite = np.isfinite(brute)
        if finite.any():
            worst = max(worst, float(np.max(np.abs(exact[finite] - brute[finite]))))
        if not np.array_equal(np.isfinite(exact), finite):
            worst = math.inf
    report["checks"]["distance_map_max_abs_err"] = {"value": worst, "passed": worst < 1e-6}

    identical = all(
        metrics.snap_similarity(g, g) == 1.0 for g in (_random_graph(rng) for _ in range(20))
    )
    report["checks"]["apls_identity"] = {"value": identical, "passed": identical}

    grads = _gradient_checks(replace(cfg, trials=min(cfg.trials, 20)))
    for key, value in grads.items():
        report["checks"][key] = {"value": value, "passed": value < 1e-4}

    report["passed"] = all(c["passed"] for c in report["checks"].values())
    _emit(report, cfg.out)
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roadkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, *opts):
        p = sub.add_parser(name)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--threads", type=int)
        p.add_argument("--seed", type=int)
        for args, kwargs in opts:
            p.add_argument(*args, **kwargs)
        return p

    add(
        "labelgen",
        cmd_labelgen,
        (("--input",), {"help": "graph-JSON file or directory"}),
        (("--width",), {"type": int}),
        (("--height",), {"type": int}),
        (("--theta",), {"type": float}),
        (("--lam",), {"type": float, "help": "Gaussian threshold in (0,1)"}),
        (("--node-radius",), {"type": float, "dest": "node_radius"}),
    )
    add(
        "vectorize",
        cmd_vectorize,
        (("--input",), {"help": "PGM mask file or directory"}),
        (("--rdp-tolerance",), {"type": float, "dest": "rdp_tolerance"}),
        (("--min-spur",), {"type": float, "dest": "min_spur"}),
    )
    add(
        "eval",
        cmd_eval,
        (("--pred",), {"help": "prediction file or directory (.pgm or .json)"}),
        (("--gt",), {"help": "ground-truth file or directory"}),
        (("--rho",), {"type": float}),
        (("--snap-radius",), {"type": float, "dest": "snap_radius"}),
        (("--sample-spacing",), {"type": float, "dest": "sample_spacing"}),
        (("--rdp-tolerance",), {"type": float, "dest": "rdp_tolerance"}),
        (("--min-spur",), {"type": float, "dest": "min_spur"}),
    )
    add(
        "tile-plan",
        cmd_tile_plan,
        (("--width",), {"type": int}),
        (("--height",), {"type": int}),
        (("--patch",), {"type": int}),
        (("--stride",), {"type": int}),
        (("--margin",), {"type": int}),
    )
    add(
        "ga-forward",
        cmd_ga_forward,
        (("--features",), {"help": "RGKT feature-stack file"}),
        (("--weights",), {"help": "JSON weight file with w1/b1/w2/b2"}),
        (("--reduction",), {"type": int}),
    )
    add("losscheck", cmd_losscheck, (("--trials",), {"type": int}))
    add("check", cmd_check, (("--trials",), {"type": int}))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_VALIDATION
    return args.func(cfg)


if __name__ == "__main__":
    sys.exit(main())
