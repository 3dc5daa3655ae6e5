"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line so the suite doubles as a release report:
run ``pytest tests/test_acceptance.py -v -s`` to see them.
"""

import json
import math
import time

import numpy as np

from roadkit.cli import main
from roadkit.formats import write_mask_pgm
from roadkit.graph import GraphBuilder, node_degrees, parse_graph
from roadkit.labels import (
    LabelParams,
    brute_force_distance_map,
    connectivity_label,
    distance_map,
)
from roadkit.losses import (
    balanced_ce_loss,
    finite_diff_gradient,
    inverse_boundary_weights,
    max_relative_error,
    soft_iou_loss,
)
from roadkit.attention import (
    GaParams,
    ResidualBranchParams,
    ga_backward,
    ga_module,
    ga_resblock,
    ga_resblock_backward,
)
from roadkit.metrics import apls, iou, relaxed_iou, snap_similarity
from roadkit.tiling import plan_tiles, stitch
from roadkit.vectorize import mask_to_graph, prune_hanging, simplify_rdp
from roadkit.vectorize import _point_segment_distance

from conftest import lattice_tree_graph


def report(name: str, ok: bool) -> None:
    print(f"{'PASS' if ok else 'FAIL'}: {name}", flush=True)
    assert ok, name


def test_acceptance_distance_map_oracle():
    rng = np.random.default_rng(101)
    start = time.monotonic()
    worst = 0.0
    for _ in range(50):
        h = int(rng.integers(2, 65))
        w = int(rng.integers(2, 65))
        mask = (rng.random((h, w)) < 0.1).astype(np.uint8)
        exact = distance_map(mask)
        brute = brute_force_distance_map(mask)
        finite = np.isfinite(brute)
        if not np.array_equal(np.isfinite(exact), finite):
            worst = math.inf
            break
        if finite.any():
            worst = max(worst, float(np.max(np.abs(exact[finite] - brute[finite]))))
    elapsed = time.monotonic() - start
    report(
        f"distance map matches brute force on 50 masks (max err {worst:.2e}, {elapsed:.1f}s)",
        worst < 1e-6 and elapsed < 10.0,
    )


def test_acceptance_connectivity_labels():
    rng = np.random.default_rng(202)
    params = LabelParams()
    violations = 0
    for _ in range(30):
        g = lattice_tree_graph(rng)
        _, conn = connectivity_label(g, 200, 200, params)
        degs = node_degrees(g)
        for i, (x, y) in enumerate(g.nodes):
            if i in g.boundary_nodes:
                continue
            expected = min(degs[i], 5)
            if conn[int(round(y)), int(round(x))] != expected:
                violations += 1
        # midpoints of straight lattice edges are interior road pixels,
        # far from every node (half the lattice spacing away)
        for e in g.edges:
            (ax, ay), (bx, by) = g.nodes[e.a], g.nodes[e.b]
            mx, my = int(round((ax + bx) / 2)), int(round((ay + by) / 2))
            if conn[my, mx] != 2:
                violations += 1
    report(f"connectivity labels on 30 graphs ({violations} violations)", violations == 0)


def test_acceptance_apls_fixtures():
    rng = np.random.default_rng(303)
    ok = True
    for _ in range(5):
        g = lattice_tree_graph(rng)
        ok = ok and apls(g, g) == 1.0

    ref = parse_graph('{"nodes":[[0,0],[10,0]],"edges":[{"a":0,"b":1}]}')
    prop = parse_graph(
        '{"nodes":[[0,0],[10,0]],"edges":[{"a":0,"b":1,'
        '"polyline":[[0,0],[0,1],[10,1],[10,0]]}]}'
    )
    hand = snap_similarity(ref, prop)
    ok = ok and abs(hand - 0.8) <= 1e-9

    for _ in range(20):
        g = lattice_tree_graph(rng)
        k = int(rng.integers(0, len(g.edges)))
        pruned = GraphBuilder()
        for j, e in enumerate(g.edges):
            if j != k:
                pruned.add_polyline(list(e.polyline))
        ok = ok and apls(g, pruned.build()) < 1.0  # every tree edge is a bridge
    report(f"APLS fixtures (hand example {hand:.10f})", ok)


def test_acceptance_relaxed_iou():
    rng = np.random.default_rng(404)
    ok = True
    worst = 0.0
    for _ in range(50):
        h = int(rng.integers(4, 17))
        w = int(rng.integers(4, 17))
        pred = (rng.random((h, w)) < 0.3).astype(np.uint8)
        gt = (rng.random((h, w)) < 0.3).astype(np.uint8)
        ok = ok and abs(relaxed_iou(pred, gt, 0.0) - iou(pred, gt)) <= 1e-12
        prev = -1.0
        for rho in (0.0, 1.0, 2.0, 4.0):
            score = relaxed_iou(pred, gt, rho)
            ok = ok and score >= prev - 1e-12
            prev = score
            # brute-force buffered oracle
            d_gt = brute_force_distance_map(gt)
            d_pred = brute_force_distance_map(pred)
            tp = np.count_nonzero((pred > 0) & (d_gt <= rho))
            fp = np.count_nonzero((pred > 0) & (d_gt > rho))
            fn = np.count_nonzero((gt > 0) & (d_pred > rho))
            oracle = tp / (tp + fp + fn) if tp + fp + fn else 1.0
            worst = max(worst, abs(score - oracle))
    report(f"relaxed IoU contracts on 50 pairs (max oracle err {worst:.2e})", ok and worst < 1e-9)


def test_acceptance_gradient_checks():
    rng = np.random.default_rng(505)
    start = time.monotonic()
    worst = {"soft_iou": 0.0, "balanced_ce": 0.0, "ga_module": 0.0, "ga_resblock": 0.0}
    for _ in range(100):
        pred = rng.uniform(0.05, 0.95, (3, 4, 4))
        picks = rng.integers(0, 3, (4, 4))
        gt = np.stack([(picks == c).astype(float) for c in range(3)])
        _, grad = soft_iou_loss(pred, gt)
        numeric = finite_diff_gradient(lambda x: soft_iou_loss(x, gt)[0], pred)
        worst["soft_iou"] = max(worst["soft_iou"], max_relative_error(grad, numeric))
        weights = inverse_boundary_weights(gt.mean(axis=(1, 2)))
        _, grad = balanced_ce_loss(pred, gt, weights)
        numeric = finite_diff_gradient(lambda x: balanced_ce_loss(x, gt, weights)[0], pred)
        worst["balanced_ce"] = max(worst["balanced_ce"], max_relative_error(grad, numeric))
    for _ in range(20):
        v = rng.uniform(-1.0, 1.0, (4, 5, 5))
        params = GaParams.random(4, 2, rng)
        probe = rng.uniform(-1.0, 1.0, v.shape)
        grad, _ = ga_backward(v, params, probe)
        numeric = finite_diff_gradient(
            lambda x: float((ga_module(x, params) * probe).sum()), v
        )
        worst["ga_module"] = max(worst["ga_module"], max_relative_error(grad, numeric))
        branch = ResidualBranchParams.random(4, rng)
        grad, _, _ = ga_resblock_backward(v, params, branch, probe)
        numeric = finite_diff_gradient(
            lambda x: float((ga_resblock(x, params, branch) * probe).sum()), v
        )
        worst["ga_resblock"] = max(worst["ga_resblock"], max_relative_error(grad, numeric))
    elapsed = time.monotonic() - start
    detail = ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
    report(
        f"gradient checks ({detail}, {elapsed:.1f}s)",
        all(v < 1e-4 for v in worst.values()) and elapsed < 60.0,
    )


def test_acceptance_class_weight_formula():
    w = inverse_boundary_weights(np.array([0.0, 1.0])).as_array()
    report(
        f"class weights w(0)={w[0]:.4f}, w(1)={w[1]:.4f}",
        abs(w[0] - 50.4975) <= 1e-3 and abs(w[1] - 1.4222) <= 1e-3,
    )


def test_acceptance_vectorization_round_trip():
    rng = np.random.default_rng(606)
    ok = True
    worst = 1.0
    for _ in range(20):
        g = lattice_tree_graph(rng)  # junction separation 60 px >= 40 px
        mask, _ = connectivity_label(g, 200, 200)
        recovered = mask_to_graph(mask)
        truth_junctions = sum(1 for d in node_degrees(g).values() if d >= 3)
        rec_junctions = sum(1 for d in node_degrees(recovered).values() if d >= 3)
        score = apls(g, recovered)
        worst = min(worst, score)
        ok = ok and truth_junctions == rec_junctions and score >= 0.95
    report(f"vectorization round trip on 20 graphs (worst APLS {worst:.4f})", ok)


def test_acceptance_rdp_and_pruning_contracts():
    rng = np.random.default_rng(707)
    ok = True
    for _ in range(100):
        n = int(rng.integers(2, 20))
        pts = [(float(rng.uniform(0, 100)), float(rng.uniform(0, 100))) for _ in range(n)]
        dedup = [pts[0]]
        for p in pts[1:]:
            if p != dedup[-1]:
                dedup.append(p)
        simplified = simplify_rdp(dedup, 2.0)
        for p in dedup:
            dev = min(
                _point_segment_distance(p, a, b)
                for a, b in zip(simplified, simplified[1:])
            ) if len(simplified) > 1 else 0.0
            ok = ok and dev <= 2.0 + 1e-9
    for _ in range(100):
        b = GraphBuilder()
        n = int(rng.integers(2, 8))
        pts = [(float(rng.uniform(0, 100)), float(rng.uniform(0, 100))) for _ in range(n)]
        for i in range(1, n):
            j = int(rng.integers(0, i))
            if math.dist(pts[i], pts[j]) > 1e-6:
                b.add_polyline([pts[j], pts[i]])
        pruned = prune_hanging(b.build(), 30.0)
        degs = node_degrees(pruned)
        for e in pruned.edges:
            if degs[e.a] == 1 or degs[e.b] == 1:
                ok = ok and e.length() >= 30.0
    report("RDP and spur-pruning contracts on 100 random inputs", ok)


def test_acceptance_tiling():
    plan = plan_tiles(4096, 4096)
    cols = sorted({int(t.read.x0) for t in plan.tiles})
    rows = sorted({int(t.read.y0) for t in plan.tiles})
    cover = np.zeros((4096, 4096), dtype=np.int64)
    for t in plan.tiles:
        cover[
            int(t.write.y0) : int(t.write.y0 + t.write.height),
            int(t.write.x0) : int(t.write.x0 + t.write.width),
        ] += 1
    geometry_ok = (
        len(cols) == 11
        and len(rows) == 11
        and cols[-1] == 4096 - 512  # clamped last column
        and np.all(cover == 1)
    )

    rng = np.random.default_rng(808)
    image = rng.integers(0, 256, size=(1024, 1024), dtype=np.uint8)
    plan2 = plan_tiles(1024, 1024)
    outputs = [
        image[
            int(t.read.y0) : int(t.read.y0 + t.read.height),
            int(t.read.x0) : int(t.read.x0 + t.read.width),
        ]
        for t in plan2.tiles
    ]
    stitched = stitch(plan2, outputs)
    report(
        f"tiling plan 11x11 with disjoint coverage and bit-exact identity stitch",
        geometry_ok and np.array_equal(stitched, image),
    )


def test_acceptance_determinism(tmp_path, monkeypatch):
    pred = tmp_path / "pred"
    gt = tmp_path / "gt"
    pred.mkdir()
    gt.mkdir()
    rng = np.random.default_rng(909)
    for i in range(4):
        mask = np.zeros((60, 120), dtype=np.uint8)
        row = int(rng.integers(10, 45))
        mask[row : row + 3, 5:115] = 1
        write_mask_pgm(pred / f"s{i}.pgm", mask)
        shifted = np.roll(mask, 1, axis=0)
        write_mask_pgm(gt / f"s{i}.pgm", shifted)

    outputs = []
    for run, threads in ((1, "1"), (2, "1"), (3, "4")):
        monkeypatch.setenv("ROADKIT_THREADS", threads)
        check_out = tmp_path / f"check_{run}.json"
        eval_out = tmp_path / f"eval_{run}.json"
        rc1 = main(["check", "--trials", "10", "--seed", "5", "--out", str(check_out)])
        rc2 = main(["eval", "--pred", str(pred), "--gt", str(gt), "--out", str(eval_out)])
        outputs.append((rc1, rc2, check_out.read_bytes(), eval_out.read_bytes()))
    report(
        "check and eval outputs byte-identical across runs and thread counts",
        outputs[0] == outputs[1] == outputs[2] and outputs[0][0] == 0 and outputs[0][1] == 0,
    )
