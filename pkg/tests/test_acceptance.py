"""Acceptance gate: one test per criterion, each logging a PASS/FAIL line."""

import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from lipfree import MetricGraph
from lipfree.asq import asq_certificate, asq_family, refute_s_asq
from lipfree.decomposer import c_bound, decompose, verify_decomposition
from lipfree.free_space import lipschitz_constant_on, mcshane_extend, molecule_vector, norm, pair, transport
from lipfree.io import parse_vector
from lipfree.lasq import lasq_witness
from lipfree.sampling import (
    interval_graph,
    random_combination,
    random_graph,
    random_point,
    random_unit_vector,
    random_vector,
)

from oracles import dual_lp_norm
from helpers import inflated_provider, jittered_grid


def test_criterion_1_flow_matches_dual_lp(acceptance_log):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        G = random_graph(rng, max_vertices=8)
        v = random_vector(G, rng, max_atoms=6)
        worst = max(worst, abs(norm(G, v) - dual_lp_norm(G, v.atoms)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-7 and elapsed < 10
    acceptance_log(1, ok, f"200 instances, max |flow - LP| = {worst:.2e} (<= 1e-7), {elapsed:.1f}s (< 10s)")
    assert ok


def test_criterion_2_molecules_have_norm_one(acceptance_log):
    rng = np.random.default_rng(102)
    worst, interior = 0.0, 0
    for _ in range(100):
        G = random_graph(rng, max_vertices=8)
        p = random_point(G, rng, vertex_prob=0.3)
        q = random_point(G, rng, vertex_prob=0.3)
        while q == p:
            q = random_point(G, rng, vertex_prob=0.3)
        interior += (not p.is_vertex) or (not q.is_vertex)
        worst = max(worst, abs(norm(G, molecule_vector(G, p, q)) - 1.0))
    ok = worst <= 1e-9 and interior > 0
    acceptance_log(2, ok, f"100 molecules ({interior} with interior points), max |norm - 1| = {worst:.2e} (<= 1e-9)")
    assert ok


def test_criterion_3_decomposition_suite(acceptance_log):
    rng = np.random.default_rng(103)
    start = time.perf_counter()
    failures, worst_a, max_m = [], 0.0, 0
    for k in range(100):
        G = random_graph(rng, max_vertices=15, extra_edges=6)
        x = random_combination(G, rng, max_terms=4)
        eps = [0.5, 0.1][k % 2]
        D = decompose(G, x, eps)
        rep = verify_decomposition(G, x, D, eps)
        worst_a = max(worst_a, rep.conditions["(a)"]["value"])
        max_m = max(max_m, D.m)
        if not rep.ok or D.m > c_bound(len(x.terms)) or rep.conditions["(a)"]["value"] > 1e-9:
            failures.append((k, rep.failures()))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 60
    acceptance_log(
        3, ok, f"100 inputs, failures={failures}, max (a) gap {worst_a:.1e} (<= 1e-9), max m {max_m}, {elapsed:.1f}s (< 60s)"
    )
    assert ok


def test_criterion_4_inflated_paths(acceptance_log):
    failures, inflated_steps, worst_b, worst_split = [], 0, np.inf, np.inf
    for seed in range(50):
        rng = np.random.default_rng(10_400 + seed)
        G = jittered_grid(rng, k=int(rng.integers(2, 4)), jitter=float(rng.choice([1e-4, 1e-3, 1e-2])))
        x = random_combination(G, rng, max_terms=3, vertex_prob=1.0)
        eps = float(rng.choice([0.5, 0.1]))
        D = decompose(G, x, eps, inflated_provider)
        alpha = sum(t.weight for t in D.terms)
        slack_b = x.total_weight() + eps - alpha
        worst_b = min(worst_b, slack_b)
        ok = slack_b > 0
        for step in D.steps:
            inflated_steps += step.path_length > step.distance + 1e-12
            for split, cap in step.split_mass:
                worst_split = min(worst_split, cap - split)
                ok &= split <= cap + 1e-12
        if not ok:
            failures.append(seed)
    ok = not failures and inflated_steps > 0
    acceptance_log(
        4, ok,
        f"50 instances, {inflated_steps} inflated steps, min (b) slack {worst_b:.3g}, "
        f"min split-mass slack {worst_split:.1e}, failures={failures}",
    )
    assert ok


def test_criterion_5_lasq_witness(acceptance_log):
    start = time.perf_counter()
    failures, worst_pm, counts = [], 0.0, {}
    for k in range(50):
        rng = np.random.default_rng(10_500 + k)
        eps = [0.5, 0.2, 0.1][k % 3]
        G = random_graph(rng, max_vertices=8, extra_edges=4)
        x = random_unit_vector(G, rng, max_atoms=4, offsets=(0.25, 0.5, 0.75))
        w = lasq_witness(G, x, eps)
        ny = norm(G, w.y)
        plus, minus = norm(G, x + w.y * (1 / ny)), norm(G, x - w.y * (1 / ny))
        worst_pm = max(worst_pm, plus - 1, minus - 1)
        m = w.decomposition.m
        ok = plus <= 1 + eps + 1e-9 and minus <= 1 + eps + 1e-9 and 1 - eps / 5 < ny < 1 + 2 * eps / 5
        for t, yj in zip(w.decomposition.terms, w.y_terms):
            mv = molecule_vector(G, t.start, t.end)
            bound = 1 + eps / (5 * m * t.weight)
            ok &= norm(G, mv + yj) <= bound + 1e-9 and norm(G, mv - yj) <= bound + 1e-9
            ok &= abs(pair(w.g, yj) - 1.0) <= 1e-9
        ok &= abs(lipschitz_constant_on(G, w.g) - 1.0) <= 1e-9
        counts[eps] = counts.get(eps, 0) + 1
        if not ok:
            failures.append(k)
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 120
    acceptance_log(
        5, ok,
        f"50 unit vectors (eps counts {counts}), max ||x +- y/||y|| || - 1 = {worst_pm:.3f}, "
        f"failures={failures}, {elapsed:.1f}s (< 120s)",
    )
    assert ok


def test_criterion_6_asq_refutation(acceptance_log):
    start = time.perf_counter()
    G = interval_graph()
    fam = asq_family(G, 0.5, G.vertex("0"), G.vertex("1"))
    assert fam.n == 16 and fam.theta == 1 / 16
    molecules = [fam.molecule(G, i) for i in range(fam.n)]
    rng = np.random.default_rng(106)
    bad, min_margin, min_cert = [], np.inf, np.inf
    for k in range(1000):
        y = random_unit_vector(G, rng, max_atoms=5, vertex_prob=0.2)
        ny = norm(G, y)
        best = max(transport(G, mv + y).value for mv in molecules)
        cert = asq_certificate(G, fam, y)
        margin = best - (1 + ny - fam.eps)
        min_margin = min(min_margin, margin)
        min_cert = min(min_cert, cert.bound - (1 + ny - fam.eps))
        if not (margin > 0 and cert.bound <= cert.true_norm + 1e-9 and cert.bound > 1 + ny - fam.eps):
            bad.append(k)
    reports = {s: refute_s_asq(G, fam, s, 1000, seed=int(1000 * s)) for s in (0.25, 0.5, 1.0)}
    elapsed = time.perf_counter() - start
    ok = not bad and all(r.all_passed for r in reports.values()) and elapsed < 120
    detail = ", ".join(f"s={s}: min margin {r.min_margin:+.1e}" for s, r in reports.items())
    acceptance_log(
        6, ok,
        f"1000 unit y: min (max_i norm - (1+||y||-eps)) {min_margin:.3f}, min certificate slack {min_cert:.3f}, "
        f"failures={bad}; {detail}; {elapsed:.1f}s (< 120s)",
    )
    assert ok


def test_criterion_7_mcshane(acceptance_log):
    rng = np.random.default_rng(107)
    worst_excess, worst_restrict = -np.inf, 0.0
    for _ in range(100):
        G = random_graph(rng, max_vertices=8)
        pts = list(dict.fromkeys(random_point(G, rng) for _ in range(int(rng.integers(2, 7)))))
        if len(pts) < 2:
            pts.append(G.basepoint if G.basepoint not in pts else G.vertex(G.vertices[-1]))
        raw = {p: float(rng.normal()) for p in pts}
        L = lipschitz_constant_on(G, raw) * float(rng.uniform(1.0, 1.5))
        f = mcshane_extend(G, raw, L)
        sample = pts + [random_point(G, rng) for _ in range(50)]
        vals = f.evaluate(sample)
        D = G.distance_matrix(sample)
        excess = np.abs(vals[:, None] - vals[None, :]) - L * D
        worst_excess = max(worst_excess, float(excess.max()))
        worst_restrict = max(worst_restrict, max(abs(f(p) - raw[p]) for p in pts))
    ok = worst_excess <= 1e-9 and worst_restrict == 0.0
    acceptance_log(
        7, ok, f"100 anchor sets x 50 points, max |f(x)-f(y)| - L d(x,y) = {worst_excess:.1e}, "
        f"max anchor error {worst_restrict:.1e}",
    )
    assert ok


GRAPH = {
    "vertices": ["0", "1", "2", "3"],
    "edges": [
        {"u": "0", "v": "1", "length": 1.0},
        {"u": "1", "v": "2", "length": 0.7},
        {"u": "2", "v": "3", "length": 1.3},
        {"u": "3", "v": "0", "length": 0.9},
        {"u": "1", "v": "3", "length": 1.6},
    ],
    "basepoint": "v:0",
}


@pytest.fixture
def cli_inputs(tmp_path):
    G = MetricGraph.from_dict(GRAPH)
    comb = {"terms": [
        {"lambda": 0.4, "p": "v:2", "q": "e:0:0.25"},
        {"lambda": 0.35, "p": "e:4:0.5", "q": "v:0"},
        {"lambda": 0.2, "p": "v:3", "q": "e:1:0.35"},
    ]}
    x = parse_vector(G, comb)
    unit = {"atoms": [{"coefficient": c / norm(G, x), "point": str(p)} for c, p in x.atoms]}
    func = {"constant": 1.0, "anchors": [
        {"point": "v:0", "value": 0.0}, {"point": "v:2", "value": 0.9}, {"point": "e:2:0.65", "value": 0.4},
    ]}
    paths = {}
    for name, data in (("graph", GRAPH), ("comb", comb), ("unit", unit), ("func", func)):
        paths[name] = tmp_path / f"{name}.json"
        paths[name].write_text(json.dumps(data))
    return {k: str(v) for k, v in paths.items()}


def test_criterion_8_cli_determinism(acceptance_log, cli_inputs):
    g = ["--graph", cli_inputs["graph"], "--format", "json-lines", "--seed", "11"]
    runs = {
        "norm": ["norm", "--vector", cli_inputs["comb"]],
        "decompose": ["decompose", "--vector", cli_inputs["comb"], "--epsilon", "0.2"],
        "lasq-witness": ["lasq-witness", "--vector", cli_inputs["unit"], "--epsilon", "0.2"],
        "asq-certificate": ["asq-certificate", "--epsilon", "0.5", "--trials", "5"],
        "refute-s-asq": ["refute-s-asq", "--epsilon", "0.5", "--s", "0.5", "--trials", "10"],
        "check-lipschitz": ["check-lipschitz", "--function", cli_inputs["func"], "--trials", "30"],
    }
    mismatched, codes = [], {}
    for name, argv in runs.items():
        outs = [
            subprocess.run([sys.executable, "-m", "lipfree.cli", *argv, *g], capture_output=True, env={**os.environ, "PYTHONHASHSEED": str(h)})
            for h in (1, 2)
        ]
        codes[name] = outs[0].returncode
        if outs[0].stdout != outs[1].stdout or outs[0].returncode != outs[1].returncode or not outs[0].stdout:
            mismatched.append(name)
    ok = not mismatched and all(c == 0 for c in codes.values())
    acceptance_log(8, ok, f"6 subcommands run twice, byte-identical reports; mismatched={mismatched}, exit codes={codes}")
    assert ok
