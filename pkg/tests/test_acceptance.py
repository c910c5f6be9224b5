"""Acceptance suite: one test per shipped guarantee, printed pass/fail.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.
"""

import json
import random
import time
from fractions import Fraction as F
from itertools import combinations

import pytest

from ietflow import (
    ClosingCriterion,
    SuspensionFlow,
    build_flow_box,
    check_induction_consistency,
    close_at_point,
    estimate_full_measure,
    find_closing_parameter,
    in_rotation_band,
    make_iet,
    make_twist_family,
    max_disjoint_edges,
    rauzy_orbit,
    twisted_return,
)
from ietflow.cli import run
from ietflow.edges import VirtualEdge
from ietflow.induction import is_irreducible
from ietflow.serialize import dump_iet
from .test_closing import sweep_oracle, tenth_box, tenth_flow
from .test_iet_core import random_iet, rotation
from .test_induction import euclid_oracle


def _verdict(name, ok, detail=""):
    line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line, flush=True)
    return ok


def test_criterion_1_induction_cross_validation():
    # 100 seeded random exchanges, m in {2,3,4}: the combinatorial route and
    # the first-return route agree exactly at every depth reached up to 20
    rng = random.Random(11)
    start = time.time()
    failures = []
    for i in range(100):
        m = [2, 3, 4][i % 3]
        e = random_iet(rng, m, resolution=997)
        report = check_induction_consistency(e, 20)
        if not report.all_passed:
            failures.append((e, report))
    elapsed = time.time() - start
    ok = _verdict(
        "1 rauzy/induce agreement",
        not failures,
        f"100 iets, depth<=20, {elapsed:.2f}s (expected < 10s)",
    )
    assert ok, failures[:3]


def test_criterion_2_rotation_band_edge_bound():
    # band members carry more than k pairwise disjoint edges, exactly
    cases = []
    for k in range(1, 5):
        center = F(1, 16**k)
        halfwidth = F(1, 32**k)
        members = [
            rotation(center),
            rotation(center + halfwidth / 2),
            rotation(center - halfwidth / 2),
            # a three-interval member translating [0, 1/2] by the band offset
            make_iet([F(9, 16), center, F(7, 16) - center], [2, 1, 3]),
        ]
        for e in members:
            assert in_rotation_band(e, k), (k, e)
            count = max_disjoint_edges(e, with_witness=False)[0]
            cases.append((k, e, count))
    bad = [(k, e, c) for k, e, c in cases if not c > k]
    ok = _verdict(
        "2 band members beat their index",
        not bad,
        f"{len(cases)} members over k=1..4, zero tolerance",
    )
    assert ok, bad


def test_criterion_3_two_interval_rauzy_is_euclid():
    # the trajectory reproduces subtractive Euclid step for step and ties
    # exactly when the remainders become equal
    rng = random.Random(19)
    start = time.time()
    checked = 0
    for _ in range(50):
        q = rng.randrange(2, 10**4 + 1)
        p = rng.randrange(1, q)
        e = make_iet([F(p, q), F(q - p, q)], [2, 1])
        expected = euclid_oracle(F(p, q), F(q - p, q))
        orbit = rauzy_orbit(e, len(expected) + 5)
        assert orbit.halt_reason == "tie_encountered", (p, q)
        assert len(orbit.steps) == len(expected), (p, q)
        for step, (kind, lengths) in zip(orbit.steps, expected):
            assert step.kind == kind, (p, q)
            assert step.after.lengths == lengths, (p, q)
        checked += 1
    ok = _verdict(
        "3 m=2 rauzy = subtractive euclid",
        checked == 50,
        f"50 rationals q<=10^4, {time.time() - start:.2f}s, zero tolerance",
    )
    assert ok


def _grid_pack_oracle(iet, q):
    # brute force from the definition: edges at grid points 1/q^2, then
    # greedy interval scheduling by right endpoint
    grid = q * q
    interior = iet.breakpoints[1:-1]
    edges = []
    for j in range(grid):
        s = F(j, grid)
        e1 = iet.evaluate(s)
        if not s < e1:
            continue
        t = iet.evaluate(e1)
        if not e1 < t or t >= iet.base_length:
            continue
        if any(s < c <= t for c in interior):
            continue
        edges.append((t, s))
    edges.sort()
    count, last_t = 0, None
    for t, s in edges:
        if last_t is None or s > last_t:
            count += 1
            last_t = t
    return count


def test_criterion_4_edge_oracle_equivalence():
    # exhaustive grid exchanges (q <= 60, m <= 3, irreducible, 5000 cap)
    start = time.time()
    irr3 = [p for p in [(3, 2, 1), (2, 3, 1), (3, 1, 2)] if is_irreducible(p)]
    n, cap, mismatches = 0, 5000, []
    q = 2
    while n < cap and q <= 60:
        for a in range(1, q):
            if n >= cap:
                break
            e = make_iet([F(a, q), F(q - a, q)], [2, 1])
            if max_disjoint_edges(e, with_witness=False)[0] != _grid_pack_oracle(e, q):
                mismatches.append(e)
            n += 1
        for perm in irr3:
            for c1, c2 in combinations(range(1, q), 2):
                if n >= cap:
                    break
                e = make_iet([F(c1, q), F(c2 - c1, q), F(q - c2, q)], list(perm))
                if max_disjoint_edges(e, with_witness=False)[0] != _grid_pack_oracle(e, q):
                    mismatches.append(e)
                n += 1
        q += 1
    elapsed = time.time() - start
    ok = _verdict(
        "4 packing matches brute force",
        not mismatches,
        f"{n} instances, q up to {q - 1}, {elapsed:.1f}s (expected < 60s), zero tolerance",
    )
    assert ok, mismatches[:3]


def test_criterion_5_closing_run():
    # rotation-by-1/10 suspension, constant roof 1: three shrink steps give
    # three independently re-validated closed orbits with shrinking twists
    start = time.time()
    flow = tenth_flow()
    results = close_at_point(flow, 0, ClosingCriterion(-3, 1), 3, tolerance=1e-9)
    elapsed = time.time() - start
    checks = []
    checks.append(("three results", len(results) == 3))
    sigmas = [r.sigma1 for r in results]
    checks.append(("sigma1 strictly decreasing", sigmas == sorted(sigmas, reverse=True) and len(set(sigmas)) == 3))
    for i, r in enumerate(results):
        position, _ = twisted_return(r.family, r.sigma1, r.periodic_point)
        checks.append((f"step {i + 1} forward residual", abs(position - r.periodic_point) <= 1e-9))
        checks.append((f"step {i + 1} reported residual", r.residual <= 1e-9))
    bad = [name for name, passed in checks if not passed]
    ok = _verdict(
        "5 closing pipeline",
        not bad,
        f"sigma1={['%.6f' % s for s in sigmas]}, {elapsed:.2f}s (expected < 5s)",
    )
    assert ok, bad


def test_criterion_6_bisection_vs_sweep():
    # every shipped closing fixture: bisection within 1e-5 of the 1e-6 sweep
    fixtures = []
    flow = tenth_flow()
    fixtures.append(("rot10 box", make_twist_family(flow, tenth_box(flow))))
    three = SuspensionFlow(make_iet([F(4, 5), F(3, 25), F(2, 25)], [2, 1, 3]), (F(2), F(1), F(1)))
    box3 = build_flow_box(three, VirtualEdge(F(0), F(3, 25), F(6, 25)))
    fixtures.append(("m=3 box", make_twist_family(three, box3)))
    for i, result in enumerate(close_at_point(flow, 0, ClosingCriterion(-3, 1), 3)):
        fixtures.append((f"shrink step {i + 1}", result.family))

    deltas = []
    for name, family in fixtures:
        found = find_closing_parameter(family, 1e-9)
        swept = sweep_oracle(family, resolution=1e-6)
        assert swept is not None, name
        deltas.append((name, abs(found.sigma1 - swept)))
    bad = [(name, d) for name, d in deltas if d > 1e-5]
    ok = _verdict(
        "6 bisection vs sweep",
        not bad,
        "; ".join(f"{name}: {d:.2e}" for name, d in deltas),
    )
    assert ok, bad


def test_criterion_7_full_measure_trend():
    # statistical surrogate: deeper probing refutes no more samples, and at
    # depth 8 at least 90% of samples are certified or undecided
    crit = ClosingCriterion(-3, 1)  # threshold 1
    start = time.time()
    shallow = estimate_full_measure(3, crit, depth=3, samples=500, seed=7)
    deep = estimate_full_measure(3, crit, depth=8, samples=500, seed=7)
    elapsed = time.time() - start
    refuted_shallow = shallow.counts["refuted_at_depth"] / 500
    refuted_deep = deep.counts["refuted_at_depth"] / 500
    cert_und = (deep.counts["certified_to_depth"] + deep.counts["undecided_tie"]) / 500
    _, lo, hi = deep.fractions["refuted_at_depth"]
    trend_ok = refuted_deep <= refuted_shallow
    mass_ok = cert_und >= 0.9
    ok = _verdict(
        "7 full-measure trend",
        trend_ok and mass_ok,
        f"refuted {refuted_shallow:.3f}@3 -> {refuted_deep:.3f}@8 "
        f"(CI95 [{lo:.3f}, {hi:.3f}]), certified+undecided@8 = {cert_und:.3f}, "
        f"{elapsed:.1f}s (expected < 5min)",
    )
    assert trend_ok, "refuted fraction grew with depth"
    assert mass_ok, f"certified+undecided at depth 8 is {cert_und:.3f}, below 0.9"
    assert ok


def test_criterion_8_cli_determinism(tmp_path):
    # repeated seeded CLI runs are byte-identical
    dump_iet(rotation(F(1, 16)), str(tmp_path / "r16.json"))
    flow = tenth_flow()
    from ietflow.serialize import flow_to_dict

    (tmp_path / "flow.json").write_text(json.dumps(flow_to_dict(flow)))
    commands = [
        [
            "measure", "--m", "2", "--samples", "25", "--seed", "7",
            "--depth", "4", "--resolution", "1000",
        ],
        ["probe", "--input", str(tmp_path / "r16.json"), "--depth", "3", "--chi", "-3", "--k", "1"],
        ["close", "--flow", str(tmp_path / "flow.json"), "--point", "0/1", "--shrink-steps", "2"],
    ]
    identical = True
    for i, args in enumerate(commands):
        out1 = tmp_path / f"out{i}a.json"
        out2 = tmp_path / f"out{i}b.json"
        extra1 = ["--csv", str(tmp_path / f"s{i}a.csv")] if args[0] == "measure" else []
        extra2 = ["--csv", str(tmp_path / f"s{i}b.csv")] if args[0] == "measure" else []
        assert run(args + ["--output", str(out1)] + extra1) == 0
        assert run(args + ["--output", str(out2)] + extra2) == 0
        if out1.read_bytes() != out2.read_bytes():
            identical = False
        if extra1 and (tmp_path / f"s{i}a.csv").read_bytes() != (tmp_path / f"s{i}b.csv").read_bytes():
            identical = False
    ok = _verdict("8 CLI determinism", identical, f"{len(commands)} seeded commands, byte-identical")
    assert ok
