"""First-return maps, Rauzy moves, and their cross-validation."""

import random
from fractions import Fraction as F

import pytest

from ietflow import (
    ReduciblePermutation,
    ReturnTimeExceeded,
    TieEncountered,
    check_induction_consistency,
    identity_iet,
    induce,
    make_iet,
    rauzy_orbit,
    rauzy_step,
    rescale,
)
from .test_iet_core import random_iet, rotation


def first_return_oracle(parent, b, x, cap=100000):
    """Pointwise first-return: iterate until the orbit re-enters [0, b)."""
    y = parent.evaluate(x)
    steps = 1
    while y >= b:
        y = parent.evaluate(y)
        steps += 1
        assert steps < cap
    return y, steps


class TestInduce:
    def test_rotation_third_on_two_thirds(self):
        parent = rotation(F(1, 3))
        res = induce(parent, F(2, 3))
        assert res.induced == make_iet([F(1, 3), F(1, 3)], [2, 1])
        assert res.return_times == (1, 2)
        assert res.pieces == ((F(0), F(1, 3)), (F(1, 3), F(2, 3)))
        # brute-force orbit iteration per piece
        for (lo, hi), k in zip(res.pieces, res.return_times):
            mid = (lo + hi) / 2
            value, steps = first_return_oracle(parent, F(2, 3), mid)
            assert steps == k
            assert value == res.induced.evaluate(mid)

    def test_full_base_is_identity_operation(self):
        parent = rotation(F(1, 3))
        res = induce(parent, parent.base_length)
        assert res.induced == parent
        assert res.return_times == (1,) * parent.m

    def test_rotation_tenth_on_half_pointwise(self):
        parent = rotation(F(1, 10))
        b = F(1, 2)
        res = induce(parent, b)
        rng = random.Random(41)
        for _ in range(500):
            x = F(rng.randrange(0, 1000), 2000)
            value, steps = first_return_oracle(parent, b, x)
            assert value == res.induced.evaluate(x)
            piece = next(i for i, (lo, hi) in enumerate(res.pieces) if lo <= x < hi)
            assert steps == res.return_times[piece]

    def test_kac_identity_on_covering_examples(self):
        # return times weighted by piece lengths sweep the whole parent
        for parent, b in [
            (rotation(F(1, 3)), F(2, 3)),
            (rotation(F(1, 10)), F(1, 2)),
            (make_iet([F(1, 2), F(3, 10), F(1, 5)], [3, 2, 1]), F(7, 10)),
        ]:
            res = induce(parent, b)
            assert res.covers_parent
            assert res.kac_total == parent.base_length

    def test_return_budget(self):
        parent = rotation(F(1, 1000))
        with pytest.raises(ReturnTimeExceeded):
            induce(parent, F(1, 100), max_steps=5)

    def test_induced_of_induced(self):
        rng = random.Random(43)
        for _ in range(10):
            parent = random_iet(rng, rng.choice([2, 3]))
            b1 = parent.base_length * F(3, 4)
            b2 = parent.base_length * F(2, 5)
            once = induce(parent, b1).induced
            twice = induce(once, b2).induced
            direct = induce(parent, b2).induced
            assert twice == direct
            for _ in range(20):
                x = b2 * F(rng.randrange(0, 499), 499)
                assert twice.evaluate(x) == direct.evaluate(x)

    def test_pieces_refine_induced_breakpoints(self):
        # a Rauzy-style cut can merge the map but not the return times
        parent = make_iet([F(1, 5), F(3, 10), F(1, 2)], [3, 2, 1])
        res = induce(parent, F(4, 5))
        assert len(res.pieces) >= res.induced.m
        bounds = {lo for lo, _ in res.pieces} | {res.pieces[-1][1]}
        assert set(res.induced.breakpoints) <= bounds
        for (lo, hi), k in zip(res.pieces, res.return_times):
            mid = (lo + hi) / 2
            assert parent.iterate(mid, k) == res.induced.evaluate(mid)


def euclid_oracle(a, b):
    """Subtractive Euclid trace for a two-interval exchange: the sequence of
    ("top"/"bottom", lengths-after) pairs, halting at equality."""
    steps = []
    while a != b:
        if b > a:
            b = b - a
            steps.append(("top", (a, b)))
        else:
            a = a - b
            steps.append(("bottom", (a, b)))
    return steps


class TestRauzyStep:
    def test_rotation_bottom_then_tie(self):
        e = rotation(F(1, 3))
        nxt, kind = rauzy_step(e)
        assert kind == "bottom"
        assert nxt == make_iet([F(1, 3), F(1, 3)], [2, 1])
        assert nxt.base_length == F(2, 3)
        with pytest.raises(TieEncountered):
            rauzy_step(nxt)

    def test_exact_tie(self):
        with pytest.raises(TieEncountered):
            rauzy_step(make_iet([F(1, 2), F(1, 2)], [2, 1]))

    def test_reducible_rejected(self):
        with pytest.raises(ReduciblePermutation):
            rauzy_step(make_iet([F(1, 2), F(1, 4), F(1, 4)], [1, 3, 2]))
        with pytest.raises(ReduciblePermutation):
            rauzy_step(identity_iet())

    def test_step_is_first_return(self):
        # the combinatorial move must equal the first-return map to the
        # shortened base computed by interval propagation
        rng = random.Random(47)
        for _ in range(30):
            e = random_iet(rng, rng.choice([2, 3, 4]))
            try:
                nxt, _ = rauzy_step(e)
            except TieEncountered:
                continue
            assert nxt == induce(e, nxt.base_length).induced

    def test_m_never_increases(self):
        rng = random.Random(53)
        for _ in range(20):
            e = random_iet(rng, 4)
            orbit = rauzy_orbit(e, 10)
            ms = [e.m] + [s.after.m for s in orbit.steps]
            assert all(b <= a for a, b in zip(ms[:-1], ms[1:]))


class TestRauzyOrbit:
    def test_depth_validated(self):
        with pytest.raises(ValueError):
            rauzy_orbit(rotation(F(1, 3)), 0)

    def test_single_step(self):
        orbit = rauzy_orbit(rotation(F(1, 3)), 1)
        assert len(orbit.steps) == 1
        assert orbit.scales == (F(2, 3),)
        assert orbit.halt_reason == "depth_reached"

    def test_m1_rejected(self):
        with pytest.raises(ReduciblePermutation):
            rauzy_orbit(identity_iet(), 3)

    def test_scales_strictly_decrease(self):
        rng = random.Random(59)
        for _ in range(10):
            orbit = rauzy_orbit(random_iet(rng, 3), 12)
            for a, b in zip(orbit.scales[:-1], orbit.scales[1:]):
                assert b < a

    def test_two_interval_orbit_is_subtractive_euclid(self):
        rng = random.Random(61)
        for _ in range(20):
            q = rng.randint(2, 2000)
            p = rng.randint(1, q - 1)
            e = make_iet([F(p, q), F(q - p, q)], [2, 1])
            expected = euclid_oracle(F(p, q), F(q - p, q))
            orbit = rauzy_orbit(e, len(expected) + 10)
            assert orbit.halt_reason == "tie_encountered"
            assert len(orbit.steps) == len(expected)
            for step, (kind, lengths) in zip(orbit.steps, expected):
                assert step.kind == kind
                assert step.after.lengths == lengths


class TestRescale:
    def test_own_base(self):
        e = rotation(F(1, 3))
        assert rescale(e, e.base_length) == e

    def test_normalize(self):
        e = make_iet([F(1, 3), F(1, 3)], [2, 1])
        assert rescale(e, 1) == make_iet([F(1, 2), F(1, 2)], [2, 1])

    def test_round_trip(self):
        rng = random.Random(67)
        e = random_iet(rng, 3)
        assert rescale(rescale(e, F(5, 7)), e.base_length) == e


class TestInductionConsistency:
    def test_rotation_depth_one_by_hand(self):
        # both routes give the half-half swap after normalization
        report = check_induction_consistency(rotation(F(1, 3)), 1)
        assert report.all_passed
        assert report.entries[0].scale == F(2, 3)
        lhs = rescale(induce(rotation(F(1, 3)), F(2, 3)).induced, 1)
        assert lhs == make_iet([F(1, 2), F(1, 2)], [2, 1])

    def test_random_m3_depth_10(self):
        rng = random.Random(71)
        for _ in range(10):
            report = check_induction_consistency(random_iet(rng, 3), 10)
            assert report.all_passed

    def test_identity_reports_precondition(self):
        report = check_induction_consistency(identity_iet(), 4)
        assert report.halt_reason == "reducible"
        assert report.entries == ()
        assert report.all_passed  # vacuously; no comparison was possible
