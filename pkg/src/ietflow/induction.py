"""First-return maps and Rauzy-Veech induction.

Two independent routes to the same renormalization are kept side by side:

* ``induce`` computes the first-return map of an exchange to a left
  subinterval [0, b) by exact interval propagation, and
* ``rauzy_step`` performs one combinatorial Rauzy-Veech move on the
  (lengths, permutation) data directly.

``check_induction_consistency`` cross-validates the two: after n Rauzy
steps the unnormalized state must equal the first-return map to [0, a_n),
where a_n is the surviving base length.  Both sides are compared as
canonical maps, so removable breakpoints created by an induction cut are
merged consistently on both routes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .errors import NotInduced, ReduciblePermutation, ReturnTimeExceeded, TieEncountered
from .iet import Iet, RationalLike, as_rational, make_iet


@dataclass(frozen=True)
class InducedResult:
    """First-return map of ``parent`` to [0, b) plus return-time data.

    ``pieces`` refines the canonical intervals of ``induced``: an induction
    cut can make two pieces with different return times carry the same
    translation, in which case the canonical map merges them but the
    return times stay distinct.  ``return_times[i]`` is the number of
    parent steps after which points of ``pieces[i]`` first re-enter [0, b).
    """

    induced: Iet
    return_times: tuple[int, ...]
    pieces: tuple[tuple[Fraction, Fraction], ...]
    parent_break_hits: tuple[Fraction, ...]
    parent_base: Fraction

    @property
    def kac_total(self) -> Fraction:
        """Sum of return_time * piece length; equals the parent base length
        exactly when the return orbits sweep the whole parent interval."""
        total = Fraction(0)
        for (lo, hi), k in zip(self.pieces, self.return_times):
            total += (hi - lo) * k
        return total

    @property
    def covers_parent(self) -> bool:
        return self.kac_total == self.parent_base


def default_return_budget(parent: Iet, b: Fraction) -> int:
    """Step budget heuristic: 10 * (m + base/b)."""
    return 10 * (parent.m + int(parent.base_length / b) + 1)


def induce(parent: Iet, b: RationalLike, max_steps: int | None = None) -> InducedResult:
    """First-return map of ``parent`` to [0, b) by exact interval propagation.

    Pushes the partition of [0, b) forward, splitting at discontinuities of
    the parent and at the boundary b, until every piece has re-entered.
    Raises ReturnTimeExceeded when a piece fails to return within the
    budget (b chosen pathologically small).
    """
    b = as_rational(b)
    if b <= 0 or b > parent.base_length:
        raise ValueError(f"induction base {b} outside (0, {parent.base_length}]")
    if max_steps is None:
        max_steps = default_return_budget(parent, b)
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")

    if b == parent.base_length:
        pieces = tuple(zip(parent.breakpoints[:-1], parent.breakpoints[1:]))
        return InducedResult(
            induced=parent,
            return_times=(1,) * parent.m,
            pieces=pieces,
            parent_break_hits=tuple(parent.breakpoints[1:-1]),
            parent_base=parent.base_length,
        )

    interior = parent.breakpoints[1:-1]
    done: list[tuple[Fraction, Fraction, Fraction, int]] = []
    work = deque([(Fraction(0), b, Fraction(0), 0)])
    while work:
        lo, hi, off, steps = work.popleft()
        cur_lo = lo + off
        cur_hi = hi + off
        if steps > 0 and cur_hi <= b:
            done.append((lo, hi, off, steps))
            continue
        if steps >= max_steps:
            raise ReturnTimeExceeded(max_steps, scale=b)
        cuts = [c for c in interior if cur_lo < c < cur_hi]
        bounds = [cur_lo] + cuts + [cur_hi]
        for u, v in zip(bounds[:-1], bounds[1:]):
            tau = parent.translations[parent.piece_index(u)]
            noff = off + tau
            nlo, nhi = u + tau, v + tau
            olo, ohi = u - off, v - off
            if nhi <= b:
                done.append((olo, ohi, noff, steps + 1))
            elif nlo >= b:
                work.append((olo, ohi, noff, steps + 1))
            else:
                mid = b - noff
                done.append((olo, mid, noff, steps + 1))
                work.append((mid, ohi, noff, steps + 1))

    done.sort(key=lambda t: t[0])
    # pieces must tile [0, b) exactly
    cursor = Fraction(0)
    for lo, hi, _, _ in done:
        if lo != cursor:
            raise NotInduced(f"gap at {cursor} while assembling the return map")
        cursor = hi
    if cursor != b:
        raise NotInduced(f"return pieces stop at {cursor}, expected {b}")

    # return-time partition: merge neighbours agreeing on translation and time
    merged: list[list] = []
    for lo, hi, off, steps in done:
        if merged and merged[-1][2] == off and merged[-1][3] == steps and merged[-1][1] == lo:
            merged[-1][1] = hi
        else:
            merged.append([lo, hi, off, steps])

    # the canonical map merges on translation alone; an induction cut can
    # leave neighbours continuous as a map yet with distinct return times,
    # so the piece partition genuinely refines the canonical intervals
    lengths = [hi - lo for lo, hi, _, _ in merged]
    image_starts = [lo + off for lo, _, off, _ in merged]
    order = sorted(range(len(merged)), key=lambda i: image_starts[i])
    perm = [0] * len(merged)
    for rank, i in enumerate(order, start=1):
        perm[i] = rank
    induced = make_iet(lengths, perm)

    return InducedResult(
        induced=induced,
        return_times=tuple(p[3] for p in merged),
        pieces=tuple((p[0], p[1]) for p in merged),
        parent_break_hits=tuple(p[0] for p in merged[1:]),
        parent_base=parent.base_length,
    )


# -- Rauzy-Veech induction ---------------------------------------------------


def is_irreducible(permutation: tuple[int, ...] | list[int]) -> bool:
    """True when no proper prefix {1..j} is permuted into itself."""
    pm = list(permutation)
    if len(pm) < 2:
        return False
    top = 0
    for j, v in enumerate(pm[:-1], start=1):
        top = max(top, v)
        if top == j:
            return False
    return True


def rauzy_step(iet: Iet) -> tuple[Iet, str]:
    """One right-end Rauzy-Veech move.

    Compares the last subinterval of the domain against the subinterval
    whose image is last, shortens the longer one, and returns the induced
    exchange on the shortened base together with the step type ("top" when
    the domain-last interval was longer, "bottom" otherwise).  Equal
    comparands raise TieEncountered; rational data always tie eventually.
    """
    m = iet.m
    if m < 2 or not is_irreducible(iet.permutation):
        raise ReduciblePermutation(f"Rauzy step undefined for {iet!r}")
    pm = list(iet.permutation)
    ls = list(iet.lengths)
    beta = pm.index(m)  # 0-based position whose image is rightmost
    l_top = ls[m - 1]
    l_bot = ls[beta]
    if l_top == l_bot:
        raise TieEncountered(f"comparand lengths both equal {l_top}")

    if l_top > l_bot:
        # image of interval beta is cut off and re-enters after the image
        # of the last domain interval
        anchor = pm[m - 1]
        new_ls = ls[:]
        new_ls[m - 1] = l_top - l_bot
        new_pm = [0] * m
        for i in range(m):
            if i == beta:
                continue
            v = pm[i]
            new_pm[i] = v if v <= anchor else v + 1
        new_pm[beta] = anchor + 1
        return make_iet(new_ls, new_pm), "top"

    # bottom move: the last domain interval is cut off; interval beta splits
    # and its right part takes over the removed interval's image slot
    new_ls = ls[:beta] + [l_bot - l_top, l_top] + ls[beta + 1 : m - 1]
    new_pm = [0] * m
    for i in range(m - 1):
        if i == beta:
            continue
        new_pm[i if i < beta else i + 1] = pm[i]
    new_pm[beta] = m
    new_pm[beta + 1] = pm[m - 1]
    return make_iet(new_ls, new_pm), "bottom"


@dataclass(frozen=True)
class RauzyStep:
    kind: str
    before: Iet
    after: Iet


@dataclass(frozen=True)
class RauzyTrajectory:
    """A finite run of Rauzy moves with the surviving base lengths.

    ``scales[n-1]`` is the unnormalized base length after n moves; the
    sequence is strictly decreasing.  Merging of removable breakpoints can
    lower the interval count along the way, so m is non-increasing.
    """

    steps: tuple[RauzyStep, ...]
    scales: tuple[Fraction, ...]
    halt_reason: str  # "depth_reached" or "tie_encountered"

    @property
    def depth_reached(self) -> int:
        return len(self.steps)


def rauzy_orbit(iet: Iet, depth: int) -> RauzyTrajectory:
    """Apply up to ``depth`` Rauzy moves, halting early at a tie."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    steps: list[RauzyStep] = []
    scales: list[Fraction] = []
    current = iet
    halt = "depth_reached"
    for _ in range(depth):
        try:
            nxt, kind = rauzy_step(current)
        except TieEncountered:
            halt = "tie_encountered"
            break
        steps.append(RauzyStep(kind, current, nxt))
        scales.append(nxt.base_length)
        current = nxt
    return RauzyTrajectory(tuple(steps), tuple(scales), halt)


def rescale(iet: Iet, to_base: RationalLike) -> Iet:
    """Conjugate by the linear map taking the base onto [0, to_base)."""
    to_base = as_rational(to_base)
    if to_base <= 0:
        raise ValueError("target base must be positive")
    factor = to_base / iet.base_length
    return make_iet([x * factor for x in iet.lengths], iet.permutation)


@dataclass(frozen=True)
class ConsistencyEntry:
    n: int
    scale: Fraction
    passed: bool


@dataclass(frozen=True)
class ConsistencyReport:
    """Per-depth agreement between the Rauzy route and the first-return route."""

    entries: tuple[ConsistencyEntry, ...]
    halt_reason: str  # depth_reached / tie_encountered / reducible

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)


def check_induction_consistency(iet: Iet, depth: int) -> ConsistencyReport:
    """Cross-validate Rauzy moves against first-return maps.

    For each n reached before a tie, the n-step Rauzy state (combinatorial
    route) is compared, after normalization to [0, 1), with the first-return
    map of the original exchange to [0, a_n) (interval-propagation route).
    Equality is exact.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    try:
        orbit = rauzy_orbit(iet, depth)
    except ReduciblePermutation:
        return ConsistencyReport((), "reducible")

    entries = []
    induced_prev = iet
    for n, (step, scale) in enumerate(zip(orbit.steps, orbit.scales), start=1):
        # first return to a shrinking base factors through the previous one,
        # so each comparison only needs one short induction
        induced_prev = induce(induced_prev, scale).induced
        lhs = rescale(induced_prev, 1)
        rhs = rescale(step.after, 1)
        entries.append(ConsistencyEntry(n, scale, lhs == rhs))
    return ConsistencyReport(tuple(entries), orbit.halt_reason)
