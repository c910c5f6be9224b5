"""Virtual orthogonal edges and the depth-bounded closing criterion.

A virtual orthogonal edge of an exchange E is a closed interval [s, t]
with E continuous on it and s < E(s) < E^2(s) = t.  Continuity forces the
whole configuration into a single subinterval of E, so all edges of a
canonical exchange form finitely many sliding families: one per
subinterval whose translation tau is positive and shorter than half the
subinterval.  Everything here is exact.

``probe_edge_criterion`` checks, scale by scale along a decreasing probe
sequence, whether the first-return maps carry enough pairwise disjoint
edges.  ``estimate_full_measure`` runs that probe over random exchanges;
its per-sample verdict is visit-based (a sample is refuted only when *no*
probed scale meets the edge quota), mirroring the fact that the criterion
only asks for *some* sequence of good scales.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ReduciblePermutation, ReturnTimeExceeded
from .iet import Iet, RationalLike, as_rational, make_iet
from .induction import induce, is_irreducible, rauzy_orbit

DEFAULT_WITNESS_GAP = Fraction(1, 10**6)


@dataclass(frozen=True)
class VirtualEdge:
    """A single edge [s, t] with its middle point e1 = E(s)."""

    s: Fraction
    e1: Fraction
    t: Fraction

    def validate(self, iet: Iet) -> None:
        """Re-check the defining conditions against ``iet``, independently
        of whatever search produced this edge."""
        if not self.s < self.e1 < self.t:
            raise ValueError(f"edge ordering violated: {self}")
        if iet.evaluate(self.s) != self.e1 or iet.evaluate(self.e1) != self.t:
            raise ValueError(f"edge {self} does not follow the exchange")
        piece = iet.piece_index(self.s)
        if self.t >= iet.breakpoints[piece + 1]:
            raise ValueError(f"edge {self} leaves its continuity interval")

    @property
    def length(self) -> Fraction:
        return self.t - self.s


@dataclass(frozen=True)
class EdgeFamily:
    """All edges with left endpoint in [s_min, s_sup).

    Within one subinterval of the exchange every admissible s yields the
    edge [s, s + 2*offset]; the family is the exact description of that
    continuum.
    """

    s_min: Fraction
    s_sup: Fraction
    offset: Fraction
    piece: int

    @property
    def edge_length(self) -> Fraction:
        return 2 * self.offset

    def edge_at(self, s: RationalLike) -> VirtualEdge:
        s = as_rational(s)
        if not self.s_min <= s < self.s_sup:
            raise ValueError(f"{s} outside admissible range [{self.s_min}, {self.s_sup})")
        return VirtualEdge(s, s + self.offset, s + 2 * self.offset)

    def max_disjoint(self) -> int:
        """Largest number of pairwise disjoint closed edges drawn from this
        family (supremum over finite selections; attained up to any
        positive gap)."""
        q = (self.s_sup - self.s_min) / self.edge_length
        return int(q) if q.denominator == 1 else math.floor(q) + 1


def find_virtual_edges(iet: Iet) -> list[EdgeFamily]:
    """Exact description of all virtual orthogonal edges of ``iet``.

    One family per subinterval with positive translation shorter than half
    the subinterval; empty when no edge exists.
    """
    families = []
    for i in range(iet.m):
        tau = iet.translations[i]
        if tau <= 0:
            continue
        lo = iet.breakpoints[i]
        sup = iet.breakpoints[i + 1] - 2 * tau
        if sup > lo:
            families.append(EdgeFamily(lo, sup, tau, i))
    return families


def max_disjoint_edges(
    iet: Iet,
    gap: Fraction = DEFAULT_WITNESS_GAP,
    with_witness: bool = True,
) -> tuple[int, list[VirtualEdge]]:
    """Maximum cardinality of a pairwise-disjoint edge family plus one witness.

    Edges from distinct subintervals are disjoint automatically, so the
    count is the sum over families.  Within a family the witness packs
    edges left to right separated by a strict gap (``gap``, shrunk if the
    family slack requires it); interval scheduling by right endpoint over
    the family description realizes the same count.
    """
    total = 0
    witnesses: list[VirtualEdge] = []
    for fam in find_virtual_edges(iet):
        k = fam.max_disjoint()
        total += k
        if not with_witness:
            continue
        width = fam.s_sup - fam.s_min
        slack = width - (k - 1) * fam.edge_length
        step_gap = min(gap, slack / (k + 1))
        for j in range(k):
            s = fam.s_min + j * (fam.edge_length + step_gap)
            witnesses.append(fam.edge_at(s))
    return total, witnesses


def in_rotation_band(iet: Iet, k: int) -> bool:
    """True when the exchange translates [0, 1/2] by an offset inside the
    open band (16**-k - 32**-k, 16**-k + 32**-k).

    Such maps carry more than k pairwise disjoint virtual edges.  Requires
    a unit base.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if iet.base_length != 1:
        raise ValueError("rotation band test needs a unit base")
    if iet.breakpoints[1] <= Fraction(1, 2):
        return False
    offset = iet.translations[0]
    center = Fraction(1, 16**k)
    halfwidth = Fraction(1, 32**k)
    return center - halfwidth < offset < center + halfwidth


# -- criterion probing -------------------------------------------------------


@dataclass(frozen=True)
class ClosingCriterion:
    """Edge quota per probed scale.

    The quota is chi + k + 3 clamped below at 1; the clamp is flagged so
    reports can surface when the raw formula was non-positive.  The
    surface's singularity count is carried for bookkeeping (closing runs
    normally take k at least that large).
    """

    euler_characteristic: int
    k: int
    singularity_count: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.singularity_count < 0:
            raise ValueError("singularity count must be >= 0")

    @property
    def raw_threshold(self) -> int:
        return self.euler_characteristic + self.k + 3

    @property
    def threshold(self) -> int:
        return max(1, self.raw_threshold)

    @property
    def clamped(self) -> bool:
        return self.raw_threshold < 1


@dataclass(frozen=True)
class ProbeEntry:
    scale: Fraction
    edge_count: int
    passed: bool


@dataclass(frozen=True)
class EdgeCriterionReport:
    criterion: ClosingCriterion
    probes: tuple[ProbeEntry, ...]
    verdict: str  # certified_to_depth / refuted_at_depth / undecided_tie
    used_fallback_scales: bool
    note: str = field(default="", compare=False)


_CERTIFIED_NOTE = (
    "certified_to_depth covers only the probed scales; membership in the "
    "full criterion would require every scale of an infinite sequence"
)


def default_probe_scales(iet: Iet, depth: int) -> tuple[list[Fraction], bool]:
    """Rauzy scales, extended by halving once induction ties out.

    Returns the scales and whether the fallback was needed.
    """
    scales: list[Fraction] = []
    try:
        orbit = rauzy_orbit(iet, depth)
        scales = list(orbit.scales)
    except ReduciblePermutation:
        pass
    fallback = len(scales) < depth
    last = scales[-1] if scales else iet.base_length
    while len(scales) < depth:
        last = last / 2
        scales.append(last)
    return scales, fallback


def _scan_scales(
    iet: Iet, threshold: int, scales: list[Fraction]
) -> list[ProbeEntry]:
    """Edge counts of the first-return maps at each scale (no early stop).

    Consecutive inductions are chained: the return map to a smaller base
    factors through the return map to any larger one.
    """
    entries = []
    current = iet
    for b in scales:
        current = induce(current, b).induced
        count, _ = max_disjoint_edges(current, with_witness=False)
        entries.append(ProbeEntry(b, count, count >= threshold))
    return entries


def probe_edge_criterion(
    iet: Iet,
    criterion: ClosingCriterion,
    depth: int,
    scales: list[RationalLike] | None = None,
) -> EdgeCriterionReport:
    """Probe the edge quota at each scale of a decreasing sequence.

    Default scales are the Rauzy base lengths with a halving fallback past
    a tie.  The verdict is conjunctive over the probed scales: any failing
    scale refutes at this depth (probing stops there); a clean sweep is
    certified_to_depth, downgraded to undecided_tie when the fallback was
    needed.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if scales is not None:
        resolved = [as_rational(s) for s in scales]
        if not resolved:
            raise ValueError("explicit scale list must be nonempty")
        for a, b in zip(resolved[:-1], resolved[1:]):
            if not b < a:
                raise ValueError("scales must be strictly decreasing")
        if resolved[0] > iet.base_length or resolved[-1] <= 0:
            raise ValueError("scales must lie in (0, base]")
        fallback = False
    else:
        resolved, fallback = default_probe_scales(iet, depth)

    entries = _scan_scales(iet, criterion.threshold, resolved)
    probes: list[ProbeEntry] = []
    failed = False
    for entry in entries:
        probes.append(entry)
        if not entry.passed:
            failed = True
            break
    if failed:
        verdict = "refuted_at_depth"
    elif fallback:
        verdict = "undecided_tie"
    else:
        verdict = "certified_to_depth"
    note = _CERTIFIED_NOTE
    if criterion.clamped:
        note += "; edge quota clamped to 1 (raw chi+k+3 was non-positive)"
    return EdgeCriterionReport(criterion, tuple(probes), verdict, fallback, note)


# -- Monte Carlo full-measure experiment -------------------------------------


@dataclass(frozen=True)
class SampleOutcome:
    index: int
    lengths: tuple[Fraction, ...]
    permutation: tuple[int, ...]
    verdict: str
    scales_probed: int
    scales_passed: int
    first_pass_index: int | None
    tie: bool


@dataclass(frozen=True)
class MeasureReport:
    m: int
    samples: int
    depth: int
    seed: int
    resolution: int
    criterion: ClosingCriterion
    counts: dict
    fractions: dict
    reducible_draws: int
    per_sample: tuple[SampleOutcome, ...]


def wald_interval(successes: int, n: int) -> tuple[float, float, float]:
    """95% normal-approximation confidence interval for a fraction."""
    if n == 0:
        return 0.0, 0.0, 0.0
    p = successes / n
    half = 1.96 * math.sqrt(max(p * (1 - p), 0.0) / n)
    return p, max(0.0, p - half), min(1.0, p + half)


def sample_iet(rng: random.Random, m: int, resolution: int) -> tuple[Iet, int]:
    """Draw lengths uniformly on the rational simplex (integer grid up to
    ``resolution``, normalized) and a uniform irreducible permutation.

    Reducible permutation draws are rejected; their count is returned so
    reports can account for the excluded mass.
    """
    rejected = 0
    while True:
        perm = list(range(1, m + 1))
        rng.shuffle(perm)
        if is_irreducible(perm):
            break
        rejected += 1
    raw = [rng.randint(1, resolution) for _ in range(m)]
    total = sum(raw)
    lengths = [Fraction(x, total) for x in raw]
    return make_iet(lengths, perm), rejected


def _probe_sample(args) -> tuple[int, int, int | None, bool]:
    """Worker body: per-scale pass data for one sampled exchange."""
    lengths, perm, threshold, depth = args
    iet = make_iet(lengths, perm)
    scales, fallback = default_probe_scales(iet, depth)
    try:
        entries = _scan_scales(iet, threshold, scales)
    except ReturnTimeExceeded:
        # a post-tie fallback scale outran the return budget; the scales
        # actually probed still count, the rest stay unknown
        entries = []
        current = iet
        for b in scales:
            try:
                current = induce(current, b).induced
            except ReturnTimeExceeded:
                fallback = True
                break
            count, _ = max_disjoint_edges(current, with_witness=False)
            entries.append(ProbeEntry(b, count, count >= threshold))
    passed = [e.passed for e in entries]
    first = passed.index(True) + 1 if any(passed) else None
    return len(entries), sum(passed), first, fallback


def estimate_full_measure(
    m: int,
    criterion: ClosingCriterion,
    depth: int,
    samples: int,
    seed: int,
    resolution: int = 10**6,
    workers: int = 1,
) -> MeasureReport:
    """Monte Carlo scan of random exchanges against the edge criterion.

    Per-sample verdicts are visit-based: certified_to_depth when at least
    one probed scale met the quota (renormalization found a good scale),
    refuted_at_depth when every scale failed with the full Rauzy sequence
    available, undecided_tie when every scale failed but induction tied
    out early.  Deterministic for a fixed seed; worker parallelism does
    not change the output (results are assembled in sample order).
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = random.Random(seed)
    drawn = []
    reducible_draws = 0
    for _ in range(samples):
        iet, rejected = sample_iet(rng, m, resolution)
        reducible_draws += rejected
        drawn.append(iet)

    jobs = [(iet.lengths, iet.permutation, criterion.threshold, depth) for iet in drawn]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_probe_sample, jobs, chunksize=8))
    else:
        raw = [_probe_sample(job) for job in jobs]

    outcomes = []
    counts = {"certified_to_depth": 0, "refuted_at_depth": 0, "undecided_tie": 0}
    for idx, (iet, (probed, passed, first, tie)) in enumerate(zip(drawn, raw)):
        if passed > 0:
            verdict = "certified_to_depth"
        elif tie:
            verdict = "undecided_tie"
        else:
            verdict = "refuted_at_depth"
        counts[verdict] += 1
        outcomes.append(
            SampleOutcome(idx, iet.lengths, iet.permutation, verdict, probed, passed, first, tie)
        )

    fractions = {name: wald_interval(count, samples) for name, count in counts.items()}
    return MeasureReport(
        m=m,
        samples=samples,
        depth=depth,
        seed=seed,
        resolution=resolution,
        criterion=criterion,
        counts=counts,
        fractions=fractions,
        reducible_draws=reducible_draws,
        per_sample=tuple(outcomes),
    )
