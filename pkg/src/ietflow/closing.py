"""Suspension flows, simple flow boxes, and the twist-closing search.

The surface flow is modeled as a suspension: unit-speed upward flow under a
piecewise-constant roof over an exchange's base interval, with the roof top
over x glued to (E(x), 0).  The return map to the base is the exchange
itself; a finite set of singular points on the base marks orbits that die
before returning.

A virtual orthogonal edge [a, c] with midpoint b = E(a) bounds a simple
flow box: the strip over [a, b] whose glued top is [b, c].  Its boundary is
the figure-eight made of the two-flight orbit arc a -> b -> c and the base
segment [a, c], meeting at the vertex b.

The twist perturbation adds a horizontal drift of velocity t * drift_rate,
supported exactly on the box strip.  Positive drift_rate displaces box
crossings toward c.  Because the untwisted crossing already advances by
the positive edge offset, a closed orbit through the vertex appears only
when the drift pulls crossings back toward a, so closing runs use a
negative rate and sweep the twist parameter t over [0, sigma_max].  At the
closing parameter the orbit through the vertex b crosses the box once and
returns exactly to b.

Box geometry stays exact rational; only the twisted kernel and the
parameter search run in floating point.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    ContinuationBroken,
    LeftBoxUndefined,
    NoClosingInRange,
    NoEdgeInNeighborhood,
    NotEmbedded,
    SingularityInBox,
)
from .edges import (
    DEFAULT_WITNESS_GAP,
    ClosingCriterion,
    VirtualEdge,
    find_virtual_edges,
    max_disjoint_edges,
)
from .iet import Iet, RationalLike, as_rational
from .induction import InducedResult, induce

SINGULAR_SNAP = 1e-12


@dataclass(frozen=True)
class SuspensionFlow:
    """Roof function over an exchange plus singularity bookkeeping.

    ``roof`` holds one positive time per cell of ``partition``; the
    partition defaults to the base breakpoints and may refine them (first
    return flows carry accumulated roofs over their return-time pieces).
    ``singular_points`` are base points whose forward orbit is undefined;
    ``K`` is the singularity count of the modeled surface flow.
    """

    base: Iet
    roof: tuple[Fraction, ...]
    singular_points: tuple[Fraction, ...] = ()
    K: int = 0
    partition: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        part = self.partition if self.partition is not None else self.base.breakpoints
        part = tuple(as_rational(p) for p in part)
        object.__setattr__(self, "partition", part)
        roof = tuple(as_rational(r) for r in self.roof)
        object.__setattr__(self, "roof", roof)
        sing = tuple(sorted(as_rational(q) for q in self.singular_points))
        object.__setattr__(self, "singular_points", sing)
        if len(roof) != len(part) - 1:
            raise ValueError("need one roof value per partition cell")
        if any(r <= 0 for r in roof):
            raise ValueError("roof values must be strictly positive")
        if part[0] != 0 or part[-1] != self.base.base_length or list(part) != sorted(part):
            raise ValueError("partition must increase from 0 to the base length")
        cells = set(part)
        if not set(self.base.breakpoints) <= cells:
            raise ValueError("partition must refine the base breakpoints")
        if any(q < 0 or q >= self.base.base_length for q in sing):
            raise ValueError("singular points must lie in [0, base)")
        if self.K < 0:
            raise ValueError("K must be >= 0")

    def roof_at(self, x: RationalLike) -> Fraction:
        x = as_rational(x)
        if x < 0 or x >= self.base.base_length:
            raise ValueError(f"{x} outside the base interval")
        return self.roof[bisect.bisect_right(self.partition, x) - 1]

    def satisfies_singularity_bound(self, chi: int) -> bool:
        """Whether the gap set respects the structural bound chi + K + 2."""
        return len(self.singular_points) <= chi + self.K + 2

    def float_tables(self):
        """Float copies of the geometry for the twisted kernel."""
        return (
            [float(p) for p in self.base.breakpoints],
            [float(t) for t in self.base.translations],
            [float(p) for p in self.partition],
            [float(r) for r in self.roof],
            [float(q) for q in self.singular_points],
        )


@dataclass(frozen=True)
class FlowBox:
    """Simple flow box over a virtual orthogonal edge.

    ``tangent_edge`` lists the orbit arc as (base segment, flight time)
    pairs from a_bar through b_bar to c_bar; ``total_height`` is the time
    length of that arc.  The box itself is the strip over [a_bar, b_bar].
    """

    a_bar: Fraction
    b_bar: Fraction
    c_bar: Fraction
    orthogonal_edge: tuple[Fraction, Fraction]
    tangent_edge: tuple[tuple[tuple[Fraction, Fraction], Fraction], ...]
    total_height: Fraction

    @property
    def width(self) -> Fraction:
        return self.c_bar - self.a_bar

    @property
    def strip_height(self) -> Fraction:
        """Flight time over the entry segment [a_bar, b_bar]."""
        return self.tangent_edge[0][1]


def build_flow_box(flow: SuspensionFlow, edge: VirtualEdge) -> FlowBox:
    """Assemble the simple flow box bounded by the edge and its orbit arc.

    Raises SingularityInBox when a singular point lies on [a_bar, c_bar]
    (either flight would die), and NotEmbedded if an intermediate crossing
    of the arc fell inside the open orthogonal edge anywhere other than
    the figure-eight vertex.
    """
    base = flow.base
    edge.validate(base)
    a_bar, b_bar, c_bar = edge.s, edge.e1, edge.t

    lo = bisect.bisect_left(flow.singular_points, a_bar)
    if lo < len(flow.singular_points) and flow.singular_points[lo] <= c_bar:
        raise SingularityInBox(flow.singular_points[lo])

    cell = bisect.bisect_right(flow.partition, a_bar) - 1
    if flow.partition[cell + 1] < b_bar:
        raise ValueError("roof is not constant over the box strip")
    r1 = flow.roof[cell]
    r2 = flow.roof_at(b_bar)
    tangent = (((a_bar, b_bar), r1), ((b_bar, c_bar), r2))

    # crossings of the base strictly inside the arc may only be the
    # figure-eight vertex; anything else inside (a_bar, c_bar) means the arc
    # re-enters the orthogonal edge and the region is not embedded
    for (_, flight_end), _ in tangent[:-1]:
        if flight_end != b_bar and a_bar < flight_end < c_bar:
            raise NotEmbedded(f"arc re-enters the orthogonal edge at {flight_end}")

    return FlowBox(
        a_bar=a_bar,
        b_bar=b_bar,
        c_bar=c_bar,
        orthogonal_edge=(a_bar, c_bar),
        tangent_edge=tangent,
        total_height=r1 + r2,
    )


@dataclass(frozen=True)
class TwistFamily:
    """One-parameter twist of the suspension, supported on the box strip.

    For twist parameter t in [0, sigma_max] the horizontal velocity inside
    the strip is t * drift_rate (positive rates push crossings toward
    c_bar, negative rates toward a_bar).
    """

    flow: SuspensionFlow
    box: FlowBox
    sigma_max: float
    drift_rate: float

    def __post_init__(self):
        if self.sigma_max < 0 or not math.isfinite(self.sigma_max):
            raise ValueError("sigma_max must be a finite nonnegative real")
        if not math.isfinite(self.drift_rate):
            raise ValueError("drift_rate must be finite")


def default_sigma_max(box: FlowBox) -> float:
    """Twist budget width / (2 * height) from the box dimensions."""
    return float(box.width) / (2.0 * float(box.total_height))


def make_twist_family(
    flow: SuspensionFlow,
    box: FlowBox,
    drift_rate: float = -4.0,
    sigma_max: float | None = None,
) -> TwistFamily:
    """Twist family with the default budget; rate -4 puts the closing
    parameter at half the budget for any box."""
    if sigma_max is None:
        sigma_max = default_sigma_max(box)
    return TwistFamily(flow, box, sigma_max, drift_rate)


def _check_coherent(family: TwistFamily) -> None:
    base = family.flow.base
    box = family.box
    if base.evaluate(box.a_bar) != box.b_bar or base.evaluate(box.b_bar) != box.c_bar:
        raise ContinuationBroken("box vertices do not follow the flow's return map")


def _near_singular(x: float, singulars: list[float]) -> bool:
    i = bisect.bisect_left(singulars, x - SINGULAR_SNAP)
    return i < len(singulars) and singulars[i] <= x + SINGULAR_SNAP


def twisted_return(family: TwistFamily, t: float, x: float) -> tuple[float, float]:
    """Next base crossing of the t-twisted flow started at x.

    Returns (position, flight time).  Drift acts only while the orbit is
    inside the box strip; an orbit that would leave the strip sideways
    rises vertically along the wall for the rest of its flight.  Raises
    LeftBoxUndefined when the start or landing point sits in a singular
    gap.
    """
    if not 0 <= t <= family.sigma_max * (1 + 1e-12):
        raise ValueError(f"twist {t} outside [0, {family.sigma_max}]")
    breaks, trans, part, roofs, singulars = family.flow.float_tables()
    if not breaks[0] <= x < breaks[-1]:
        raise ValueError(f"{x} outside the base interval")
    if _near_singular(x, singulars):
        raise LeftBoxUndefined(f"orbit starts in the singular gap at {x}")

    a = float(family.box.a_bar)
    b = float(family.box.b_bar)
    r1 = float(family.box.strip_height)
    tau = b - a  # box strip sits inside one continuity interval
    v = t * family.drift_rate

    enters_strip = (v > 0 and a <= x < b) or (v < 0 and a < x <= b)
    if v != 0 and enters_strip:
        y_wall = (b - x) / v if v > 0 else (a - x) / v
        if y_wall >= r1:
            x_top = x + v * r1
        else:
            x_top = b if v > 0 else a
        position = x_top + tau
        time = r1
    else:
        cell = bisect.bisect_right(part, x) - 1
        piece = bisect.bisect_right(breaks, x) - 1
        position = x + trans[piece]
        time = roofs[cell]

    if _near_singular(position, singulars):
        raise LeftBoxUndefined(f"twisted orbit exits into the singular gap at {position}")
    return position, time


def _continuation_point(family: TwistFamily, t: float) -> float:
    """Endpoint of the backward twisted arc from the vertex b_bar.

    The arc descends the strip from the glued top over a_bar; with drift
    toward a_bar it lands at a_bar + |t * drift| * height, clamped at the
    vertex once the closing parameter is passed.  With drift away from
    a_bar the arc hugs the tangent edge and the endpoint stays a_bar.
    """
    a = float(family.box.a_bar)
    b = float(family.box.b_bar)
    r1 = float(family.box.strip_height)
    u = t * family.drift_rate
    if u >= 0:
        return a
    return min(a - u * r1, b)


def continuation_curve(family: TwistFamily, steps: int) -> list[tuple[float, float]]:
    """Sample the continuation endpoint over [0, sigma_max].

    The sampled curve starts at a_bar, is monotone in t, and every sampled
    arc crosses the base transversally (the roof is strictly positive).
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    _check_coherent(family)
    sigma = family.sigma_max
    points = []
    prev = None
    for i in range(steps):
        t = sigma * i / (steps - 1)
        pt = _continuation_point(family, t)
        if prev is not None and pt < prev - 1e-15:
            raise ContinuationBroken("continuation endpoint moved backwards")
        prev = pt
        points.append((t, pt))
    return points


@dataclass(frozen=True)
class ClosingResult:
    """A closing parameter with its verified closed orbit."""

    sigma1: float
    periodic_point: float
    orbit_trace: tuple[tuple[float, float], ...]
    residual: float
    iterations: int
    scale: Fraction | None = None
    hit_bound: bool = False
    family: TwistFamily | None = field(default=None, repr=False, compare=False)


def find_closing_parameter(
    family: TwistFamily,
    tolerance: float = 1e-9,
    scale: Fraction | None = None,
    max_iterations: int = 200,
    sweep_steps: int = 64,
) -> ClosingResult:
    """Bisection for the twist parameter closing the vertex orbit.

    A coarse sweep brackets the sign change of g(t) = continuation(t) -
    b_bar, bisection refines it, and the result is re-validated by forward
    integration of the twisted flow from the periodic point; the residual
    must come out within ``tolerance``.  Raises NoClosingInRange when g
    never changes sign on [0, sigma_max] (zero drift, wrong drift
    direction, or a budget too small for the box).
    """
    _check_coherent(family)
    sigma = family.sigma_max
    b = float(family.box.b_bar)
    if sigma <= 0:
        raise NoClosingInRange("sigma_max is zero; no twist range to search")

    def g(t: float) -> float:
        return _continuation_point(family, t) - b

    ts = [sigma * i / sweep_steps for i in range(sweep_steps + 1)]
    bracket = None
    for lo_t, hi_t in zip(ts[:-1], ts[1:]):
        if g(lo_t) < 0 <= g(hi_t):
            bracket = (lo_t, hi_t)
            break
    if bracket is None:
        raise NoClosingInRange(
            "continuation never reaches the vertex on [0, sigma_max]; "
            "shrink the box or extend the twist budget"
        )

    lo_t, hi_t = bracket
    iterations = 0
    while hi_t - lo_t > 1e-15 * max(sigma, 1.0) and iterations < max_iterations:
        mid = 0.5 * (lo_t + hi_t)
        if g(mid) >= 0:
            hi_t = mid
        else:
            lo_t = mid
        iterations += 1
    sigma1 = hi_t

    position, flight = twisted_return(family, sigma1, b)
    residual = abs(position - b)
    if residual > tolerance:
        raise NoClosingInRange(
            f"closing verification failed: forward residual {residual} above {tolerance}"
        )
    return ClosingResult(
        sigma1=sigma1,
        periodic_point=b,
        orbit_trace=((b, 0.0), (position, flight)),
        residual=residual,
        iterations=iterations,
        scale=scale,
        hit_bound=sigma1 >= sigma * (1 - 1e-9),
        family=family,
    )


# -- shrinking-neighborhood closing pipeline ---------------------------------

_LADDER = (
    Fraction(1, 2),
    Fraction(11, 20),
    Fraction(3, 5),
    Fraction(13, 20),
    Fraction(7, 10),
    Fraction(3, 4),
    Fraction(4, 5),
    Fraction(17, 20),
    Fraction(9, 10),
    Fraction(19, 20),
)


def induced_suspension(flow: SuspensionFlow, b: Fraction) -> tuple[SuspensionFlow, InducedResult]:
    """First-return suspension over [0, b): accumulated roofs and the
    pulled-back singular set.

    The roof over a return-time piece is the total flight time of its
    return orbit; a point is singular for the induced flow when its orbit
    meets a singular point of the parent before returning.
    """
    result = induce(flow.base, b)
    base = flow.base
    roofs = []
    singulars: set[Fraction] = set()
    for (lo, hi), k in zip(result.pieces, result.return_times):
        mid = (lo + hi) / 2
        acc = Fraction(0)
        offset = Fraction(0)
        pos = mid
        for _ in range(k):
            acc += flow.roof_at(pos)
            seg_lo, seg_hi = lo + offset, hi + offset
            for q in flow.singular_points:
                if seg_lo <= q < seg_hi:
                    singulars.add(q - offset)
            tau = base.translations[base.piece_index(pos)]
            offset += tau
            pos += tau
        roofs.append(acc)
    partition = tuple(p[0] for p in result.pieces) + (b,)
    return (
        SuspensionFlow(
            base=result.induced,
            roof=tuple(roofs),
            singular_points=tuple(sorted(singulars)),
            K=flow.K,
            partition=partition,
        ),
        result,
    )


def _pick_admissible_edge(flow: SuspensionFlow, blocked: list) -> VirtualEdge | None:
    """Leftmost edge whose strip stays under one roof cell and whose span
    avoids every singular point."""
    part = flow.partition
    singulars = flow.singular_points
    for fam in find_virtual_edges(flow.base):
        span = 2 * fam.offset
        for j in range(len(part) - 1):
            sub_lo = max(fam.s_min, part[j])
            sub_sup = min(fam.s_sup, part[j + 1] - fam.offset)
            if sub_lo >= sub_sup:
                continue
            candidates = [sub_lo]
            for q in singulars:
                if sub_lo <= q < sub_sup:
                    room = sub_sup - q
                    candidates.append(q + min(DEFAULT_WITNESS_GAP, room / 2))
            for s in candidates:
                if not sub_lo <= s < sub_sup:
                    continue
                hit = next((q for q in singulars if s <= q <= s + span), None)
                if hit is None:
                    return fam.edge_at(s)
                blocked.append((fam.edge_at(s), hit))
    return None


def close_at_point(
    flow: SuspensionFlow,
    p: RationalLike,
    criterion: ClosingCriterion,
    shrink_steps: int,
    tolerance: float = 1e-9,
) -> list[ClosingResult]:
    """Close orbits through shrinking neighborhoods [0, b_n) of p.

    Each step induces the flow on a strictly smaller base that still meets
    the edge quota, builds the flow box over an admissible edge, and runs
    the closing search with a twist budget proportional to the
    neighborhood width (so successive closing parameters shrink along with
    the neighborhoods).  Raises NoEdgeInNeighborhood(n) when no scale
    below the previous one admits a quota-meeting, singularity-free edge.
    """
    p = as_rational(p)
    if not 0 <= p < flow.base.base_length:
        raise ValueError("p must lie in the base interval")
    if shrink_steps < 1:
        raise ValueError("shrink_steps must be >= 1")

    results: list[ClosingResult] = []
    b_prev = flow.base.base_length
    for n in range(1, shrink_steps + 1):
        blocked: list = []
        step_result = None
        for factor in _LADDER:
            b = b_prev * factor
            if b <= p:
                continue
            flow_n, _ = induced_suspension(flow, b)
            count, _ = max_disjoint_edges(flow_n.base, with_witness=False)
            if count < criterion.threshold:
                continue
            edge = _pick_admissible_edge(flow_n, blocked)
            if edge is None:
                continue
            try:
                box = build_flow_box(flow_n, edge)
            except SingularityInBox:
                continue
            tau = float(edge.e1 - edge.s)
            r1 = float(box.strip_height)
            sigma_budget = float(b) / (2.0 * float(box.total_height))
            drift = -2.0 * tau / (r1 * sigma_budget)
            family = TwistFamily(flow_n, box, sigma_max=sigma_budget, drift_rate=drift)
            step_result = find_closing_parameter(family, tolerance, scale=b)
            b_prev = b
            break
        if step_result is None:
            raise NoEdgeInNeighborhood(n, blocked=blocked)
        results.append(step_result)
    return results
