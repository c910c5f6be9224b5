"""JSON wire formats.

Exchange files carry {"lengths": ["2/3", "1/3"], "permutation": [2, 1]}
with rationals as decimal-free p/q strings.  Files must be canonical: a
permutation that would merge on construction is rejected with a
diagnostic rather than silently repaired.

Suspension flow files carry {"base": <exchange>, "roof": [...],
"singular_points": [...], "K": <int>}.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .closing import SuspensionFlow
from .errors import FormatError, IetError
from .iet import Iet, format_rational, make_iet, parse_rational


def iet_to_dict(iet: Iet) -> dict:
    return {
        "lengths": [format_rational(x) for x in iet.lengths],
        "permutation": list(iet.permutation),
    }


def iet_from_dict(data: dict) -> Iet:
    if not isinstance(data, dict) or "lengths" not in data or "permutation" not in data:
        raise FormatError("exchange JSON needs 'lengths' and 'permutation'")
    lengths = [parse_rational(str(x)) for x in data["lengths"]]
    permutation = list(data["permutation"])
    try:
        iet = make_iet(lengths, permutation)
    except IetError:
        raise
    if list(iet.permutation) != permutation or list(iet.lengths) != lengths:
        for i in range(1, len(permutation)):
            if permutation[i] == permutation[i - 1] + 1:
                raise FormatError(
                    f"permutation is not canonical: intervals {i} and {i + 1} "
                    "have adjacent images and would merge"
                )
        raise FormatError("exchange data is not canonical")
    return iet


def load_iet(path: str) -> Iet:
    with open(path, encoding="utf-8") as handle:
        return iet_from_dict(json.load(handle))


def dump_iet(iet: Iet, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(iet_to_dict(iet), handle, sort_keys=True, indent=2)
        handle.write("\n")


def flow_to_dict(flow: SuspensionFlow) -> dict:
    return {
        "base": iet_to_dict(flow.base),
        "roof": [format_rational(r) for r in flow.roof],
        "singular_points": [format_rational(q) for q in flow.singular_points],
        "K": flow.K,
    }


def flow_from_dict(data: dict) -> SuspensionFlow:
    if not isinstance(data, dict) or "base" not in data or "roof" not in data:
        raise FormatError("flow JSON needs 'base' and 'roof'")
    base = iet_from_dict(data["base"])
    roof = [parse_rational(str(r)) for r in data["roof"]]
    singulars = [parse_rational(str(q)) for q in data.get("singular_points", [])]
    k = int(data.get("K", len(singulars)))
    try:
        return SuspensionFlow(base, tuple(roof), tuple(singulars), k)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def load_flow(path: str) -> SuspensionFlow:
    with open(path, encoding="utf-8") as handle:
        return flow_from_dict(json.load(handle))


def rational_field(value: Fraction) -> str:
    """Alias kept next to the format definition for report writers."""
    return format_rational(value)
