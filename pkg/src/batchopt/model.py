"""Process model: activities, gateways, resources, arrivals.

The model is a node graph (activities and gateways joined by arcs) plus
resource profiles with weekly calendars and an arrival model.  Documents
are plain JSON; see docs/model-schema.md for the wire format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import rng
from .calendars import (
    Calendar,
    Interval,
    WEEKDAY_NAMES,
    format_clock,
    parse_clock,
    parse_weekday,
)

GATEWAY_KINDS = ("and-split", "and-join", "xor-split", "xor-join", "or-split", "or-join")
DISTRIBUTION_KINDS = ("fixed", "uniform", "exponential", "normal")


class ParseError(ValueError):
    """Document parse failure; message carries the path to the bad field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ValidationError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class DurationDistribution:
    """Sampling spec for processing / inter-arrival times, in seconds."""

    kind: str
    params: tuple[tuple[str, float], ...]

    def param(self, name: str) -> float:
        for k, v in self.params:
            if k == name:
                return v
        raise KeyError(name)

    def sample(self, u: float) -> float:
        """Map a uniform draw to a non-negative duration."""
        if self.kind == "fixed":
            return self.param("value")
        if self.kind == "uniform":
            return rng.uniform(u, self.param("low"), self.param("high"))
        if self.kind == "exponential":
            return rng.exponential(u, self.param("mean"))
        if self.kind == "normal":
            return rng.normal_truncated(u, self.param("mean"), self.param("stddev"))
        raise ValueError(f"unknown distribution kind {self.kind!r}")


def fixed(value: float) -> DurationDistribution:
    return DurationDistribution("fixed", (("value", float(value)),))


def uniform_dist(low: float, high: float) -> DurationDistribution:
    return DurationDistribution("uniform", (("low", float(low)), ("high", float(high))))


def exponential_dist(mean: float) -> DurationDistribution:
    return DurationDistribution("exponential", (("mean", float(mean)),))


def normal_dist(mean: float, stddev: float) -> DurationDistribution:
    return DurationDistribution("normal", (("mean", float(mean)), ("stddev", float(stddev))))


@dataclass(frozen=True)
class Activity:
    id: str
    name: str
    duration: DurationDistribution
    resources: tuple[str, ...]  # eligible resource ids
    fixed_cost_per_execution: float = 0.0


@dataclass(frozen=True)
class Gateway:
    id: str
    kind: str
    # arc id ("source->target") -> probability; split kinds only
    branch_probabilities: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class FlowArc:
    source: str
    target: str

    @property
    def id(self) -> str:
        return f"{self.source}->{self.target}"


@dataclass(frozen=True)
class ResourceProfile:
    id: str
    calendar: Calendar
    cost_per_time_unit: float = 0.0  # money per busy second in per-time mode


@dataclass(frozen=True)
class ArrivalModel:
    inter_arrival: DurationDistribution
    calendar: Calendar
    total_cases: int


@dataclass(frozen=True)
class ProcessModel:
    activities: tuple[Activity, ...]
    gateways: tuple[Gateway, ...]
    arcs: tuple[FlowArc, ...]
    resources: tuple[ResourceProfile, ...]
    arrival: ArrivalModel
    start_node: str
    end_nodes: tuple[str, ...]

    def activity(self, activity_id: str) -> Activity:
        for a in self.activities:
            if a.id == activity_id:
                return a
        raise KeyError(activity_id)

    def resource(self, resource_id: str) -> ResourceProfile:
        for r in self.resources:
            if r.id == resource_id:
                return r
        raise KeyError(resource_id)

    @property
    def node_ids(self) -> set[str]:
        return {a.id for a in self.activities} | {g.id for g in self.gateways}


# ---------------------------------------------------------------------------
# validation

def _distribution_violations(dist: DurationDistribution, where: str) -> list[str]:
    out = []
    try:
        if dist.kind == "fixed":
            if dist.param("value") < 0:
                out.append(f"{where}: fixed value must be >= 0")
        elif dist.kind == "uniform":
            low, high = dist.param("low"), dist.param("high")
            if low < 0 or high < low:
                out.append(f"{where}: uniform bounds must satisfy 0 <= low <= high")
        elif dist.kind == "exponential":
            if dist.param("mean") < 0:
                out.append(f"{where}: exponential mean must be >= 0")
        elif dist.kind == "normal":
            if dist.param("stddev") < 0:
                out.append(f"{where}: normal stddev must be >= 0")
        else:
            out.append(f"{where}: unknown distribution kind {dist.kind!r}")
    except KeyError as missing:
        out.append(f"{where}: missing parameter {missing.args[0]!r}")
    return out


def _calendar_violations(cal: Calendar, where: str) -> list[str]:
    out = []
    if not cal.intervals:
        out.append(f"{where}: calendar needs at least one interval")
    seen: dict[int, list[tuple[int, int]]] = {}
    for iv in cal.intervals:
        if not 0 <= iv.weekday <= 6:
            out.append(f"{where}: interval weekday {iv.weekday} out of range")
            continue
        if not (0 <= iv.start < iv.end <= 86400):
            out.append(
                f"{where}: interval {WEEKDAY_NAMES[iv.weekday]} "
                f"{format_clock(iv.start)}-{format_clock(iv.end)} must satisfy start < end within the day"
            )
            continue
        for s, e in seen.get(iv.weekday, []):
            if iv.start < e and s < iv.end:
                out.append(f"{where}: overlapping intervals on {WEEKDAY_NAMES[iv.weekday]}")
                break
        seen.setdefault(iv.weekday, []).append((iv.start, iv.end))
    return out


def validate_model(model: ProcessModel) -> list[str]:
    """All structural violations, sorted; empty means the model is sound."""
    out: list[str] = []
    node_ids = model.node_ids
    act_ids = {a.id for a in model.activities}
    res_ids = {r.id for r in model.resources}

    seen_nodes: set[str] = set()
    for a in model.activities:
        if a.id in seen_nodes:
            out.append(f"duplicate node id {a.id!r}")
        seen_nodes.add(a.id)
    for g in model.gateways:
        if g.id in seen_nodes:
            out.append(f"duplicate node id {g.id!r}")
        seen_nodes.add(g.id)
        if g.kind not in GATEWAY_KINDS:
            out.append(f"gateway {g.id!r}: unknown kind {g.kind!r}")

    arc_ids = set()
    outgoing: dict[str, list[FlowArc]] = {}
    incoming: dict[str, list[FlowArc]] = {}
    for arc in model.arcs:
        if arc.source not in node_ids:
            out.append(f"arc {arc.id!r}: unknown source node {arc.source!r}")
        if arc.target not in node_ids:
            out.append(f"arc {arc.id!r}: unknown target node {arc.target!r}")
        if arc.id in arc_ids:
            out.append(f"duplicate arc {arc.id!r}")
        arc_ids.add(arc.id)
        outgoing.setdefault(arc.source, []).append(arc)
        incoming.setdefault(arc.target, []).append(arc)

    if model.start_node not in node_ids:
        out.append(f"start node {model.start_node!r} is not a node")
    if not model.end_nodes:
        out.append("at least one end node is required")
    for e in model.end_nodes:
        if e not in node_ids:
            out.append(f"end node {e!r} is not a node")

    # reachability: every node from the start, every activity to some end
    if model.start_node in node_ids:
        reached = {model.start_node}
        frontier = [model.start_node]
        while frontier:
            n = frontier.pop()
            for arc in outgoing.get(n, []):
                if arc.target in node_ids and arc.target not in reached:
                    reached.add(arc.target)
                    frontier.append(arc.target)
        for n in sorted(node_ids - reached):
            out.append(f"node {n!r} unreachable from start node")
        ends = set(model.end_nodes) & node_ids
        reaches_end = set(ends)
        rev: dict[str, list[str]] = {}
        for arc in model.arcs:
            rev.setdefault(arc.target, []).append(arc.source)
        frontier = list(ends)
        while frontier:
            n = frontier.pop()
            for p in rev.get(n, []):
                if p not in reaches_end:
                    reaches_end.add(p)
                    frontier.append(p)
        for a in model.activities:
            if a.id not in reaches_end:
                out.append(f"activity {a.id!r} has no path to an end node")

    for a in model.activities:
        if not a.resources:
            out.append(f"activity {a.id!r}: no eligible resources")
        for r in a.resources:
            if r not in res_ids:
                out.append(f"activity {a.id!r}: unknown resource {r!r}")
        if a.fixed_cost_per_execution < 0:
            out.append(f"activity {a.id!r}: fixed cost must be >= 0")
        out.extend(_distribution_violations(a.duration, f"activity {a.id!r} duration"))

    for g in model.gateways:
        outs = outgoing.get(g.id, [])
        probs = dict(g.branch_probabilities)
        if g.kind in ("xor-split", "or-split"):
            for arc in outs:
                if arc.id not in probs:
                    out.append(f"gateway {g.id!r}: no probability for arc {arc.id!r}")
            for arc_id in sorted(set(probs) - {arc.id for arc in outs}):
                out.append(f"gateway {g.id!r}: probability for non-outgoing arc {arc_id!r}")
        if g.kind == "xor-split":
            if outs and all(arc.id in probs for arc in outs):
                total = sum(probs[arc.id] for arc in outs)
                if abs(total - 1.0) > 1e-9:
                    out.append(f"gateway {g.id!r}: branch probabilities sum to {total!r}, expected 1")
        if g.kind == "or-split":
            for arc in outs:
                p = probs.get(arc.id)
                if p is not None and not (0.0 < p <= 1.0):
                    out.append(f"gateway {g.id!r}: arc {arc.id!r} probability {p!r} outside (0, 1]")
        if g.kind.endswith("-join") and len(incoming.get(g.id, [])) < 2:
            out.append(f"gateway {g.id!r}: join needs at least 2 incoming arcs")

    for r in model.resources:
        if r.cost_per_time_unit < 0:
            out.append(f"resource {r.id!r}: cost per time unit must be >= 0")
        out.extend(_calendar_violations(r.calendar, f"resource {r.id!r}"))

    if model.arrival.total_cases < 1:
        out.append("arrival: totalCases must be >= 1")
    out.extend(_calendar_violations(model.arrival.calendar, "arrival"))
    out.extend(_distribution_violations(model.arrival.inter_arrival, "arrival interArrival"))

    return sorted(out)


# ---------------------------------------------------------------------------
# JSON wire format

def _expect(doc, key: str, path: str, types, required=True):
    if key not in doc:
        if required:
            raise ParseError(f"{path}.{key}", "missing required field")
        return None
    value = doc[key]
    if not isinstance(value, types):
        raise ParseError(f"{path}.{key}", f"expected {types}, got {type(value).__name__}")
    return value


def _parse_distribution(doc, path: str) -> DurationDistribution:
    if not isinstance(doc, dict):
        raise ParseError(path, "expected an object")
    kind = _expect(doc, "kind", path, str)
    if kind not in DISTRIBUTION_KINDS:
        raise ParseError(f"{path}.kind", f"unknown distribution kind {kind!r}")
    wanted = {
        "fixed": ("value",),
        "uniform": ("low", "high"),
        "exponential": ("mean",),
        "normal": ("mean", "stddev"),
    }[kind]
    params = []
    for name in wanted:
        v = _expect(doc, name, path, (int, float))
        params.append((name, float(v)))
    return DurationDistribution(kind, tuple(params))


def _serialize_distribution(dist: DurationDistribution) -> dict:
    return {"kind": dist.kind, **{k: v for k, v in dist.params}}


def _parse_calendar(doc, path: str) -> Calendar:
    if not isinstance(doc, list):
        raise ParseError(path, "expected a list of intervals")
    intervals = []
    for i, item in enumerate(doc):
        where = f"{path}[{i}]"
        if not isinstance(item, dict):
            raise ParseError(where, "expected an object")
        day = _expect(item, "weekday", where, str)
        start = _expect(item, "start", where, str)
        end = _expect(item, "end", where, str)
        try:
            intervals.append(Interval(parse_weekday(day), parse_clock(start), parse_clock(end)))
        except ValueError as err:
            raise ParseError(where, str(err)) from err
    return Calendar(tuple(intervals))


def _serialize_calendar(cal: Calendar) -> list[dict]:
    return [
        {
            "weekday": WEEKDAY_NAMES[iv.weekday],
            "start": format_clock(iv.start),
            "end": format_clock(iv.end),
        }
        for iv in cal.intervals
    ]


def parse_model(doc) -> ProcessModel:
    """Parse a model document (dict or JSON text).  Raises ParseError."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as err:
            raise ParseError("$", f"invalid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise ParseError("$", "expected a JSON object")

    activities = []
    for i, item in enumerate(_expect(doc, "activities", "$", list)):
        where = f"$.activities[{i}]"
        if not isinstance(item, dict):
            raise ParseError(where, "expected an object")
        activities.append(
            Activity(
                id=_expect(item, "id", where, str),
                name=_expect(item, "name", where, str, required=False) or item["id"],
                duration=_parse_distribution(_expect(item, "duration", where, dict), f"{where}.duration"),
                resources=tuple(_expect(item, "resources", where, list)),
                fixed_cost_per_execution=float(
                    _expect(item, "fixedCostPerExecution", where, (int, float), required=False) or 0.0
                ),
            )
        )

    gateways = []
    for i, item in enumerate(_expect(doc, "gateways", "$", list, required=False) or []):
        where = f"$.gateways[{i}]"
        if not isinstance(item, dict):
            raise ParseError(where, "expected an object")
        probs_doc = _expect(item, "branchProbabilities", where, dict, required=False) or {}
        probs = tuple(sorted((str(k), float(v)) for k, v in probs_doc.items()))
        gateways.append(Gateway(id=_expect(item, "id", where, str), kind=_expect(item, "kind", where, str), branch_probabilities=probs))

    arcs = []
    for i, item in enumerate(_expect(doc, "arcs", "$", list)):
        where = f"$.arcs[{i}]"
        if not isinstance(item, dict):
            raise ParseError(where, "expected an object")
        arcs.append(FlowArc(source=_expect(item, "source", where, str), target=_expect(item, "target", where, str)))

    resources = []
    for i, item in enumerate(_expect(doc, "resources", "$", list)):
        where = f"$.resources[{i}]"
        if not isinstance(item, dict):
            raise ParseError(where, "expected an object")
        resources.append(
            ResourceProfile(
                id=_expect(item, "id", where, str),
                calendar=_parse_calendar(_expect(item, "calendar", where, list), f"{where}.calendar"),
                cost_per_time_unit=float(_expect(item, "costPerTimeUnit", where, (int, float), required=False) or 0.0),
            )
        )

    arr_doc = _expect(doc, "arrival", "$", dict)
    arrival = ArrivalModel(
        inter_arrival=_parse_distribution(_expect(arr_doc, "interArrival", "$.arrival", dict), "$.arrival.interArrival"),
        calendar=_parse_calendar(_expect(arr_doc, "calendar", "$.arrival", list), "$.arrival.calendar"),
        total_cases=int(_expect(arr_doc, "totalCases", "$.arrival", int)),
    )

    return ProcessModel(
        activities=tuple(activities),
        gateways=tuple(gateways),
        arcs=tuple(arcs),
        resources=tuple(resources),
        arrival=arrival,
        start_node=_expect(doc, "startNode", "$", str),
        end_nodes=tuple(_expect(doc, "endNodes", "$", list)),
    )


def serialize_model(model: ProcessModel) -> dict:
    """Model -> plain document; parse(serialize(m)) == m."""
    return {
        "startNode": model.start_node,
        "endNodes": list(model.end_nodes),
        "activities": [
            {
                "id": a.id,
                "name": a.name,
                "duration": _serialize_distribution(a.duration),
                "resources": list(a.resources),
                "fixedCostPerExecution": a.fixed_cost_per_execution,
            }
            for a in model.activities
        ],
        "gateways": [
            {
                "id": g.id,
                "kind": g.kind,
                "branchProbabilities": {k: v for k, v in g.branch_probabilities},
            }
            for g in model.gateways
        ],
        "arcs": [{"source": arc.source, "target": arc.target} for arc in model.arcs],
        "resources": [
            {
                "id": r.id,
                "calendar": _serialize_calendar(r.calendar),
                "costPerTimeUnit": r.cost_per_time_unit,
            }
            for r in model.resources
        ],
        "arrival": {
            "interArrival": _serialize_distribution(model.arrival.inter_arrival),
            "calendar": _serialize_calendar(model.arrival.calendar),
            "totalCases": model.arrival.total_cases,
        },
    }


def load_model(path) -> ProcessModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())
