"""Event-log analytics: aggregate statistics and inefficiency detection.

compute_stats reduces an event log to per-activity, per-resource, and
per-activity-allocation summaries.  detect_scenarios then evaluates the
nineteen inefficiency patterns against those summaries and emits one
ScenarioInstance per (pattern, activity) hit, each carrying enough
numeric evidence for the interventions module to act on without going
back to the log.

Patterns by id:
  1/2   excessive first/last-instance waiting in batches
  3     enablement or execution peaks not reflected in the schedule
  4     batches starting when few resources are available
  5     oversized batches inflating waits
  6     long parallel work in undersized batches
  7     sequential batching (no processing-time advantage)
  8/9   mid-execution idle from availability misalignment
  10    subadditive variable cost (bulk discount unexploited)
  11/12 high-cost / high-frequency activities worth amortizing
  13/14 low-cost activities with(out) a similarly-timed partner
  15    cost per instance not improving with batch size
  16/17 resource over/under-utilization
  18/19 high/low resource switching between consecutive batches
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calendars import (
    SECONDS_PER_DAY,
    SECONDS_PER_HOUR,
    SECONDS_PER_WEEK,
    Calendar,
    hour_of,
    weekday_of,
)
from .eventlog import EventLog
from .model import ProcessModel
from .policy import DAILY_HOUR, PARALLEL, SEQUENTIAL, SIZE, WEEK_DAY, BatchingPolicy, PolicySet

SCENARIO_IDS = tuple(range(1, 20))

#: patterns whose prescribed fix shrinks the size threshold
SHRINK_SIZE_SCENARIOS = (5, 7, 14, 15, 16, 19)
#: patterns whose prescribed fix grows the size threshold
GROW_SIZE_SCENARIOS = (6, 10, 11, 12, 13, 17, 18)


class AnalyticsError(ValueError):
    pass


Bucket = tuple[int, int]  # (weekday, hour of day)


def bucket_of(t: int) -> Bucket:
    return (weekday_of(t), hour_of(t))


@dataclass(frozen=True)
class ActivityStats:
    activity_id: str
    execution_count: int
    mean_processing_time: float
    mean_first_wait: float  # mean over batches of the longest member wait
    mean_last_wait: float  # mean over batches of the shortest member wait
    mean_batch_size: float
    total_waiting: float
    total_cost: float
    enablement_histogram: dict[Bucket, int]
    execution_histogram: dict[Bucket, int]
    # per-batch series, ordered by batch start (evidence for interventions)
    batch_sizes: tuple[int, ...]
    per_batch_max_waits: tuple[int, ...]
    per_batch_min_waits: tuple[int, ...]
    per_batch_busy: tuple[int, ...]
    idle_batch_share: float  # fraction of batches interrupted by closed time

    @property
    def batch_count(self) -> int:
        return len(self.batch_sizes)


@dataclass(frozen=True)
class ResourceStats:
    resource_id: str
    utilization: float  # busy seconds / calendar-open seconds over the log span
    availability_histogram: dict[Bucket, float]  # open fraction per week slot


@dataclass(frozen=True)
class AllocationVariability:
    activity_id: str
    distinct_resource_count: int
    switch_rate: float  # consecutive batch pairs handled by different resources


@dataclass(frozen=True)
class LogStats:
    activities: tuple[ActivityStats, ...]
    resources: tuple[ResourceStats, ...]
    allocation: tuple[AllocationVariability, ...]

    def activity(self, activity_id: str) -> ActivityStats:
        for s in self.activities:
            if s.activity_id == activity_id:
                return s
        raise AnalyticsError(f"no stats for activity {activity_id!r}")

    def resource(self, resource_id: str) -> ResourceStats:
        for s in self.resources:
            if s.resource_id == resource_id:
                return s
        raise AnalyticsError(f"no stats for resource {resource_id!r}")


def compute_stats(log: EventLog, model: ProcessModel) -> LogStats:
    """Aggregate the log; raises AnalyticsError on an empty log."""
    if not log.instances:
        raise AnalyticsError("cannot analyze an empty event log")

    horizon = max(r.end_time for r in log.instances)
    by_activity: dict[str, list] = {}
    for batch in log.batches:
        by_activity.setdefault(batch.activity_id, []).append(batch)

    activity_stats = []
    for activity_id in sorted(by_activity):
        batches = sorted(by_activity[activity_id], key=lambda b: (b.start_time, b.batch_id))
        instances = [log.instances[i] for b in batches for i in b.members]
        max_waits, min_waits, sizes, busy = [], [], [], []
        interrupted = 0
        for b in batches:
            enables = [log.instances[i].enable_time for i in b.members]
            max_waits.append(b.start_time - min(enables))
            min_waits.append(b.start_time - max(enables))
            sizes.append(b.size)
            busy.append(b.busy_seconds)
            if (b.end_time - b.start_time) > b.busy_seconds:
                interrupted += 1
        enablement_hist: dict[Bucket, int] = {}
        execution_hist: dict[Bucket, int] = {}
        for rec in instances:
            key = bucket_of(rec.enable_time)
            enablement_hist[key] = enablement_hist.get(key, 0) + 1
            key = bucket_of(rec.start_time)
            execution_hist[key] = execution_hist.get(key, 0) + 1
        activity_stats.append(
            ActivityStats(
                activity_id=activity_id,
                execution_count=len(instances),
                mean_processing_time=float(np.mean([r.work_seconds for r in instances])),
                mean_first_wait=float(np.mean(max_waits)),
                mean_last_wait=float(np.mean(min_waits)),
                mean_batch_size=float(np.mean(sizes)),
                total_waiting=float(sum(r.start_time - r.enable_time for r in instances)),
                total_cost=float(sum(b.cost for b in batches)),
                enablement_histogram=enablement_hist,
                execution_histogram=execution_hist,
                batch_sizes=tuple(sizes),
                per_batch_max_waits=tuple(max_waits),
                per_batch_min_waits=tuple(min_waits),
                per_batch_busy=tuple(busy),
                idle_batch_share=interrupted / len(batches),
            )
        )

    busy_by_resource: dict[str, int] = {}
    for batch in log.batches:
        busy_by_resource[batch.resource_id] = (
            busy_by_resource.get(batch.resource_id, 0) + batch.busy_seconds
        )
    resource_stats = []
    for profile in model.resources:
        available = profile.calendar.open_seconds_between(0, horizon)
        busy = busy_by_resource.get(profile.id, 0)
        utilization = min(1.0, busy / available) if available > 0 else 0.0
        hist = {
            (d, h): frac
            for d in range(7)
            for h in range(24)
            if (frac := profile.calendar.hour_fraction(d, h)) > 0.0
        }
        resource_stats.append(
            ResourceStats(
                resource_id=profile.id,
                utilization=utilization,
                availability_histogram=hist,
            )
        )

    allocation = []
    for activity_id in sorted(by_activity):
        batches = sorted(by_activity[activity_id], key=lambda b: (b.start_time, b.batch_id))
        executors = [b.resource_id for b in batches]
        pairs = list(zip(executors, executors[1:]))
        switch_rate = (
            sum(1 for a, b in pairs if a != b) / len(pairs) if pairs else 0.0
        )
        allocation.append(
            AllocationVariability(
                activity_id=activity_id,
                distinct_resource_count=len(set(executors)),
                switch_rate=switch_rate,
            )
        )

    return LogStats(
        activities=tuple(activity_stats),
        resources=tuple(resource_stats),
        allocation=tuple(allocation),
    )


@dataclass(frozen=True)
class DetectionConfig:
    """Trigger thresholds for the nineteen patterns, one knob per predicate."""

    wait_quantile: float = 0.75  # patterns 1, 2, 5: wait above this quantile
    processing_quantile: float = 0.75  # pattern 6
    concentration_share: float = 0.5  # pattern 3: mass held by the top buckets
    top_k: int = 3  # patterns 3, 4: bucket count examined
    size_cap: float = 10.0  # pattern 6: mean batch size considered small
    idle_share: float = 0.2  # patterns 8, 9: interrupted-batch fraction
    cost_share: float = 0.25  # patterns 11, 13, 14
    freq_share: float = 0.25  # patterns 12, 14
    similarity_threshold: float = 0.8  # patterns 13, 14: histogram cosine
    utilization_high: float = 0.8  # pattern 16
    utilization_low: float = 0.3  # pattern 17
    switch_high: float = 0.5  # pattern 18
    switch_low: float = 0.2  # pattern 19

    def __post_init__(self):
        for name in ("wait_quantile", "processing_quantile"):
            q = getattr(self, name)
            if not 0.0 < q < 1.0:
                raise AnalyticsError(f"{name} must lie in (0, 1), got {q}")
        for name in (
            "concentration_share",
            "idle_share",
            "cost_share",
            "freq_share",
            "similarity_threshold",
            "utilization_high",
            "utilization_low",
            "switch_high",
            "switch_low",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise AnalyticsError(f"{name} must lie in [0, 1], got {v}")
        if self.top_k < 1:
            raise AnalyticsError(f"top_k must be >= 1, got {self.top_k}")
        if self.size_cap < 1:
            raise AnalyticsError(f"size_cap must be >= 1, got {self.size_cap}")


@dataclass(frozen=True)
class Evidence:
    """Numeric payload a detected pattern hands to the interventions module.

    Which fields are filled depends on the pattern; the per-batch series
    feed the threshold formulas, the histograms feed schedule building,
    and the aligned waits feed the window-alignment fix.
    """

    observed: tuple[tuple[str, float], ...] = ()
    batch_sizes: tuple[int, ...] = ()
    per_batch_max_waits: tuple[int, ...] = ()
    per_batch_min_waits: tuple[int, ...] = ()
    histogram: tuple[tuple[Bucket, float], ...] = ()
    histogram_alt: tuple[tuple[Bucket, float], ...] = ()
    aligned_first_waits: tuple[float, ...] = ()
    aligned_last_waits: tuple[float, ...] = ()
    partner_activity: str = ""
    mean_cost_per_instance: float = 0.0

    def value(self, name: str) -> float:
        for key, v in self.observed:
            if key == name:
                return v
        raise AnalyticsError(f"evidence has no observation named {name!r}")


@dataclass(frozen=True)
class ScenarioInstance:
    scenario_id: int
    activity_id: str
    evidence: Evidence

    def __post_init__(self):
        if self.scenario_id not in SCENARIO_IDS:
            raise AnalyticsError(f"unknown scenario id {self.scenario_id}")


def _as_sorted_items(hist: dict[Bucket, float]) -> tuple[tuple[Bucket, float], ...]:
    return tuple(sorted(hist.items()))


def _quantile(values, q: float) -> float:
    return float(np.percentile(np.asarray(values, dtype=float), q * 100.0, method="linear"))


def _has_condition(policy: BatchingPolicy | None, kind: str) -> bool:
    return policy is not None and policy.rule.has_kind(kind)


def cosine_similarity(a: dict[Bucket, float], b: dict[Bucket, float]) -> float:
    keys = set(a) | set(b)
    if not keys:
        return 0.0
    va = np.array([a.get(k, 0.0) for k in sorted(keys)], dtype=float)
    vb = np.array([b.get(k, 0.0) for k in sorted(keys)], dtype=float)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


def _schedule_covers(policy: BatchingPolicy | None, buckets) -> bool:
    """True when every (weekday, hour) bucket can fire under some rule group
    holding a matching daily-hour condition."""
    if policy is None:
        return False
    for day, hour in buckets:
        covered = False
        for group in policy.rule.groups:
            hour_cond = group.find(DAILY_HOUR)
            if hour_cond is None or hour not in hour_cond.hours:
                continue
            day_cond = group.find(WEEK_DAY)
            if day_cond is not None and day not in day_cond.days:
                continue
            covered = True
            break
        if not covered:
            return False
    return True


def top_buckets(hist: dict[Bucket, float], k: int) -> list[Bucket]:
    """The k heaviest buckets; ties resolved by (weekday, hour) ascending."""
    ranked = sorted(hist.items(), key=lambda item: (-item[1], item[0]))
    return [bucket for bucket, count in ranked[:k] if count > 0]


def availability_histogram(model: ProcessModel, activity_id: str) -> dict[Bucket, float]:
    """Summed open-hour fractions of the activity's eligible resources."""
    hist: dict[Bucket, float] = {}
    for rid in model.activity(activity_id).resources:
        cal = model.resource(rid).calendar
        for d in range(7):
            for h in range(24):
                frac = cal.hour_fraction(d, h)
                if frac > 0.0:
                    hist[(d, h)] = hist.get((d, h), 0.0) + frac
    return hist


def weekly_windows(cal: Calendar) -> list[tuple[int, int]]:
    """Maximal open windows of one canonical week, as (start, end) seconds
    with start expressed within [0, one week)."""
    windows = []
    anchor = SECONDS_PER_WEEK
    for ws, we in cal.windows_from(anchor):
        if ws >= anchor + SECONDS_PER_WEEK:
            break
        if ws == anchor and cal.contains(anchor - 1):
            continue  # continuation of a window that began the previous week
        windows.append((ws - anchor, we - anchor))
    return windows


def window_start_histogram(model: ProcessModel, activity_id: str) -> dict[Bucket, float]:
    """Buckets holding availability-window beginnings, weighted by window
    length so longer windows rank first."""
    hist: dict[Bucket, float] = {}
    for rid in model.activity(activity_id).resources:
        for ws, we in weekly_windows(model.resource(rid).calendar):
            key = ((ws // SECONDS_PER_DAY) % 7, (ws % SECONDS_PER_DAY) // SECONDS_PER_HOUR)
            hist[key] = hist.get(key, 0.0) + float(we - ws)
    return hist


def fitting_slot_histogram(
    model: ProcessModel, activity_id: str, mean_busy: float
) -> dict[Bucket, float]:
    """Buckets from whose start the open run is long enough for a typical
    batch, weighted by that remaining open run."""
    hist: dict[Bucket, float] = {}
    for rid in model.activity(activity_id).resources:
        cal = model.resource(rid).calendar
        for d in range(7):
            for h in range(24):
                t = SECONDS_PER_WEEK + d * SECONDS_PER_DAY + h * SECONDS_PER_HOUR
                if not cal.contains(t):
                    continue
                remaining = cal.open_end(t) - t
                if remaining >= mean_busy:
                    hist[(d, h)] = max(hist.get((d, h), 0.0), float(remaining))
    return hist


def window_aligned_waits(
    log: EventLog,
    calendars: dict[str, Calendar],
    activity_id: str,
    search_horizon: int = 4 * SECONDS_PER_WEEK,
) -> tuple[list[float], list[float]]:
    """Per-batch first/last waits the activity would have shown had each
    batch started at the beginning of the nearest availability window (at
    or after the observed start) long enough for a typical batch.

    Raises AnalyticsError when some batch finds no such window within the
    search horizon.
    """
    batches = [b for b in log.batches if b.activity_id == activity_id]
    if not batches:
        raise AnalyticsError(f"activity {activity_id!r} has no batches to align")
    estimate = float(np.mean([b.busy_seconds for b in batches]))
    first, last = [], []
    for b in batches:
        cal = calendars[b.resource_id]
        chosen = None
        for ws, we in cal.windows_from(b.start_time):
            if ws - b.start_time > search_horizon:
                break
            if we - ws >= estimate:
                chosen = ws
                break
        if chosen is None:
            raise AnalyticsError(
                f"no availability window within {search_horizon}s fits batches of "
                f"activity {activity_id!r} (need {estimate:.0f}s)"
            )
        shift = chosen - b.start_time
        enables = [log.instances[i].enable_time for i in b.members]
        first.append(max(0.0, (b.start_time - min(enables)) + shift))
        last.append(max(0.0, (b.start_time - max(enables)) + shift))
    return first, last


def detect_scenarios(
    log: EventLog,
    model: ProcessModel,
    policies: PolicySet,
    config: DetectionConfig = DetectionConfig(),
) -> list[ScenarioInstance]:
    """Evaluate all nineteen trigger predicates; deterministic and pure."""
    stats = compute_stats(log, model)
    return detect_scenarios_from_stats(log, model, policies, stats, config)


def detect_scenarios_from_stats(
    log: EventLog,
    model: ProcessModel,
    policies: PolicySet,
    stats: LogStats,
    config: DetectionConfig = DetectionConfig(),
) -> list[ScenarioInstance]:
    acts = stats.activities
    first_wait_threshold = _quantile([a.mean_first_wait for a in acts], config.wait_quantile)
    last_wait_threshold = _quantile([a.mean_last_wait for a in acts], config.wait_quantile)
    processing_threshold = _quantile(
        [a.mean_processing_time for a in acts], config.processing_quantile
    )
    process_cost = sum(a.total_cost for a in acts)
    process_count = sum(a.execution_count for a in acts)
    switch_by_activity = {v.activity_id: v for v in stats.allocation}

    found: list[ScenarioInstance] = []

    def emit(scenario_id, activity_id, **evidence):
        found.append(ScenarioInstance(scenario_id, activity_id, Evidence(**evidence)))

    for a in acts:
        policy = policies.get(a.activity_id)
        mean_cost = a.total_cost / a.execution_count
        size_evidence = dict(
            batch_sizes=a.batch_sizes, mean_cost_per_instance=mean_cost
        )

        # -- waiting time -------------------------------------------------
        if policy is not None and a.mean_first_wait > first_wait_threshold:
            emit(
                1,
                a.activity_id,
                observed=(("mean_first_wait", a.mean_first_wait), ("threshold", first_wait_threshold)),
                per_batch_max_waits=a.per_batch_max_waits,
            )
        if policy is not None and a.mean_last_wait > last_wait_threshold:
            emit(
                2,
                a.activity_id,
                observed=(("mean_last_wait", a.mean_last_wait), ("threshold", last_wait_threshold)),
                per_batch_min_waits=a.per_batch_min_waits,
            )
        if policy is not None:
            enable_total = sum(a.enablement_histogram.values())
            top = top_buckets({k: float(v) for k, v in a.enablement_histogram.items()}, config.top_k)
            top_mass = sum(a.enablement_histogram[b] for b in top)
            if (
                enable_total > 0
                and top_mass / enable_total >= config.concentration_share
                and not _schedule_covers(policy, top)
            ):
                emit(
                    3,
                    a.activity_id,
                    observed=(("top_bucket_share", top_mass / enable_total),),
                    histogram=_as_sorted_items({k: float(v) for k, v in a.enablement_histogram.items()}),
                    histogram_alt=_as_sorted_items({k: float(v) for k, v in a.execution_histogram.items()}),
                )
        if policy is not None:
            avail = availability_histogram(model, a.activity_id)
            positive = [v for v in avail.values() if v > 0.0]
            if positive:
                median = float(np.median(positive))
                batch_starts = {
                    bucket_of(b.start_time)
                    for b in log.batches
                    if b.activity_id == a.activity_id
                }
                weak = {b for b in batch_starts if avail.get(b, 0.0) < median}
                if weak:
                    emit(
                        4,
                        a.activity_id,
                        observed=(("availability_median", median),),
                        histogram=_as_sorted_items(avail),
                    )
        if _has_condition(policy, SIZE) and a.mean_first_wait > first_wait_threshold:
            emit(
                5,
                a.activity_id,
                observed=(("mean_first_wait", a.mean_first_wait),),
                **size_evidence,
            )

        # -- processing time ----------------------------------------------
        if (
            policy is not None
            and policy.batch_type == PARALLEL
            and a.mean_processing_time > processing_threshold
            and a.mean_batch_size < config.size_cap
        ):
            emit(
                6,
                a.activity_id,
                observed=(("mean_processing_time", a.mean_processing_time),),
                **size_evidence,
            )
        if policy is not None and policy.batch_type == SEQUENTIAL:
            emit(7, a.activity_id, **size_evidence)
        if policy is not None and a.idle_batch_share > config.idle_share:
            mean_busy = float(np.mean(a.per_batch_busy))
            emit(
                8,
                a.activity_id,
                observed=(("idle_batch_share", a.idle_batch_share), ("mean_busy", mean_busy)),
                histogram=_as_sorted_items(window_start_histogram(model, a.activity_id)),
                histogram_alt=_as_sorted_items(
                    fitting_slot_histogram(model, a.activity_id, mean_busy)
                ),
            )
            calendars = {r.id: r.calendar for r in model.resources}
            try:
                aligned_first, aligned_last = window_aligned_waits(
                    log, calendars, a.activity_id
                )
            except AnalyticsError:
                pass  # no usable window; the schedule-based fix still applies
            else:
                emit(
                    9,
                    a.activity_id,
                    observed=(("idle_batch_share", a.idle_batch_share),),
                    aligned_first_waits=tuple(aligned_first),
                    aligned_last_waits=tuple(aligned_last),
                )

        # -- cost ----------------------------------------------------------
        if policy is not None and policy.cost.variable_cost:
            witness = None
            for s in sorted(set(a.batch_sizes)):
                if policy.cost.variable_at(2 * s) < 2 * policy.cost.variable_at(s):
                    witness = s
                    break
            if witness is not None:
                emit(
                    10,
                    a.activity_id,
                    observed=(("subadditive_at_size", float(witness)),),
                    **size_evidence,
                )
        cost_share = a.total_cost / process_cost if process_cost > 0 else 0.0
        freq_share = a.execution_count / process_count
        if cost_share > config.cost_share:
            emit(11, a.activity_id, observed=(("cost_share", cost_share),), **size_evidence)
        if freq_share > config.freq_share:
            emit(12, a.activity_id, observed=(("freq_share", freq_share),), **size_evidence)
        best_partner, best_similarity = "", 0.0
        for other in acts:
            if other.activity_id == a.activity_id:
                continue
            sim = cosine_similarity(
                {k: float(v) for k, v in a.enablement_histogram.items()},
                {k: float(v) for k, v in other.enablement_histogram.items()},
            )
            if sim > best_similarity or (sim == best_similarity and not best_partner):
                best_partner, best_similarity = other.activity_id, sim
        if cost_share < config.cost_share and best_similarity > config.similarity_threshold:
            emit(
                13,
                a.activity_id,
                observed=(("similarity", best_similarity), ("cost_share", cost_share)),
                partner_activity=best_partner,
                **size_evidence,
            )
        if (
            cost_share < config.cost_share
            and freq_share < config.freq_share
            and best_similarity <= config.similarity_threshold
        ):
            emit(
                14,
                a.activity_id,
                observed=(("similarity", best_similarity), ("cost_share", cost_share)),
                **size_evidence,
            )
        if policy is not None and len(set(a.batch_sizes)) >= 2:
            per_size: dict[int, list[float]] = {}
            for b in log.batches:
                if b.activity_id == a.activity_id:
                    per_size.setdefault(b.size, []).append(b.cost / b.size)
            ordered = sorted(per_size)
            means = [float(np.mean(per_size[s])) for s in ordered]
            if all(later >= earlier for earlier, later in zip(means, means[1:])):
                emit(
                    15,
                    a.activity_id,
                    observed=tuple((f"cost_at_{s}", m) for s, m in zip(ordered, means)),
                    **size_evidence,
                )

        # -- resources -----------------------------------------------------
        eligible = model.activity(a.activity_id).resources
        utilizations = [stats.resource(rid).utilization for rid in eligible]
        if any(u > config.utilization_high for u in utilizations):
            emit(
                16,
                a.activity_id,
                observed=(("max_utilization", max(utilizations)),),
                **size_evidence,
            )
        if utilizations and all(u < config.utilization_low for u in utilizations):
            emit(
                17,
                a.activity_id,
                observed=(("max_utilization", max(utilizations)),),
                **size_evidence,
            )
        variability = switch_by_activity[a.activity_id]
        if variability.switch_rate > config.switch_high:
            emit(
                18,
                a.activity_id,
                observed=(("switch_rate", variability.switch_rate),),
                **size_evidence,
            )
        if variability.switch_rate < config.switch_low and _has_condition(policy, SIZE):
            emit(
                19,
                a.activity_id,
                observed=(("switch_rate", variability.switch_rate),),
                **size_evidence,
            )

    found.sort(key=lambda s: (s.scenario_id, s.activity_id))
    return found
