"""Turning detected inefficiency patterns into concrete policy edits.

Each detected pattern prescribes a direction (shrink or grow the size
threshold, add or retune a waiting threshold, align firing with a
schedule).  derive_interventions expands a pattern instance into one
PolicyDelta per applicable scaling factor; apply_delta executes a delta
as a pure function from policy set to policy set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .analytics import (
    GROW_SIZE_SCENARIOS,
    SHRINK_SIZE_SCENARIOS,
    Bucket,
    LogStats,
    ScenarioInstance,
    top_buckets,
    window_aligned_waits,
)
from .calendars import Calendar
from .eventlog import EventLog
from .policy import (
    DAILY_HOUR,
    PARALLEL,
    SEQUENTIAL,
    SIZE,
    WEEK_DAY,
    WT_FIRST,
    WT_LAST,
    BatchingPolicy,
    Condition,
    ConditionGroup,
    CostModel,
    ActivationRule,
    PolicySet,
    in_hours,
    size_at_least,
    wait_first_at_least,
    wait_last_at_least,
    on_days,
)
from .rng import round_half_up


class InterventionError(ValueError):
    pass


@dataclass(frozen=True)
class InterventionConfig:
    scale_grid: tuple[float, ...] = (0.5, 0.8, 1.25, 2.0)
    min_size: int = 1
    max_size: int = 50
    top_k: int = 3

    def __post_init__(self):
        if not self.scale_grid or any(lam <= 0 for lam in self.scale_grid):
            raise InterventionError(f"scale grid must be positive, got {self.scale_grid}")
        if self.min_size < 1 or self.max_size < self.min_size:
            raise InterventionError(
                f"need 1 <= min_size <= max_size, got [{self.min_size}, {self.max_size}]"
            )
        if self.top_k < 1:
            raise InterventionError(f"top_k must be >= 1, got {self.top_k}")

    @property
    def shrink_factors(self) -> tuple[float, ...]:
        return tuple(lam for lam in self.scale_grid if lam < 1.0)

    @property
    def grow_factors(self) -> tuple[float, ...]:
        return tuple(lam for lam in self.scale_grid if lam > 1.0)


ADD_CONDITION = "add-condition"
REPLACE_THRESHOLD = "replace-threshold"
ADD_SCHEDULE = "add-schedule"
SCALE_SIZE = "scale-size"
SET_WAIT_THRESHOLDS = "set-wait-thresholds"
TOGGLE_BATCH_TYPE = "toggle-batch-type"
DELTA_KINDS = (
    ADD_CONDITION,
    REPLACE_THRESHOLD,
    ADD_SCHEDULE,
    SCALE_SIZE,
    SET_WAIT_THRESHOLDS,
    TOGGLE_BATCH_TYPE,
)


@dataclass(frozen=True)
class PolicyDelta:
    """One reified policy edit, carrying its provenance for the audit trail."""

    activity_id: str
    kind: str
    scenario_id: int = 0  # 0 = random perturbation, no pattern behind it
    scale: float = 1.0
    condition_kind: str = ""  # add-condition / replace-threshold target
    new_threshold: float = 0.0
    new_last_threshold: float = 0.0  # set-wait-thresholds only
    schedule: tuple[Bucket, ...] = ()  # add-schedule only
    constrain: bool = False  # add-schedule: tighten existing groups instead
    new_policy_fixed_cost: float = 0.0  # cost seed when the edit creates a policy

    def __post_init__(self):
        if self.kind not in DELTA_KINDS:
            raise InterventionError(f"unknown delta kind {self.kind!r}")

    def describe(self) -> str:
        detail = {
            ADD_CONDITION: f"{self.condition_kind}>={self.new_threshold:g}",
            REPLACE_THRESHOLD: f"{self.condition_kind}:={self.new_threshold:g}",
            ADD_SCHEDULE: ("constrain " if self.constrain else "") + repr(list(self.schedule)),
            SCALE_SIZE: f"size:={self.new_threshold:g}",
            SET_WAIT_THRESHOLDS: f"wt-first:={self.new_threshold:g} wt-last:={self.new_last_threshold:g}",
            TOGGLE_BATCH_TYPE: "flip batch type",
        }[self.kind]
        return f"s{self.scenario_id:02d} λ={self.scale:g} {self.activity_id}: {self.kind} {detail}"


def delta_to_doc(delta: PolicyDelta) -> dict:
    return {
        "activity": delta.activity_id,
        "kind": delta.kind,
        "scenario": delta.scenario_id,
        "scale": delta.scale,
        "conditionKind": delta.condition_kind,
        "threshold": delta.new_threshold,
        "lastThreshold": delta.new_last_threshold,
        "schedule": [list(b) for b in delta.schedule],
        "constrain": delta.constrain,
        "newPolicyFixedCost": delta.new_policy_fixed_cost,
    }


# -- threshold arithmetic ---------------------------------------------------


def scale_size_threshold(sizes, lam: float, config: InterventionConfig = InterventionConfig()) -> int:
    """New size threshold: the mean observed batch size scaled by lam,
    rounded half-up and clamped to the configured size range."""
    if not sizes:
        raise InterventionError("cannot scale a size threshold without observed batch sizes")
    if lam <= 0:
        raise InterventionError(f"scaling factor must be positive, got {lam}")
    scaled = round_half_up(lam * float(np.mean(sizes)))
    return max(config.min_size, min(config.max_size, scaled))


def compute_wt_first_threshold(per_batch_max_waits, lam: float) -> float:
    """Scaled mean of the longest member wait seen in each batch."""
    if not per_batch_max_waits:
        raise InterventionError("no batch waits to derive a wt-first threshold from")
    return lam * float(np.mean(per_batch_max_waits))


def compute_wt_last_threshold(per_batch_min_waits, lam: float) -> float:
    """Scaled mean of the shortest member wait seen in each batch."""
    if not per_batch_min_waits:
        raise InterventionError("no batch waits to derive a wt-last threshold from")
    return lam * float(np.mean(per_batch_min_waits))


def build_schedule_set(histogram, top_k: int) -> tuple[Bucket, ...]:
    """The heaviest (weekday, hour) buckets, heaviest first; ties resolved
    by (weekday, hour) ascending."""
    items = dict(histogram)
    chosen = top_buckets(items, top_k)
    if not chosen:
        raise InterventionError("schedule histogram holds no positive buckets")
    return tuple(chosen)


def compute_window_aligned_thresholds(
    log: EventLog,
    calendars: dict[str, Calendar],
    activity_id: str,
    lam: float,
    search_horizon: int | None = None,
) -> tuple[float, float]:
    """Waiting thresholds that re-anchor batch firing at the start of the
    nearest sufficiently long availability window."""
    kwargs = {} if search_horizon is None else {"search_horizon": search_horizon}
    first, last = window_aligned_waits(log, calendars, activity_id, **kwargs)
    return lam * float(np.mean(first)), lam * float(np.mean(last))


# -- pattern -> deltas ------------------------------------------------------


def derive_interventions(
    instance: ScenarioInstance,
    stats: LogStats,
    policies: PolicySet,
    config: InterventionConfig = InterventionConfig(),
) -> list[PolicyDelta]:
    """Expand one detected pattern into concrete deltas, one per applicable
    scaling factor (or one per schedule criterion)."""
    sid = instance.scenario_id
    activity_id = instance.activity_id
    ev = instance.evidence
    policy = policies.get(activity_id)
    deltas: list[PolicyDelta] = []

    def wait_delta(condition_kind, waits, compute):
        for lam in config.shrink_factors:
            threshold = compute(waits, lam)
            kind = (
                REPLACE_THRESHOLD
                if policy is not None and policy.rule.has_kind(condition_kind)
                else ADD_CONDITION
            )
            deltas.append(
                PolicyDelta(
                    activity_id=activity_id,
                    kind=kind,
                    scenario_id=sid,
                    scale=lam,
                    condition_kind=condition_kind,
                    new_threshold=threshold,
                )
            )

    if sid == 1:
        if policy is None:
            raise InterventionError("pattern 1 requires a batched activity")
        wait_delta(WT_FIRST, ev.per_batch_max_waits, compute_wt_first_threshold)
    elif sid == 2:
        if policy is None:
            raise InterventionError("pattern 2 requires a batched activity")
        wait_delta(WT_LAST, ev.per_batch_min_waits, compute_wt_last_threshold)
    elif sid == 3:
        seen = set()
        for histogram in (ev.histogram, ev.histogram_alt):
            if not histogram:
                continue
            schedule = build_schedule_set(histogram, config.top_k)
            if schedule in seen:
                continue
            seen.add(schedule)
            deltas.append(
                PolicyDelta(
                    activity_id=activity_id,
                    kind=ADD_SCHEDULE,
                    scenario_id=sid,
                    schedule=schedule,
                )
            )
    elif sid == 4:
        deltas.append(
            PolicyDelta(
                activity_id=activity_id,
                kind=ADD_SCHEDULE,
                scenario_id=sid,
                schedule=build_schedule_set(ev.histogram, config.top_k),
            )
        )
    elif sid == 8:
        for histogram in (ev.histogram, ev.histogram_alt):
            if not histogram:
                continue
            deltas.append(
                PolicyDelta(
                    activity_id=activity_id,
                    kind=ADD_SCHEDULE,
                    scenario_id=sid,
                    schedule=build_schedule_set(histogram, config.top_k),
                    constrain=True,
                )
            )
    elif sid == 9:
        if not ev.aligned_first_waits or not ev.aligned_last_waits:
            raise InterventionError("pattern 9 evidence lacks window-aligned waits")
        for lam in config.scale_grid:
            deltas.append(
                PolicyDelta(
                    activity_id=activity_id,
                    kind=SET_WAIT_THRESHOLDS,
                    scenario_id=sid,
                    scale=lam,
                    new_threshold=lam * float(np.mean(ev.aligned_first_waits)),
                    new_last_threshold=lam * float(np.mean(ev.aligned_last_waits)),
                )
            )
    elif sid in SHRINK_SIZE_SCENARIOS or sid in GROW_SIZE_SCENARIOS:
        factors = (
            config.shrink_factors if sid in SHRINK_SIZE_SCENARIOS else config.grow_factors
        )
        for lam in factors:
            deltas.append(
                PolicyDelta(
                    activity_id=activity_id,
                    kind=SCALE_SIZE,
                    scenario_id=sid,
                    scale=lam,
                    new_threshold=float(scale_size_threshold(ev.batch_sizes, lam, config)),
                    new_policy_fixed_cost=ev.mean_cost_per_instance,
                )
            )
    else:
        raise InterventionError(f"no intervention mapping for pattern {sid}")
    return deltas


# -- delta application ------------------------------------------------------


def _fresh_policy(delta: PolicyDelta) -> BatchingPolicy:
    return BatchingPolicy(
        activity_id=delta.activity_id,
        batch_type=PARALLEL,
        rule=ActivationRule(),
        cost=CostModel(fixed_cost=delta.new_policy_fixed_cost),
    )


def _replace_thresholds(rule: ActivationRule, kind: str, value: float) -> ActivationRule:
    groups = []
    hits = 0
    for group in rule.groups:
        conditions = []
        for c in group.conditions:
            if c.kind == kind:
                conditions.append(replace(c, threshold=value))
                hits += 1
            else:
                conditions.append(c)
        groups.append(ConditionGroup(tuple(conditions)))
    if hits == 0:
        raise InterventionError(f"policy has no {kind!r} condition to retune")
    return ActivationRule(tuple(groups))


def _append_group(rule: ActivationRule, *conditions: Condition) -> ActivationRule:
    return ActivationRule(rule.groups + (ConditionGroup(tuple(conditions)),))


def _set_or_append(rule: ActivationRule, kind: str, condition: Condition, value: float) -> ActivationRule:
    if rule.has_kind(kind):
        return _replace_thresholds(rule, kind, value)
    return _append_group(rule, condition)


def _schedule_group(day: int, hour: int) -> tuple[Condition, Condition]:
    return (on_days(day), in_hours(hour))


def _constrain_with_schedule(rule: ActivationRule, schedule) -> ActivationRule:
    """Tighten every group so it can only fire inside the schedule's slots."""
    new_groups = []
    for group in rule.groups:
        for day, hour in schedule:
            conditions = []
            feasible = True
            had_hour = had_day = False
            for c in group.conditions:
                if c.kind == DAILY_HOUR:
                    had_hour = True
                    if hour in c.hours:
                        conditions.append(replace(c, hours=(hour,)))
                    else:
                        feasible = False
                        break
                elif c.kind == WEEK_DAY:
                    had_day = True
                    if day in c.days:
                        conditions.append(replace(c, days=(day,)))
                    else:
                        feasible = False
                        break
                else:
                    conditions.append(c)
            if not feasible:
                continue
            if not had_day:
                conditions.append(on_days(day))
            if not had_hour:
                conditions.append(in_hours(hour))
            candidate = ConditionGroup(tuple(conditions))
            if candidate not in new_groups:
                new_groups.append(candidate)
    if not new_groups:
        raise InterventionError("schedule constraint would leave the rule unable to fire")
    return ActivationRule(tuple(new_groups))


def apply_delta(policies: PolicySet, delta: PolicyDelta) -> PolicySet:
    """Apply one delta, returning a new policy set; the input is untouched.

    A delta touching an unbatched activity first gives it a parallel
    policy with an empty rule, then edits that."""
    policy = policies.get(delta.activity_id)
    created = policy is None
    if created:
        if delta.kind == TOGGLE_BATCH_TYPE:
            raise InterventionError(
                f"cannot toggle batch type: activity {delta.activity_id!r} is not batched"
            )
        policy = _fresh_policy(delta)

    rule = policy.rule
    batch_type = policy.batch_type
    if delta.kind == ADD_CONDITION:
        if delta.condition_kind == WT_FIRST:
            rule = _append_group(rule, wait_first_at_least(delta.new_threshold))
        elif delta.condition_kind == WT_LAST:
            rule = _append_group(rule, wait_last_at_least(delta.new_threshold))
        elif delta.condition_kind == SIZE:
            rule = _append_group(rule, size_at_least(int(delta.new_threshold)))
        else:
            raise InterventionError(f"cannot add condition of kind {delta.condition_kind!r}")
    elif delta.kind == REPLACE_THRESHOLD:
        rule = _replace_thresholds(rule, delta.condition_kind, delta.new_threshold)
    elif delta.kind == SCALE_SIZE:
        rule = _set_or_append(rule, SIZE, size_at_least(int(delta.new_threshold)), delta.new_threshold)
    elif delta.kind == SET_WAIT_THRESHOLDS:
        rule = _set_or_append(
            rule, WT_FIRST, wait_first_at_least(delta.new_threshold), delta.new_threshold
        )
        rule = _set_or_append(
            rule, WT_LAST, wait_last_at_least(delta.new_last_threshold), delta.new_last_threshold
        )
    elif delta.kind == ADD_SCHEDULE:
        if delta.constrain and rule.groups:
            rule = _constrain_with_schedule(rule, delta.schedule)
        else:
            for day, hour in delta.schedule:
                rule = _append_group(rule, *_schedule_group(day, hour))
    elif delta.kind == TOGGLE_BATCH_TYPE:
        batch_type = SEQUENTIAL if batch_type == PARALLEL else PARALLEL
    else:
        raise InterventionError(f"unknown delta kind {delta.kind!r}")

    out = dict(policies)
    out[delta.activity_id] = BatchingPolicy(
        activity_id=delta.activity_id,
        batch_type=batch_type,
        rule=rule,
        cost=policy.cost,
    )
    return out
