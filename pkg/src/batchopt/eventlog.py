"""Execution logs and the two optimization objectives.

A log holds one record per activity instance plus one per batch.  Every
instance belongs to exactly one batch; activity instances executed without
a policy are size-1 batches.  Objective values average the per-batch cycle
time and per-batch cost over the total number of instances.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from datetime import datetime, timedelta

# t = 0 maps to this instant; 2024-01-01 is a Monday, matching the
# weekly-calendar anchor.
LOG_EPOCH = datetime(2024, 1, 1)

EVENT_CSV_HEADER = "case_id,activity,resource,enable_time,start_time,end_time,batch_id,cost"
BATCH_CSV_HEADER = "batch_id,activity,resource,start_time,end_time,size,busy_seconds,cost"


def format_time(t: int) -> str:
    return (LOG_EPOCH + timedelta(seconds=int(t))).isoformat()


def parse_time(text: str) -> int:
    return int((datetime.fromisoformat(text) - LOG_EPOCH).total_seconds())


@dataclass(frozen=True)
class InstanceRecord:
    case_id: int
    activity_id: str
    resource_id: str
    enable_time: int
    start_time: int
    end_time: int
    batch_id: str
    allocated_cost: float
    work_seconds: int  # pure processing time, idle excluded (not exported)


@dataclass(frozen=True)
class BatchRecord:
    batch_id: str
    activity_id: str
    resource_id: str
    start_time: int
    end_time: int
    members: tuple[int, ...]  # indices into EventLog.instances, waiting order
    cost: float
    busy_seconds: int  # in-calendar work time, idle excluded

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class EventLog:
    instances: tuple[InstanceRecord, ...]
    batches: tuple[BatchRecord, ...]

    @property
    def horizon(self) -> int:
        ends = [b.end_time for b in self.batches]
        return max(ends) if ends else 0

    def batch_enable_times(self, batch: BatchRecord) -> list[int]:
        return [self.instances[i].enable_time for i in batch.members]

    def case_ids(self) -> list[int]:
        return sorted({r.case_id for r in self.instances})


@dataclass(frozen=True)
class ObjectiveValues:
    """The minimized pair: (avg_cycle_time, avg_cost)."""

    avg_cycle_time: float
    avg_cost: float
    total_cycle_time: float
    total_cost: float
    instance_count: int

    @property
    def point(self) -> tuple[float, float]:
        return (self.avg_cycle_time, self.avg_cost)


CYCLE_TIME_FULL = "full"
CYCLE_TIME_WAITING_AND_IDLE = "waiting-and-idle-only"
CYCLE_TIME_MODES = (CYCLE_TIME_FULL, CYCLE_TIME_WAITING_AND_IDLE)


def evaluate_objectives(log: EventLog, cycle_time_mode: str = CYCLE_TIME_FULL) -> ObjectiveValues:
    """Fold a log into the objective pair.

    Per batch, cycle time spans from the earliest member enablement to
    batch completion; in waiting-and-idle-only mode the batch's pure work
    time is subtracted, leaving waiting plus in-execution idle.
    """
    if cycle_time_mode not in CYCLE_TIME_MODES:
        raise ValueError(f"unknown cycle time mode {cycle_time_mode!r}")
    total_cycle = 0.0
    total_cost = 0.0
    for batch in log.batches:
        earliest = min(log.batch_enable_times(batch))
        span = batch.end_time - earliest
        if cycle_time_mode == CYCLE_TIME_WAITING_AND_IDLE:
            span -= batch.busy_seconds
        total_cycle += span
        total_cost += batch.cost
    n = len(log.instances)
    if n == 0:
        return ObjectiveValues(0.0, 0.0, 0.0, 0.0, 0)
    return ObjectiveValues(total_cycle / n, total_cost / n, total_cycle, total_cost, n)


def case_cycle_time(log: EventLog, case_id: int) -> int:
    """Wall time from the case's first instance start to its last completion."""
    records = [r for r in log.instances if r.case_id == case_id]
    if not records:
        raise KeyError(f"case {case_id} not in log")
    return max(r.end_time for r in records) - min(r.start_time for r in records)


def filter_warmup(log: EventLog, warmup: int) -> EventLog:
    """Drop the first `warmup` cases (by case id) from the log.

    Batches keep only surviving members; their cost becomes the sum of the
    survivors' allocated shares, and emptied batches disappear.
    """
    if warmup <= 0:
        return log
    keep = [i for i, r in enumerate(log.instances) if r.case_id >= warmup]
    remap = {old: new for new, old in enumerate(keep)}
    instances = tuple(log.instances[i] for i in keep)
    batches = []
    for b in log.batches:
        survivors = tuple(remap[i] for i in b.members if i in remap)
        if not survivors:
            continue
        cost = sum(instances[i].allocated_cost for i in survivors)
        batches.append(replace(b, members=survivors, cost=cost))
    return EventLog(instances, tuple(batches))


# ---------------------------------------------------------------------------
# CSV export

def event_rows(log: EventLog):
    for r in log.instances:
        yield [
            r.case_id,
            r.activity_id,
            r.resource_id,
            format_time(r.enable_time),
            format_time(r.start_time),
            format_time(r.end_time),
            r.batch_id,
            repr(r.allocated_cost),
        ]


def batch_rows(log: EventLog):
    for b in log.batches:
        yield [
            b.batch_id,
            b.activity_id,
            b.resource_id,
            format_time(b.start_time),
            format_time(b.end_time),
            b.size,
            b.busy_seconds,
            repr(b.cost),
        ]


def _render(header: str, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header.split(","))
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def render_event_csv(log: EventLog) -> str:
    return _render(EVENT_CSV_HEADER, event_rows(log))


def render_batch_csv(log: EventLog) -> str:
    return _render(BATCH_CSV_HEADER, batch_rows(log))


def write_event_csv(log: EventLog, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_event_csv(log))


def write_batch_csv(log: EventLog, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_batch_csv(log))
