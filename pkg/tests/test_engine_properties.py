"""Randomized invariants for the simulator.

Small chain models with random durations and random batching policies;
every run must satisfy the structural laws of the log regardless of the
draw: batches partition instances, allocations conserve cost, member
spans obey the batch type, and arrivals ignore the policy.
"""

import math

from hypothesis import given, settings, strategies as st

from batchopt import model as m
from batchopt import policy as pol
from batchopt.engine import SimConfig, simulate

ALL_WEEK = [
    {"weekday": d, "start": "00:00", "end": "24:00"}
    for d in ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")
]
BUSINESS_WEEK = [
    {"weekday": d, "start": "09:00", "end": "17:00"}
    for d in ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday")
]


durations = st.one_of(
    st.fixed_dictionaries({"kind": st.just("fixed"), "value": st.integers(60, 7200)}),
    st.fixed_dictionaries(
        {"kind": st.just("exponential"), "mean": st.integers(300, 3600)}
    ),
    st.integers(60, 3000).flatmap(
        lambda lo: st.fixed_dictionaries(
            {
                "kind": st.just("uniform"),
                "low": st.just(lo),
                "high": st.integers(lo + 1, lo + 3600),
            }
        )
    ),
)


conditions = st.one_of(
    st.builds(pol.size_at_least, st.integers(1, 6)),
    st.builds(pol.wait_first_at_least, st.integers(60, 6 * 3600)),
    st.builds(pol.wait_last_at_least, st.integers(60, 6 * 3600)),
    st.builds(pol.in_hours, st.integers(0, 23)),
    st.builds(pol.on_days, st.integers(0, 6)),
)


@st.composite
def rules(draw):
    n_groups = draw(st.integers(0, 2))
    groups = []
    for _ in range(n_groups):
        conds = draw(st.lists(conditions, min_size=1, max_size=3, unique_by=lambda c: c.kind))
        groups.append(conds)
    return pol.rule(*groups)


@st.composite
def scenarios(draw):
    n_acts = draw(st.integers(1, 3))
    acts = [f"step{i}" for i in range(n_acts)]
    doc = {
        "startNode": acts[0],
        "endNodes": [acts[-1]],
        "activities": [
            {
                "id": a,
                "duration": draw(durations),
                "resources": ["shared"],
                "fixedCostPerExecution": draw(st.floats(0, 5)),
            }
            for a in acts
        ],
        "arcs": [{"source": acts[i], "target": acts[i + 1]} for i in range(n_acts - 1)],
        "resources": [
            {
                "id": "shared",
                "calendar": draw(st.sampled_from([ALL_WEEK, BUSINESS_WEEK])),
                "costPerTimeUnit": draw(st.floats(0, 2)),
            }
        ],
        "arrival": {
            "interArrival": draw(durations),
            "calendar": ALL_WEEK,
            "totalCases": draw(st.integers(1, 8)),
        },
    }
    policies = {}
    for a in acts:
        if draw(st.booleans()):
            policies[a] = pol.BatchingPolicy(
                activity_id=a,
                batch_type=draw(st.sampled_from([pol.PARALLEL, pol.SEQUENTIAL])),
                rule=draw(rules()),
                cost=pol.CostModel(
                    fixed_cost=draw(st.floats(0, 10)),
                    resource_cost_mode=draw(
                        st.sampled_from([pol.PER_TIME, pol.PROCESSING_SCALED])
                    ),
                ),
            )
    seed = draw(st.integers(0, 2**31))
    return m.parse_model(doc), policies, seed


@settings(deadline=None)
@given(scenarios())
def test_structural_invariants(scenario):
    model, policies, seed = scenario
    log, objectives = simulate(model, policies, SimConfig(seed=seed))

    n_acts = len(model.activities)
    assert len(log.instances) == model.arrival.total_cases * n_acts

    seen = set()
    for batch in log.batches:
        assert batch.members, "no empty batches"
        for i in batch.members:
            assert i not in seen
            seen.add(i)
            rec = log.instances[i]
            assert rec.batch_id == batch.batch_id
            assert rec.activity_id == batch.activity_id
        member_recs = [log.instances[i] for i in batch.members]
        assert batch.start_time == min(r.start_time for r in member_recs)
        assert batch.end_time == max(r.end_time for r in member_recs)
        assert all(r.enable_time <= batch.start_time for r in member_recs)
        assert sum(r.allocated_cost for r in member_recs) == batch.cost
        assert math.isfinite(batch.cost) and batch.cost >= 0.0
    assert seen == set(range(len(log.instances)))

    assert objectives.instance_count == len(log.instances)
    assert objectives.total_cost >= 0.0


@settings(deadline=None)
@given(scenarios())
def test_batch_type_laws(scenario):
    model, policies, seed = scenario
    log, _ = simulate(model, policies, SimConfig(seed=seed))
    cal = model.resource("shared").calendar
    for batch in log.batches:
        member_recs = [log.instances[i] for i in batch.members]
        policy = policies.get(batch.activity_id)
        batch_type = policy.batch_type if policy else pol.PARALLEL
        if batch_type == pol.PARALLEL:
            assert all(r.start_time == batch.start_time for r in member_recs)
            assert all(r.end_time == batch.end_time for r in member_recs)
            assert batch.busy_seconds == max(r.work_seconds for r in member_recs)
        else:
            ordered = sorted(member_recs, key=lambda r: r.start_time)
            assert ordered[0].start_time == batch.start_time
            for prev, cur in zip(ordered, ordered[1:]):
                assert cur.start_time == prev.end_time
            assert batch.busy_seconds == sum(r.work_seconds for r in member_recs)
        assert cal.open_seconds_between(batch.start_time, batch.end_time) == batch.busy_seconds


@settings(deadline=None)
@given(scenarios())
def test_policy_never_perturbs_arrivals(scenario):
    model, policies, seed = scenario
    first = model.start_node
    plain, _ = simulate(model, {}, SimConfig(seed=seed))
    batched, _ = simulate(model, policies, SimConfig(seed=seed))
    enables = lambda log: sorted(
        (r.case_id, r.enable_time) for r in log.instances if r.activity_id == first
    )
    assert enables(plain) == enables(batched)


@settings(deadline=None)
@given(scenarios())
def test_same_seed_reproduces_everything(scenario):
    model, policies, seed = scenario
    assert simulate(model, policies, SimConfig(seed=seed)) == simulate(
        model, policies, SimConfig(seed=seed)
    )
