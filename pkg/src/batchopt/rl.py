"""Policy-gradient search over the fixed intervention action space.

The agent walks the policy space one intervention per iteration: it
detects patterns on the current candidate's log, masks the fixed
(pattern id, option slot) action grid down to the interventions that are
actually available, samples one from a linear softmax policy, simulates
it, and scores the move against the current front (dominate > improve >
penalty).  A linear state-value head provides the baseline and training
uses the clipped-ratio surrogate on full experience buffers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytics import (
    SCENARIO_IDS,
    AnalyticsError,
    LogStats,
    compute_stats,
    detect_scenarios_from_stats,
)
from .engine import SimulationError, simulate
from .eventlog import EventLog
from .interventions import (
    InterventionError,
    PolicyDelta,
    apply_delta,
    delta_to_doc,
    derive_interventions,
)
from .model import ProcessModel
from .optimize import (
    RL,
    OptimizeResult,
    OptimizerConfig,
    OptimizerError,
    RLConfig,
    _sim_config,
)
from .pareto import ParetoFront, Point, Solution, dominates, update_front
from .policy import PolicySet
from .rng import unit

ACTION_SLOTS = 4  # options kept per pattern id (one per scaling factor slot)
N_ACTIONS = len(SCENARIO_IDS) * ACTION_SLOTS
FEATURES_PER_ACTIVITY = 5
BATCH_SIZE_SCALE = 10.0  # soft normalizer for the mean-batch-size feature


def reward(front: ParetoFront, new_point: Point, rl: RLConfig) -> float:
    """Score of moving to new_point against the current front: full
    reward when it dominates every member, the improvement reward when
    the front accepts it, the penalty otherwise."""
    if not front.solutions:
        raise OptimizerError("reward needs a non-empty front")
    if all(dominates(new_point, s.point) for s in front.solutions):
        return rl.reward_dominates
    _, accepted = update_front(front, Solution({}, (new_point[0], new_point[1])))
    return rl.reward_improves if accepted else rl.reward_penalty


def state_vector(
    model: ProcessModel,
    stats: LogStats | None,
    point: Point,
    initial_point: Point,
) -> np.ndarray:
    """Fixed-length observation: five features per activity (sorted by
    id) plus the two objectives, everything scaled against the initial
    solution so magnitudes stay comparable across models."""
    ct0 = initial_point[0] if initial_point[0] > 0 else 1.0
    cost0 = initial_point[1] if initial_point[1] > 0 else 1.0
    features: list[float] = []
    total_cost = 0.0
    if stats is not None:
        total_cost = sum(a.total_cost for a in stats.activities)
    for activity in sorted(model.activities, key=lambda a: a.id):
        row = [0.0] * FEATURES_PER_ACTIVITY
        if stats is not None:
            try:
                a = stats.activity(activity.id)
            except AnalyticsError:
                a = None
            if a is not None:
                utilizations = [
                    stats.resource(rid).utilization for rid in activity.resources
                ]
                row = [
                    a.mean_first_wait / ct0,
                    a.mean_last_wait / ct0,
                    a.mean_batch_size / BATCH_SIZE_SCALE,
                    float(np.mean(utilizations)) if utilizations else 0.0,
                    a.total_cost / total_cost if total_cost > 0 else 0.0,
                ]
        features.extend(row)
    features.append(point[0] / ct0)
    features.append(point[1] / cost0)
    return np.asarray(features, dtype=float)


def available_actions(
    model: ProcessModel,
    log: EventLog,
    policies: PolicySet,
    config: OptimizerConfig,
    stats: LogStats | None = None,
) -> dict[int, PolicyDelta]:
    """The unmasked slice of the action grid for this log.

    Action id (pattern_id - 1) * ACTION_SLOTS + j selects the j-th delta
    derived for the first detected instance of that pattern (instances
    are ordered by activity, so the mapping is deterministic)."""
    try:
        if stats is None:
            stats = compute_stats(log, model)
        instances = detect_scenarios_from_stats(log, model, policies, stats, config.detection)
    except AnalyticsError:
        return {}
    first_of = {}
    for inst in instances:
        first_of.setdefault(inst.scenario_id, inst)
    actions: dict[int, PolicyDelta] = {}
    for sid, inst in sorted(first_of.items()):
        try:
            deltas = derive_interventions(inst, stats, policies, config.intervention)
        except InterventionError:
            continue
        for j, delta in enumerate(deltas[:ACTION_SLOTS]):
            actions[(sid - 1) * ACTION_SLOTS + j] = delta
    return actions


@dataclass
class _Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    mask: tuple[int, ...]
    logp: float


class _Agent:
    """Linear softmax policy over the masked action grid plus a linear
    value baseline, trained with the clipped-ratio objective."""

    def __init__(self, state_dim: int, rl: RLConfig):
        self.rl = rl
        self.weights = np.zeros((N_ACTIONS, state_dim))
        self.bias = np.zeros(N_ACTIONS)
        self.value_weights = np.zeros(state_dim)
        self.value_bias = 0.0

    def probabilities(self, state: np.ndarray, mask: tuple[int, ...]) -> np.ndarray:
        ids = list(mask)
        logits = self.weights[ids] @ state + self.bias[ids]
        logits -= logits.max()
        exp = np.exp(logits)
        return exp / exp.sum()

    def sample(self, state: np.ndarray, mask: tuple[int, ...], u: float) -> tuple[int, float]:
        probs = self.probabilities(state, mask)
        position = int(np.searchsorted(np.cumsum(probs), u, side="right"))
        position = min(position, len(mask) - 1)
        return mask[position], float(np.log(probs[position]))

    def value(self, state: np.ndarray) -> float:
        return float(self.value_weights @ state + self.value_bias)

    def train(self, batch: list[_Transition]) -> None:
        lr = self.rl.learning_rate
        clip = self.rl.clip_ratio
        for _ in range(self.rl.update_epochs):
            for t in batch:
                advantage = t.reward - self.value(t.state)
                probs = self.probabilities(t.state, t.mask)
                position = t.mask.index(t.action)
                ratio = float(probs[position]) / math.exp(t.logp)
                clipped_out = (advantage >= 0 and ratio > 1 + clip) or (
                    advantage < 0 and ratio < 1 - clip
                )
                if not clipped_out:
                    # d log pi(a|s) / d logits = onehot(a) - pi over the mask
                    grad = -probs
                    grad[position] += 1.0
                    step = lr * advantage * ratio
                    for g, action_id in zip(grad, t.mask):
                        self.weights[action_id] += step * g * t.state
                        self.bias[action_id] += step * g
                error = self.value(t.state) - t.reward
                self.value_weights -= lr * error * t.state
                self.value_bias -= lr * error


def optimize_rl(
    model: ProcessModel, initial_policies: PolicySet, config: OptimizerConfig
) -> OptimizeResult:
    if config.strategy != RL:
        raise OptimizerError(f"strategy must be {RL!r}, got {config.strategy!r}")
    if not config.guided:
        raise OptimizerError("the action space is the intervention set; there is no unguided variant")
    rl = config.rl

    audit: list[dict] = []
    convergence: list[dict] = []
    simulations = 0
    failures = 0

    def record_convergence(front: ParetoFront) -> None:
        convergence.append(
            {
                "simulations": simulations,
                "best_cycle_time": min(s.point[0] for s in front.solutions),
                "best_cost": min(s.point[1] for s in front.solutions),
            }
        )

    try:
        initial = simulate(model, initial_policies, _sim_config(config, 0))
    except SimulationError as err:
        raise OptimizerError(f"initial solution failed to simulate: {err}") from err
    simulations = 1
    root = Solution(dict(initial_policies), initial.objectives.point, log_ref="sim-00000")
    front = ParetoFront((root,))
    audit.append(
        {
            "sim": 0,
            "iteration": 0,
            "parent": "",
            "delta": None,
            "point": list(root.point),
            "reward": None,
            "accepted": True,
            "failed": False,
        }
    )
    record_convergence(front)

    def stats_of(log: EventLog) -> LogStats | None:
        try:
            return compute_stats(log, model)
        except AnalyticsError:
            return None

    current = root
    current_log = initial.log
    current_stats = stats_of(initial.log)
    state = state_vector(model, current_stats, root.point, root.point)
    agent = _Agent(len(state), rl)
    buffer: list[_Transition] = []

    for iteration in range(1, rl.max_iterations + 1):
        actions = available_actions(model, current_log, current.policies, config, current_stats)
        if not actions:
            break
        mask = tuple(sorted(actions))
        action, logp = agent.sample(state, mask, unit(config.seed, "action", iteration))
        delta = actions[action]
        row = {
            "sim": None,
            "iteration": iteration,
            "parent": current.log_ref,
            "delta": delta_to_doc(delta),
            "point": None,
            "reward": None,
            "accepted": False,
            "failed": False,
        }
        try:
            policies = apply_delta(current.policies, delta)
        except InterventionError as err:
            row["failed"] = True
            row["error"] = f"delta not applicable: {err}"
            audit.append(row)
            continue
        sim_index = simulations
        row["sim"] = sim_index
        try:
            result = simulate(model, policies, _sim_config(config, sim_index))
        except SimulationError as err:
            simulations += 1
            failures += 1
            row["failed"] = True
            row["error"] = str(err)
            audit.append(row)
            record_convergence(front)
            if failures * 2 > simulations:
                raise OptimizerError(
                    f"aborting: {failures} of {simulations} simulations failed; "
                    f"last error: {err}"
                ) from err
            continue
        simulations += 1
        child = Solution(
            policies,
            result.objectives.point,
            log_ref=f"sim-{sim_index:05d}",
            lineage=current.lineage + (delta_to_doc(delta),),
        )
        move_reward = reward(front, child.point, rl)
        front, accepted = update_front(front, child)
        child_stats = stats_of(result.log)
        next_state = state_vector(model, child_stats, child.point, root.point)
        buffer.append(_Transition(state, action, move_reward, next_state, mask, logp))
        if len(buffer) >= rl.buffer_size:
            agent.train(buffer)
            buffer = []
        row["point"] = list(child.point)
        row["reward"] = move_reward
        row["accepted"] = accepted
        audit.append(row)
        record_convergence(front)
        # the walk always advances, even onto a penalized candidate
        current = child
        current_log = result.log
        current_stats = child_stats
        state = next_state

    return OptimizeResult(front, audit, convergence, simulations, failures)
