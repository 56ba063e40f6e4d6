import pytest

from batchopt import optimize as opt
from batchopt.analytics import compute_stats
from batchopt.engine import simulate
from batchopt.fixtures import enumerate_oracle_front, get_fixture
from batchopt.interventions import (
    InterventionConfig,
    SCALE_SIZE,
    TOGGLE_BATCH_TYPE,
    apply_delta,
)
from batchopt.policy import (
    BatchingPolicy,
    CostModel,
    PARALLEL,
    SIZE,
    policy_set,
    rule,
    wait_first_at_least,
)


def front_points(front):
    return sorted(s.point for s in front.solutions)


def run(fixture, **overrides):
    config = opt.OptimizerConfig(**overrides)
    return opt.optimize_hc_sa(fixture.model(), fixture.policies(), config)


class TestConfigValidation:
    def test_unknown_strategy(self):
        with pytest.raises(opt.OptimizerError):
            opt.OptimizerConfig(strategy="tabu")

    def test_budget_must_be_positive(self):
        with pytest.raises(opt.OptimizerError):
            opt.OptimizerConfig(max_solutions=0)

    def test_radius_must_be_nonnegative(self):
        with pytest.raises(opt.OptimizerError):
            opt.OptimizerConfig(radius=-0.1)

    @pytest.mark.parametrize("factor", [0.0, 1.0, 1.5])
    def test_cooling_factor_open_interval(self, factor):
        with pytest.raises(opt.OptimizerError):
            opt.OptimizerConfig(cooling_factor=factor)

    @pytest.mark.parametrize("kwargs", [
        {"initial_temperature": 0.0},
        {"temp_epsilon": 0.0},
        {"initial_temperature": -1.0},
    ])
    def test_temperatures_must_be_positive(self, kwargs):
        with pytest.raises(opt.OptimizerError):
            opt.OptimizerConfig(**kwargs)

    def test_hc_sa_entry_rejects_rl(self):
        fx = get_fixture("monotone-tradeoff")
        config = opt.OptimizerConfig(strategy="rl")
        with pytest.raises(opt.OptimizerError):
            opt.optimize_hc_sa(fx.model(), fx.policies(), config)


class TestConfigDocs:
    def test_round_trip(self):
        config = opt.OptimizerConfig(
            strategy="sa",
            guided=False,
            max_solutions=7,
            radius=0.1,
            initial_temperature=5.0,
            cooling_factor=0.5,
            temp_epsilon=0.01,
            seed=3,
            intervention=InterventionConfig(max_size=8),
        )
        doc = opt.optimizer_config_to_doc(config)
        assert opt.parse_optimizer_config(doc) == config

    def test_strategy_case_insensitive(self):
        assert opt.parse_optimizer_config({"strategy": "HC"}).strategy == "hc"

    def test_unknown_top_key(self):
        with pytest.raises(opt.OptimizerError):
            opt.parse_optimizer_config({"budget": 10})

    @pytest.mark.parametrize("section,key", [
        ("sim", "speed"),
        ("detection", "bogus"),
        ("intervention", "floor"),
        ("rl", "gamma"),
    ])
    def test_unknown_section_key(self, section, key):
        with pytest.raises(opt.OptimizerError):
            opt.parse_optimizer_config({section: {key: 1}})

    def test_non_object_rejected(self):
        with pytest.raises(opt.OptimizerError):
            opt.parse_optimizer_config(["hc"])


class TestRandomPerturbation:
    def setup_method(self):
        self.fixture = get_fixture("monotone-tradeoff")
        self.model = self.fixture.model()
        self.policies = self.fixture.policies()
        result = simulate(self.model, self.policies, self.fixture.sim_config())
        self.stats = compute_stats(result.log, self.model)

    def draws(self, seed=0, count=40, policies=None, config=InterventionConfig()):
        return opt.random_perturbation(
            self.model,
            self.stats,
            self.policies if policies is None else policies,
            seed=seed,
            config=config,
            count=count,
        )

    def test_same_seed_reproduces_exactly(self):
        assert self.draws(seed=7) == self.draws(seed=7)

    def test_different_seeds_differ(self):
        assert self.draws(seed=0) != self.draws(seed=1)

    def test_every_delta_applies(self):
        for delta in self.draws():
            applied = apply_delta(self.policies, delta)
            assert self.fixture.target_activity in applied

    def test_size_draws_respect_bounds(self):
        config = InterventionConfig(min_size=2, max_size=4)
        sizes = [
            d.new_threshold for d in self.draws(config=config, count=80)
            if d.kind == SCALE_SIZE
        ]
        assert sizes
        assert all(2 <= s <= 4 for s in sizes)

    def test_new_size_condition_starts_from_one(self):
        # no size condition on the policy: the rescale seeds from 1.0, so
        # the default grid can only land on 1 or 2
        policies = policy_set(
            BatchingPolicy(
                "issue",
                PARALLEL,
                rule([wait_first_at_least(600.0)]),
                CostModel(fixed_cost=10.0),
            )
        )
        assert not policies["issue"].rule.has_kind(SIZE)
        sizes = [
            d.new_threshold for d in self.draws(policies=policies, count=120)
            if d.kind == SCALE_SIZE
        ]
        assert sizes
        assert set(sizes) <= {1.0, 2.0}

    def test_toggle_requires_existing_policy(self):
        kinds = {d.kind for d in self.draws(policies={}, count=120)}
        assert TOGGLE_BATCH_TYPE not in kinds

    def test_count_respected(self):
        assert len(self.draws(count=11)) == 11


class TestHillClimbing:
    def test_guided_recovers_oracle_front(self):
        fx = get_fixture("monotone-tradeoff")
        oracle = enumerate_oracle_front(fx)
        res = run(
            fx,
            strategy="hc",
            guided=True,
            max_solutions=80,
            seed=0,
            intervention=InterventionConfig(max_size=5),
        )
        assert front_points(res.front) == front_points(oracle)

    def test_budget_is_a_hard_cap(self):
        fx = get_fixture("monotone-tradeoff")
        res = run(fx, strategy="hc", guided=True, max_solutions=12, seed=0)
        assert res.simulations <= 12

    def test_budget_one_returns_initial_point_only(self):
        fx = get_fixture("monotone-tradeoff")
        res = run(fx, strategy="hc", guided=True, max_solutions=1, seed=0)
        assert res.simulations == 1
        initial = simulate(fx.model(), fx.policies(), fx.sim_config())
        assert front_points(res.front) == [initial.objectives.point]

    def test_audit_starts_with_accepted_initial(self):
        fx = get_fixture("monotone-tradeoff")
        res = run(fx, strategy="hc", guided=True, max_solutions=10, seed=0)
        first = res.audit[0]
        assert first["sim"] == 0
        assert first["accepted"] is True
        assert first["delta"] is None
        assert first["parent"] == ""

    def test_convergence_rows_monotone(self):
        fx = get_fixture("monotone-tradeoff")
        res = run(fx, strategy="hc", guided=True, max_solutions=40, seed=0)
        cts = [r["best_cycle_time"] for r in res.convergence]
        costs = [r["best_cost"] for r in res.convergence]
        assert all(a >= b for a, b in zip(cts, cts[1:]))
        assert all(a >= b for a, b in zip(costs, costs[1:]))
        assert res.convergence[-1]["simulations"] == res.simulations

    def test_rerun_is_deterministic(self):
        fx = get_fixture("monotone-tradeoff")
        a = run(fx, strategy="hc", guided=False, max_solutions=25, seed=5)
        b = run(fx, strategy="hc", guided=False, max_solutions=25, seed=5)
        assert a.audit == b.audit
        assert a.convergence == b.convergence
        assert front_points(a.front) == front_points(b.front)

    def test_guided_walks_the_seasonal_size_ladder(self):
        # weekly paired arrivals: the prescriptions shrink and grow the
        # five-case floor straight onto every rung of the ladder
        fx = get_fixture("circadian")
        res = run(
            fx,
            strategy="hc",
            guided=True,
            max_solutions=30,
            seed=0,
            intervention=InterventionConfig(max_size=8),
        )
        assert front_points(res.front) == [
            (300.0, 5.0),
            (151350.0, 2.5),
            (189112.5, 1.875),
            (226875.0, 1.25),
        ]


class TestSimulatedAnnealing:
    def test_guided_recovers_oracle_front(self):
        fx = get_fixture("monotone-tradeoff")
        oracle = enumerate_oracle_front(fx)
        res = run(
            fx,
            strategy="sa",
            guided=True,
            max_solutions=80,
            seed=0,
            intervention=InterventionConfig(max_size=5),
        )
        assert front_points(res.front) == front_points(oracle)

    @pytest.mark.parametrize("seed", [0, 1])
    @pytest.mark.parametrize("guided", [True, False])
    def test_cold_annealer_degenerates_to_strict_climber(self, seed, guided):
        fx = get_fixture("monotone-tradeoff")
        sa = run(
            fx,
            strategy="sa",
            guided=guided,
            max_solutions=30,
            seed=seed,
            initial_temperature=1e-6,
            temp_epsilon=1e-3,
        )
        hc = run(
            fx,
            strategy="hc",
            guided=guided,
            max_solutions=30,
            seed=seed,
            radius=0.0,
        )
        assert front_points(sa.front) == front_points(hc.front)
        assert sa.simulations == hc.simulations
        assert [r["delta"] for r in sa.audit] == [r["delta"] for r in hc.audit]
