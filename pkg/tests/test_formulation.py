import numpy as np
import pytest

from conftest import random_demands, random_small_config
from htsroute import formulation as F
from htsroute.domain import PlantState, ScenarioConfig
from htsroute.lp_core import LpSolution, OPTIMAL, check_solution, solve


def _cfg(**kw):
    base = dict(
        num_modules=2, num_priorities=2, horizon=3, window=2,
        loss_costs=(10.0, 4.0), queue_capacity=5.0,
        lambda_start=1.0, lambda_end=5.0,
    )
    base.update(kw)
    return ScenarioConfig(**base)


class TestBuildBatch:
    def test_variable_count(self):
        lp, vm = F.build_batch(_cfg(), np.zeros((3, 2)))
        # 5 families * T*M*P = 60, plus (T+1)*M*P = 16 queue levels
        assert lp.num_vars == 76
        assert vm.num_vars == 76

    def test_zero_demand_zero_objective(self):
        lp, _ = F.build_batch(_cfg(), np.zeros((3, 2)))
        sol = solve(lp)
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(0.0, abs=1e-9)

    def test_forced_loss_single_cell(self):
        # one module, one priority, one step: service cap w/ds = 10, so 90 of
        # the 100 arriving packets must be lost at cost 10 each
        cfg = ScenarioConfig(
            num_modules=1, num_priorities=1, horizon=1, window=1,
            loss_costs=(10.0,), queue_capacity=0.0, scheduler_period=0.1,
            link_capacity=100.0,
        )
        lp, _ = F.build_batch(cfg, np.array([[100.0]]))
        sol = solve(lp)
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(900.0, rel=1e-9)

    def test_demand_rows_respected(self):
        rng = np.random.default_rng(1)
        flows = random_demands(rng, _cfg())
        lp, vm = F.build_batch(_cfg(), flows)
        sol = solve(lp)
        assert sol.status == OPTIMAL
        inflow = sol.values[vm.f_in.reshape(3, -1)].reshape(vm.f_in.shape)
        assert np.allclose(inflow.sum(axis=1), flows, atol=1e-7)


class TestRestrictedVariants:
    def test_static_pins_weights(self):
        rng = np.random.default_rng(2)
        cfg = _cfg()
        flows = random_demands(rng, cfg)
        lp, vm = F.build_static_batch(cfg, flows)
        sol = solve(lp)
        assert sol.status == OPTIMAL
        w = sol.values[vm.w.ravel()].reshape(vm.w.shape)
        assert np.allclose(w, w[0], atol=1e-7)

    def test_proportional_weights_default_costs(self):
        cfg = ScenarioConfig(horizon=2, window=1, num_modules=2)
        lp, vm = F.build_proportional(cfg, np.zeros((2, 3)))
        sol = solve(lp)
        w = sol.values[vm.w.ravel()].reshape(vm.w.shape)
        assert np.allclose(w, [2 / 3, 4 / 15, 1 / 15], atol=1e-9)

    def test_proportional_symmetric_costs(self):
        assert np.allclose(
            F.proportional_weights(ScenarioConfig(num_priorities=2, loss_costs=(1.0, 1.0))),
            [0.5, 0.5],
        )

    @pytest.mark.parametrize("seed", range(6))
    def test_restrictions_never_beat_batch(self, seed):
        rng = np.random.default_rng(seed)
        cfg = random_small_config(rng)
        flows = random_demands(rng, cfg)
        obj = {}
        for name, builder in (
            ("batch", F.build_batch),
            ("static", F.build_static_batch),
            ("prop", F.build_proportional),
        ):
            lp, _ = builder(cfg, flows)
            sol = solve(lp)
            assert sol.status == OPTIMAL, f"{name} infeasible on cfg {cfg}"
            obj[name] = sol.objective_value
        assert obj["static"] >= obj["batch"] - 1e-6
        assert obj["prop"] >= obj["batch"] - 1e-6


class TestMpcWindow:
    def test_window_covers_expected_steps(self):
        cfg = ScenarioConfig()
        state = PlantState(queues=np.zeros((16, 3)))
        expected = np.ones((100, 3))
        _, vm = F.build_mpc_window(cfg, state, 1, expected)
        assert vm.steps == tuple(range(1, 11))

    def test_window_clamped_with_terminal(self):
        cfg = ScenarioConfig()
        state = PlantState(queues=np.zeros((16, 3)))
        lp, vm = F.build_mpc_window(cfg, state, 95, np.ones((100, 3)))
        assert vm.steps == tuple(range(95, 101))
        # terminal queue levels pinned to the initial occupancy
        last_q = vm.q[-1].ravel()
        assert np.all(lp.lower[last_q] == cfg.initial_queue)
        assert np.all(lp.upper[last_q] == cfg.initial_queue)

    def test_mid_horizon_has_free_terminal(self):
        cfg = ScenarioConfig()
        state = PlantState(queues=np.zeros((16, 3)))
        lp, vm = F.build_mpc_window(cfg, state, 1, np.ones((100, 3)))
        assert np.all(np.isinf(lp.upper[vm.q[-1].ravel()]))

    def test_zero_demand_zero_objective(self):
        cfg = _cfg()
        state = PlantState(queues=np.zeros((2, 2)))
        lp, vm = F.build_mpc_window(cfg, state, 1, np.zeros((3, 2)))
        sol = solve(lp)
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(0.0, abs=1e-9)
        dec = F.extract_decisions(sol, vm, step=0)
        assert np.allclose(dec.weights.sum(axis=1), 1.0)

    def test_initial_queue_state_enters(self):
        cfg = _cfg()
        state = PlantState(queues=np.array([[3.0, 1.0], [0.0, 2.0]]))
        lp, vm = F.build_mpc_window(cfg, state, 2, np.zeros((3, 2)))
        q0 = vm.q[0].ravel()
        assert np.allclose(lp.lower[q0], state.queues.ravel())

    def test_ramp_against_previous_weights(self):
        cfg = _cfg(max_weight_step=0.1)
        prev = np.array([[0.9, 0.1], [0.5, 0.5]])
        state = PlantState(queues=np.zeros((2, 2)), last_weights=prev)
        # heavy low-priority demand pulls weights toward p2, ramp resists
        lp, vm = F.build_mpc_window(cfg, state, 2, np.full((3, 2), 8.0), prev_weights=prev)
        sol = solve(lp)
        assert sol.status == OPTIMAL
        w0 = sol.values[vm.w[0].ravel()].reshape(2, 2)
        assert np.all(np.abs(w0 - prev) <= cfg.max_weight_step + 1e-6)


class TestExtractDecisions:
    def _tiny_solution(self):
        cfg = ScenarioConfig(num_modules=1, num_priorities=2, horizon=1, window=1,
                             loss_costs=(2.0, 1.0))
        lp, vm = F.build_batch(cfg, np.zeros((1, 2)))
        return solve(lp), vm

    def test_renormalizes_weights(self):
        sol, vm = self._tiny_solution()
        noisy = sol.values.copy()
        noisy[vm.w.ravel()] = [0.3333334, 0.6666666]
        dec = F.extract_decisions(LpSolution(OPTIMAL, noisy, 0.0), vm, step=0)
        assert dec.weights.sum() == 1.0

    def test_clamps_solver_noise(self):
        sol, vm = self._tiny_solution()
        noisy = sol.values.copy()
        noisy[vm.w.ravel()] = [1.0 + 1e-12, -1e-12]
        noisy[vm.f_in.ravel()] = [-1e-12, 0.0]
        dec = F.extract_decisions(LpSolution(OPTIMAL, noisy, 0.0), vm, step=0)
        assert (dec.weights >= 0).all()
        assert (dec.inflow_plan >= 0).all()

    def test_full_trajectory_zero_losses(self):
        cfg = _cfg()
        lp, vm = F.build_batch(cfg, np.zeros((3, 2)))
        traj = F.extract_decisions(solve(lp), vm)
        assert len(traj.decisions) == 3
        assert traj.planned_losses.max() == pytest.approx(0.0, abs=1e-9)

    def test_rejects_non_optimal(self):
        _, vm = self._tiny_solution()
        with pytest.raises(F.NotOptimalError):
            F.extract_decisions(LpSolution("infeasible", None, float("nan")), vm)


class TestFeasibilityProperty:
    @pytest.mark.parametrize("seed", range(25))
    def test_random_instances_feasible_and_clean(self, seed):
        rng = np.random.default_rng(100 + seed)
        cfg = random_small_config(rng)
        flows = random_demands(rng, cfg)
        lp, _ = F.build_batch(cfg, flows)
        sol = solve(lp)
        assert sol.status == OPTIMAL, "every built problem must be feasible"
        assert check_solution(lp, sol.values).max_violation <= 1e-6
