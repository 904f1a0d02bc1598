import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finite_cooling.coherent import run_swap_protocol
from finite_cooling.errors import ConsistencyError, DomainError
from finite_cooling.geometry import GapSchedule, geodesic_numeric, geodesic_scale_factors, step_divergences
from finite_cooling.incoherent import (
    IncoherentConfig,
    carnot_landauer_check,
    machine_hamiltonians,
    run_incoherent_protocol,
    run_stage,
    scale_stages,
    virtual_gibbs_ratio,
)
from finite_cooling.thermo import HamiltonianSpec, average_energy, gibbs_state

from conftest import random_levels

QUBIT = HamiltonianSpec.qubit(1.0)


def geodesic(N, lam=10.0):
    return scale_stages(geodesic_scale_factors(N, lam, 1.0, 1.0))


class TestMachines:
    def test_hamiltonians(self):
        C, H = machine_hamiltonians(3.0, 0.5, [0.0, 2.0])
        assert np.allclose(C.levels, [0, 2 * (1.5 * 3 - 0.5)])
        assert np.allclose(H.levels, [0, 2 * 1.5 * 2])

    def test_gamma_zero_has_trivial_hot_machine(self):
        C, H = machine_hamiltonians(4.0, 0.0, QUBIT)
        assert np.allclose(C.levels, [0, 4]) and np.allclose(H.levels, [0, 3])

    @settings(max_examples=100)
    @given(st.floats(1.0, 50.0), st.floats(0.05, 5.0), st.floats(0.0, 0.95), st.integers(2, 5))
    def test_virtual_ratio(self, lam, beta, frac, d):
        beta_H = frac * beta
        gamma = beta_H / (beta - beta_H)
        levels = np.cumsum(np.r_[0.0, np.linspace(0.5, 1.5, d - 1)])
        C, H = machine_hamiltonians(lam, gamma, levels)
        for i in range(d - 1):
            r = virtual_gibbs_ratio(beta, beta_H, C, H, i, expected_lambda=lam,
                                    omega_S=levels[i + 1] - levels[i])
            assert r == pytest.approx(math.exp(-beta * lam * (levels[i + 1] - levels[i])), rel=1e-10)

    def test_ratio_mismatch_raises(self):
        C, H = machine_hamiltonians(3.0, 1.0, QUBIT)
        with pytest.raises(ConsistencyError):
            virtual_gibbs_ratio(1.0, 0.5, C, H, 0, expected_lambda=3.1, omega_S=1.0)

    def test_rejects(self):
        with pytest.raises(DomainError):
            machine_hamiltonians(0.5, 1.0, QUBIT)
        with pytest.raises(DomainError):
            machine_hamiltonians(2.0, -1.0, QUBIT)
        with pytest.raises(DomainError):
            IncoherentConfig(1.0, 1.0, QUBIT, geodesic(5))
        with pytest.raises(DomainError):
            IncoherentConfig(1.0, 0.5, QUBIT, scale_stages([3.0, 2.0]))
        with pytest.raises(DomainError):
            IncoherentConfig(1.0, 0.5, QUBIT, GapSchedule([2.0], 1.0, "gap"))
        with pytest.raises(DomainError):
            IncoherentConfig(1.0, 0.5, QUBIT, geodesic(5), mode="lazy")


class TestIdeal:
    @pytest.mark.parametrize("beta_H", [0.0, 0.3, 0.9])
    def test_bookkeeping(self, beta_H):
        cfg = IncoherentConfig(1.0, beta_H, QUBIT, geodesic(40))
        rep = run_incoherent_protocol(cfg)
        assert np.allclose(rep.final_state, gibbs_state(10.0, [0, 1]), atol=1e-15)
        for led in rep.stages:
            assert abs(led.energy_balance) < 1e-14
        assert abs(rep.deltaE_S + rep.deltaE_C + rep.deltaE_H) < 1e-13
        assert abs(rep.identity_residual) < 1e-10
        assert rep.carnot_landauer < 0
        assert rep.entropy_production == pytest.approx(rep.relent_sum, rel=1e-12)
        assert carnot_landauer_check(rep, 1.0, cfg.eta) == rep.carnot_landauer

    def test_zero_gamma_matches_coherent_dissipation(self):
        stages = geodesic(30)
        rep = run_incoherent_protocol(IncoherentConfig(1.0, 0.0, QUBIT, stages))
        coh = run_swap_protocol(stages, 1.0, QUBIT)
        assert -rep.carnot_landauer == pytest.approx(coh.dissipation, rel=1e-10)
        assert rep.deltaE_C - rep.landauer == pytest.approx(coh.dissipation, rel=1e-10)

    def test_cold_cost_identity_for_qudits(self, rng):
        for _ in range(20):
            H = HamiltonianSpec(random_levels(rng, int(rng.integers(2, 5))))
            lam = np.sort(rng.uniform(1, 6, size=int(rng.integers(1, 12))))
            beta = rng.uniform(0.2, 2.0)
            cfg = IncoherentConfig(beta, rng.uniform(0, 0.9) * beta, H, scale_stages(lam))
            rep = run_incoherent_protocol(cfg)
            g = cfg.gamma
            lhs = beta * rep.deltaE_C
            rhs = (g + 1) * (rep.relent_sum + rep.landauer) + g * beta * rep.deltaE_S
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)

    @settings(max_examples=40)
    @given(st.lists(st.floats(1.0, 20.0), min_size=2, max_size=15), st.floats(0.0, 0.9))
    def test_heating_never_helps(self, middle, frac):
        # arbitrary non-monotone sequences ending at the same target cost at
        # least the discrete-optimal sequence of the same length
        N = len(middle) + 1
        stages = scale_stages(list(middle) + [10.0])
        cfg = IncoherentConfig(1.0, frac, QUBIT, stages, monotone=False)
        rep = run_incoherent_protocol(cfg)
        best_cfg = IncoherentConfig(1.0, frac, QUBIT, geodesic_numeric(N, 1.0, QUBIT, 10.0))
        best = run_incoherent_protocol(best_cfg)
        assert rep.deltaE_C >= best.deltaE_C - 1e-12
        assert -rep.carnot_landauer >= -best.carnot_landauer - 1e-12

    def test_dissipation_scales_inversely_with_N(self):
        d = [-run_incoherent_protocol(IncoherentConfig(1.0, 0.4, QUBIT, geodesic(N))).carnot_landauer
             for N in (1000, 10_000)]
        assert d[0] / d[1] == pytest.approx(10, rel=0.01)

    def test_flows_are_population_transfer(self):
        cfg = IncoherentConfig(1.0, 0.5, QUBIT, scale_stages([3.0]))
        p0 = gibbs_state(1.0, [0, 1])
        _, led = run_stage(p0, cfg, 1)
        assert led.deltap[0] == pytest.approx(p0[1] - gibbs_state(3.0, [0, 1])[1], rel=1e-14)


class TestFinite:
    def test_converges_to_ideal(self):
        stages = geodesic(10, 3.0)
        ideal = run_incoherent_protocol(IncoherentConfig(1.0, 0.5, QUBIT, stages))
        fin = run_incoherent_protocol(IncoherentConfig(1.0, 0.5, QUBIT, stages, mode="finite",
                                                       repeats=10_000))
        assert fin.converged
        assert np.allclose(fin.final_state, ideal.final_state, atol=1e-9)
        assert abs(fin.identity_residual) < 1e-9
        for led in fin.stages:
            assert abs(led.energy_balance) < 1e-12

    @pytest.mark.parametrize("weight", [1.0, 0.5])
    def test_single_collision_costs_more(self, weight):
        # one collision per stage cools less yet dissipates more
        stages = geodesic(5, 3.0)
        ideal = run_incoherent_protocol(IncoherentConfig(1.0, 0.5, QUBIT, stages))
        one = run_incoherent_protocol(IncoherentConfig(1.0, 0.5, QUBIT, stages, mode="finite",
                                                       repeats=1, swap_weight=weight))
        assert not one.converged
        assert one.carnot_landauer < ideal.carnot_landauer < 0
        assert one.final_state[0] < ideal.final_state[0]
        assert abs(one.identity_residual) < 1e-10

    def test_cold_cost_grows_with_collision_budget(self):
        stages = geodesic(5, 3.0)
        costs = [run_incoherent_protocol(IncoherentConfig(1.0, 0.5, QUBIT, stages, mode="finite",
                                                          repeats=K)).deltaE_C for K in (1, 2, 5, 20, 200)]
        ideal = run_incoherent_protocol(IncoherentConfig(1.0, 0.5, QUBIT, stages)).deltaE_C
        assert np.all(np.diff(costs) > 0)
        assert costs[-1] == pytest.approx(ideal, rel=1e-8)

    def test_geometric_convergence(self):
        res = []
        for K in range(1, 8):
            _, led = run_stage(gibbs_state(1.0, [0, 1]), IncoherentConfig(
                1.0, 0.5, QUBIT, scale_stages([2.0]), mode="finite", repeats=K), 1)
            res.append(float(led.ratio_residual[0]))
        rates = np.array(res[1:]) / np.array(res[:-1])
        assert np.all(rates < 1) and np.ptp(rates) < 0.05 * rates.mean()

    def test_partial_swap_weight_keeps_identity(self):
        cfg = IncoherentConfig(1.0, 0.3, QUBIT, geodesic(5), mode="finite", repeats=7, swap_weight=0.5)
        rep = run_incoherent_protocol(cfg)
        assert abs(rep.identity_residual) < 1e-10

    def test_qutrit_identity(self):
        H = HamiltonianSpec.equally_spaced(3)
        cfg = IncoherentConfig(1.0, 0.4, H, scale_stages([1.5, 2.0]), mode="finite", repeats=50)
        rep = run_incoherent_protocol(cfg)
        assert abs(rep.identity_residual) < 1e-10
        assert average_energy(rep.final_state, H) < average_energy(rep.initial_state, H)
