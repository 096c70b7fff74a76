import itertools
import os

import numpy as np
import pytest
from scipy.optimize import linprog

from builders import make_instance, one_job, random_instance
from data.generator import GeneratorConfig, generate, instance_seeds
from model.errors import ConfigError
from model.follower import best_response, follower_duals
from model.instance import PriceVector, cp_instance, mp_instance, with_kappa
from model.milp import (EQ, GE, LE, LP_INFEASIBLE, LP_OPTIMAL, SolverLimits, lp_solve, point_residual, polish,
                        solve, warm_start)
from model.reformulation import MilpModel, bilevel_check, build_mip, extract_solution, seed_point
from utils import constant

KEY = ('c0', 'a0')


def limits(**kwargs):
    kwargs.setdefault('time_limit', 120.0)
    kwargs.setdefault('verbose', False)
    return SolverLimits(**kwargs)


def lp_model(A, sense, rhs, lb, ub, obj):
    n = len(obj)
    return MilpModel(names=["z{}".format(j) for j in range(n)], lb=np.asarray(lb, dtype=float),
                     ub=np.asarray(ub, dtype=float), obj=np.asarray(obj, dtype=float), binary=np.zeros(n, dtype=bool),
                     A=np.asarray(A, dtype=float).reshape(len(rhs), n), sense=list(sense),
                     rhs=np.asarray(rhs, dtype=float), row_names=["r{}".format(i) for i in range(len(rhs))],
                     index={}, instance=None, mode=None, big_ms={}, pairs=[])


def highs_value(model, lb, ub):
    """ Optimal value of the LP relaxation from scipy's HiGHS backend. """
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for i, s in enumerate(model.sense):
        if s == LE:
            A_ub.append(model.A[i])
            b_ub.append(model.rhs[i])
        elif s == GE:
            A_ub.append(-model.A[i])
            b_ub.append(-model.rhs[i])
        else:
            A_eq.append(model.A[i])
            b_eq.append(model.rhs[i])
    bounds = [(l, None if np.isinf(u) else u) for l, u in zip(lb, ub)]
    res = linprog(-model.obj, A_ub=np.array(A_ub) if A_ub else None, b_ub=b_ub or None,
                  A_eq=np.array(A_eq) if A_eq else None, b_eq=b_eq or None, bounds=bounds, method='highs')
    return res.status, (-res.fun if res.status == 0 else None)


def solve_pricing(instance, big_m_scale=1.0, **kwargs):
    model = build_mip(instance, big_m_scale=big_m_scale)
    cap = PriceVector(instance.p_max.copy())
    response = best_response(instance, cap)
    seed = seed_point(model, cap, response, follower_duals(instance, cap, response))
    result = solve(model, limits(**kwargs), seed=seed, incumbent_check=bilevel_check(model))
    return model, result


def leader_value(instance, prices):
    """ Net revenue when the follower answers with its earliest-fill best response. """
    schedule = best_response(instance, prices).schedule
    revenue = sum(float(prices.p[job.tw_begin:job.tw_end + 1] @ schedule.x[job.key]) for job, _ in instance.jobs())
    return revenue - instance.kappa * float(schedule.leader_load(instance).max(initial=0.0))


def test_lp_solve_matches_highs_on_random_lps():
    rng = np.random.default_rng(21)
    for _ in range(30):
        m = int(rng.integers(2, 7))
        n = m + int(rng.integers(0, 4))
        A = rng.uniform(-1.0, 1.0, (m, n))
        ub = rng.uniform(0.5, 3.0, n)
        x0 = rng.uniform(0.0, 1.0, n) * ub
        sense = [rng.choice([LE, GE, EQ]) for _ in range(m)]
        slack = rng.uniform(0.0, 1.0, m)
        rhs = A @ x0 + np.array([s if sn == LE else (-s if sn == GE else 0.0) for s, sn in zip(slack, sense)])
        model = lp_model(A, sense, rhs, np.zeros(n), ub, rng.uniform(-1.0, 1.0, n))
        lp = lp_solve(model)
        status, expected = highs_value(model, model.lb, model.ub)
        assert status == 0
        assert lp.status == LP_OPTIMAL
        assert lp.objective == pytest.approx(expected, rel=1e-6, abs=1e-7)
        assert point_residual(model, lp.x) <= 1e-7


def test_lp_solve_matches_highs_on_pricing_relaxations():
    rng = np.random.default_rng(22)
    for competitive in (False, True):
        for _ in range(5):
            model = build_mip(random_instance(rng, n_jobs=2, horizon=4, competitor=competitive))
            lp = lp_solve(model)
            status, expected = highs_value(model, model.lb, model.ub)
            assert status == 0
            assert lp.status == LP_OPTIMAL
            assert lp.objective == pytest.approx(expected, rel=1e-6, abs=1e-6)


def test_lp_without_rows():
    model = lp_model(np.zeros((0, 3)), [], [], [0.0, 0.0, 0.0], [2.0, 3.0, 4.0], [1.0, -1.0, 0.0])
    lp = lp_solve(model)
    assert lp.status == LP_OPTIMAL
    assert np.allclose(lp.x, [2.0, 0.0, 0.0])
    assert lp.objective == 2.0


def test_lp_with_fixed_binaries():
    instance = one_job(1.0, 1.0, 0, 1, 2.0, horizon=2, kappa=1.0)
    model = build_mip(instance)
    cap = PriceVector([10.0, 10.0])
    seed = seed_point(model, cap, best_response(instance, cap),
                      follower_duals(instance, cap, best_response(instance, cap)))
    lb, ub = model.lb.copy(), model.ub.copy()
    lb[model.binary] = ub[model.binary] = seed[model.binary]
    lp = lp_solve(model, lb, ub)
    assert lp.status == LP_OPTIMAL
    assert lp.objective == pytest.approx(9.0, abs=1e-7)

    # no slot may carry power
    lb, ub = model.lb.copy(), model.ub.copy()
    for h in (0, 1):
        ub[model.index['psi'][(KEY, h)]] = 0.0
    assert lp_solve(model, lb, ub).status == LP_INFEASIBLE


def test_one_job_kappa_one():
    instance = one_job(1.0, 1.0, 0, 1, 2.0, horizon=2, kappa=1.0)
    model, result = solve_pricing(instance)
    assert result.status == constant.OPTIMAL
    assert result.objective == pytest.approx(9.0, abs=1e-6)
    assert result.stats.seeded
    assert result.stats.incumbents == 0
    prices, schedule, _, peak = extract_solution(model, result.values)
    assert prices.p[0] == pytest.approx(10.0, abs=1e-6)
    assert np.allclose(schedule.x[KEY], [1.0, 0.0], atol=1e-7)
    assert peak == pytest.approx(1.0)


def test_one_job_kappa_five_splits_the_load():
    instance = one_job(1.0, 1.0, 0, 1, 2.0, horizon=2, kappa=5.0)
    model, result = solve_pricing(instance)
    assert result.status == constant.OPTIMAL
    assert result.objective == pytest.approx(6.5, abs=1e-6)
    prices, schedule, _, peak = extract_solution(model, result.values)
    assert peak == pytest.approx(0.5, abs=1e-6)
    assert prices.p[0] - prices.p[1] == pytest.approx(2.0, abs=1e-6)


def test_one_job_competitive():
    instance = one_job(1.0, 1.0, 0, 1, 2.0, horizon=2, kappa=1.0, competitor=[6.0, 6.0])
    _, result = solve_pricing(instance)
    assert result.status == constant.OPTIMAL
    assert result.objective == pytest.approx(5.0, abs=1e-6)


def test_no_peak_cost_and_no_inconvenience_sells_at_the_cap():
    instance = make_instance([(0.0, [(3, 2, 0, 2), (1, 1, 1, 3)]), (0.0, [(4, 2, 2, 5)])], horizon=6, kappa=0.0)
    _, result = solve_pricing(instance)
    assert result.status == constant.OPTIMAL
    assert result.objective == pytest.approx(8.0 * 10.0, abs=1e-5)


def test_empty_instance():
    instance = make_instance([], horizon=3, kappa=2.0)
    _, result = solve_pricing(instance)
    assert result.status == constant.OPTIMAL
    assert result.objective == pytest.approx(0.0)


def test_optimum_dominates_price_grid():
    rng = np.random.default_rng(31)
    p_max = 10.0
    grid = np.linspace(0.0, p_max, 21)
    for _ in range(4):
        instance = random_instance(rng, n_jobs=2, horizon=3, p_max=p_max)
        _, result = solve_pricing(instance)
        assert result.status == constant.OPTIMAL
        best = max(leader_value(instance, PriceVector(p)) for p in itertools.product(grid, repeat=3))
        assert result.objective >= best - 1e-6 * max(1.0, abs(best))


def test_net_revenue_falls_with_kappa():
    rng = np.random.default_rng(41)
    instance = random_instance(rng, n_jobs=2, horizon=4)
    values = [solve_pricing(with_kappa(instance, kappa))[1].objective for kappa in (0.0, 1.0, 5.0, 20.0)]
    for before, after in zip(values, values[1:]):
        assert after <= before + 1e-4


def test_solve_is_deterministic():
    rng = np.random.default_rng(51)
    instance = random_instance(rng, n_jobs=3, horizon=5, kappa=3.0)
    _, first = solve_pricing(instance, node_limit=5)
    _, second = solve_pricing(instance, node_limit=5)
    assert first.stats.nodes == second.stats.nodes
    assert first.objective == second.objective
    assert np.array_equal(first.values, second.values)
    assert first.status == second.status


def test_bound_and_incumbent_histories_are_monotone():
    rng = np.random.default_rng(61)
    instance = random_instance(rng, n_jobs=2, horizon=4, kappa=2.0, competitor=True)
    _, result = solve_pricing(instance)
    incumbents = result.stats.incumbent_history
    bounds = result.stats.bound_history
    assert all(b >= a for a, b in zip(incumbents, incumbents[1:]))
    assert all(b <= a + 1e-9 for a, b in zip(bounds, bounds[1:]))
    assert result.best_bound >= result.objective - 1e-9


def test_warm_start():
    instance = one_job(1.0, 1.0, 0, 1, 2.0, horizon=2, kappa=1.0)
    model = build_mip(instance)
    cap = PriceVector([10.0, 10.0])
    response = best_response(instance, cap)
    seed = seed_point(model, cap, response, follower_duals(instance, cap, response))
    accepted = warm_start(model, seed, bilevel_check(model))
    assert accepted is not None
    assert accepted[1] == pytest.approx(9.0)

    fractional = seed.copy()
    fractional[model.index['psi'][(KEY, 0)]] = 0.5
    assert warm_start(model, fractional) is None
    assert warm_start(model, seed[:-1]) is None
    assert warm_start(model, seed, lambda values: False) is None


def test_solver_limits_are_validated():
    for kwargs in ({'time_limit': 0.0}, {'gap_tolerance': -1.0}, {'node_limit': 0}, {'log_step': 0}):
        with pytest.raises(ConfigError):
            SolverLimits(**kwargs)


def test_lp_solve_matches_highs_after_refactorization():
    rng = np.random.default_rng(23)
    for _ in range(3):
        m, n = 40, 60
        A = rng.uniform(-1.0, 1.0, (m, n)) * (rng.uniform(size=(m, n)) < 0.3)
        ub = rng.uniform(0.5, 3.0, n)
        x0 = rng.uniform(0.0, 1.0, n) * ub
        sense = [rng.choice([LE, GE, EQ]) for _ in range(m)]
        slack = rng.uniform(0.0, 1.0, m)
        rhs = A @ x0 + np.array([s if sn == LE else (-s if sn == GE else 0.0) for s, sn in zip(slack, sense)])
        model = lp_model(A, sense, rhs, np.zeros(n), ub, rng.uniform(-1.0, 1.0, n))
        lp = lp_solve(model)
        status, expected = highs_value(model, model.lb, model.ub)
        assert status == 0
        assert lp.status == LP_OPTIMAL
        assert lp.objective == pytest.approx(expected, rel=1e-6, abs=1e-7)
        assert point_residual(model, lp.x) <= 1e-7


def test_polish_hands_tied_load_to_the_competitor():
    instance = one_job(1.0, 1.0, 0, 1, 2.0, horizon=2, kappa=20.0, competitor=[10.0, 10.0])
    model = build_mip(instance)
    cap = PriceVector([10.0, 10.0])
    response = best_response(instance, cap)
    seed = seed_point(model, cap, response, follower_duals(instance, cap, response))
    assert model.objective_value(seed) == pytest.approx(-10.0)
    polished = polish(model, seed)
    assert polished is not None
    accepted = warm_start(model, polished, bilevel_check(model))
    assert accepted is not None
    assert accepted[1] == pytest.approx(0.0, abs=1e-7)
    _, schedule, _, peak = extract_solution(model, accepted[0])
    assert schedule.x_bar[KEY].sum() == pytest.approx(1.0)
    assert peak == pytest.approx(0.0, abs=1e-7)


def test_seed_list_keeps_the_best_seed():
    rng = np.random.default_rng(81)
    instance = random_instance(rng, n_jobs=3, horizon=5, kappa=3.0)
    model = build_mip(instance)
    seeds, values = [], []
    for p in (instance.p_max, 0.5 * instance.p_max):
        prices = PriceVector(p.copy())
        response = best_response(instance, prices)
        seeds.append(seed_point(model, prices, response, follower_duals(instance, prices, response)))
        values.append(leader_value(instance, prices))
    result = solve(model, limits(node_limit=1), seed=seeds, incumbent_check=bilevel_check(model))
    assert result.stats.seeded
    assert result.objective >= max(values) - 1e-6 * max(1.0, abs(max(values)))


def test_competitor_at_the_cap_never_hurts_the_leader():
    rng = np.random.default_rng(91)
    strictly = 0
    for _ in range(20):
        instance = random_instance(rng, n_jobs=2, horizon=4, kappa=float(rng.uniform(0.0, 30.0)))
        _, mp = solve_pricing(mp_instance(instance))
        _, cp = solve_pricing(cp_instance(instance))
        assert mp.status == cp.status == constant.OPTIMAL
        assert cp.objective >= mp.objective - 1e-6 * max(1.0, abs(mp.objective))
        strictly += cp.objective > mp.objective + 1e-6
    assert strictly > 0


def test_free_competitor_takes_all_load():
    instance = one_job(2.0, 1.0, 0, 2, 1.0, horizon=3, kappa=1.0, competitor=[0.0, 0.0, 0.0])
    model, result = solve_pricing(instance)
    assert result.status == constant.OPTIMAL
    assert result.objective == pytest.approx(0.0, abs=1e-6)
    _, schedule, _, peak = extract_solution(model, result.values)
    assert peak == pytest.approx(0.0, abs=1e-6)
    assert np.allclose(schedule.x[KEY], 0.0, atol=1e-6)
    assert schedule.x_bar[KEY].sum() == pytest.approx(2.0)


def test_doubling_big_ms_keeps_the_optimum():
    rng = np.random.default_rng(101)
    for competitive in (False, True):
        for _ in range(3):
            instance = random_instance(rng, n_jobs=2, horizon=4, competitor=competitive)
            _, tight = solve_pricing(instance)
            _, loose = solve_pricing(instance, big_m_scale=2.0)
            assert tight.status == loose.status == constant.OPTIMAL
            assert loose.objective == pytest.approx(tight.objective, abs=1e-6 * max(1.0, abs(tight.objective)))


full_tests = pytest.mark.skipif(not os.environ.get(constant.FULL_TESTS_ENV),
                                reason='set {} to run'.format(constant.FULL_TESTS_ENV))


@full_tests
def test_optimum_dominates_price_grid_full():
    rng = np.random.default_rng(71)
    grid = np.linspace(0.0, 10.0, 21)
    for _ in range(200):
        horizon = int(rng.integers(2, 5))
        instance = random_instance(rng, n_jobs=int(rng.integers(1, 3)), horizon=horizon)
        _, result = solve_pricing(instance)
        assert result.status == constant.OPTIMAL
        best = max(leader_value(instance, PriceVector(p)) for p in itertools.product(grid, repeat=horizon))
        assert result.objective >= best - 1e-6 * max(1.0, abs(best))


@full_tests
def test_kappa_sweep_lowers_revenue_and_peak():
    config = GeneratorConfig().desk()
    for seed in instance_seeds(config):
        instance = generate(config, 0.0, 0.2, seed=seed)
        for view in (instance, cp_instance(instance)):
            solved = []
            for kappa in constant.KAPPA_SET:
                model, result = solve_pricing(with_kappa(view, kappa), time_limit=constant.DESK_TIME_LIMIT)
                if result.status == constant.OPTIMAL:
                    solved.append((result.objective, extract_solution(model, result.values)[3]))
            for (net, peak), (next_net, next_peak) in zip(solved, solved[1:]):
                assert next_net <= net + 1e-6 * max(1.0, abs(net))
                assert next_peak <= peak + 1e-4
