import numpy as np
import pytest

from builders import make_instance, one_job, random_instance
from data.generator import GeneratorConfig, generate
from model.follower import best_response
from model.instance import PriceVector, cp_instance
from model.milp import warm_start
from model.reformulation import bilevel_check, build_mip
from model.search import _JobTable, price_search, price_seeds, search_seeds


def leader_value(instance, prices):
    schedule = best_response(instance, prices).schedule
    revenue = sum(float(prices.p[job.tw_begin:job.tw_end + 1] @ schedule.x[job.key]) for job, _ in instance.jobs())
    return revenue - instance.kappa * float(schedule.leader_load(instance).max(initial=0.0))


def test_batch_values_match_the_follower_oracle():
    rng = np.random.default_rng(5)
    for competitive in (False, True):
        instance = random_instance(rng, n_jobs=4, horizon=6, kappa=3.0, competitor=competitive)
        table = _JobTable(instance)
        prices = rng.uniform(0.0, 10.0, (16, 6))
        # ties between slots and with the competitor
        prices[0] = instance.p_max
        if competitive:
            prices[1] = instance.p_bar
        values, scores = table.evaluate(prices)
        assert np.array_equal(values, scores)
        for k in range(len(prices)):
            assert values[k] == pytest.approx(leader_value(instance, PriceVector(prices[k])), abs=1e-9)


def test_smoothed_score_lies_below_the_value():
    rng = np.random.default_rng(6)
    instance = random_instance(rng, n_jobs=4, horizon=6, kappa=3.0)
    table = _JobTable(instance)
    prices = rng.uniform(0.0, 10.0, (8, 6))
    values, scores = table.evaluate(prices, temperature=0.5)
    assert np.all(scores <= values + 1e-12)


def test_levels_stay_in_bounds():
    instance = one_job(3.0, 2.0, 0, 2, 1.0, horizon=3, kappa=1.0, competitor=[4.0, 4.0, 4.0])
    levels = _JobTable(instance).levels(instance.p_max.copy(), 1)
    assert levels.min() >= 0.0
    assert levels.max() <= 10.0
    assert 4.0 in levels
    assert 10.0 in levels
    assert np.all(np.diff(levels) > 0)


def test_search_never_loses_value():
    rng = np.random.default_rng(7)
    for competitive in (False, True):
        for _ in range(5):
            instance = random_instance(rng, n_jobs=3, horizon=5, kappa=float(rng.uniform(0.0, 20.0)),
                                       competitor=competitive)
            result = price_search(instance)
            assert result.value >= result.start_value
            assert result.value == pytest.approx(leader_value(instance, result.prices), abs=1e-9)
            assert np.all(result.prices.p >= 0.0)
            assert np.all(result.prices.p <= instance.p_max)


def test_search_splits_a_stacked_peak():
    # both jobs fill slot 0 at the cap; only the first is indifferent to delay
    instance = make_instance([(0.0, [(1.0, 1.0, 0, 1)]), (1.0, [(1.0, 1.0, 0, 1)])], horizon=2, kappa=8.0)
    result = price_search(instance)
    assert result.start_value == pytest.approx(20.0 - 16.0)
    assert result.value > result.start_value + 1.0
    assert best_response(instance, result.prices).schedule.leader_load(instance).max() == pytest.approx(1.0)


def test_search_respects_its_budget():
    rng = np.random.default_rng(8)
    instance = random_instance(rng, n_jobs=3, horizon=5, kappa=2.0)
    result = price_search(instance, max_evaluations=10)
    assert result.evaluations <= 10 + 512


def test_search_seeds_are_accepted_by_the_model():
    config = GeneratorConfig(n_customers=3, jobs_per_customer=2)
    instance = generate(config, 200.0, 0.2, seed=3)
    for view in (instance, cp_instance(instance)):
        model = build_mip(view)
        seeds, result = search_seeds(model, max_evaluations=20000)
        assert len(seeds) == 2
        check = bilevel_check(model)
        accepted = [warm_start(model, seed, check) for seed in seeds]
        assert all(a is not None for a in accepted)
        assert accepted[0][1] == pytest.approx(result.value, abs=1e-6)
        assert accepted[0][1] >= accepted[1][1] - 1e-9


def test_price_seeds_follow_the_oracle():
    instance = one_job(1.0, 1.0, 0, 1, 2.0, horizon=2, kappa=1.0)
    model = build_mip(instance)
    seed = price_seeds(model, [PriceVector([10.0, 10.0])])[0]
    assert model.objective_value(seed) == pytest.approx(9.0)
