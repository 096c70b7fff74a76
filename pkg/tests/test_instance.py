import json

import numpy as np
import pytest

from builders import make_instance, make_job, one_job
from data.loader import instance_to_dict, load_instance, save_instance
from model.errors import DomainError, ValidationError
from model.instance import (PriceVector, Schedule, check_instance, cp_instance, inconvenience_cost, mp_instance,
                            schedule_violations, validate, window_costs, with_kappa)


def test_inconvenience_cost_examples():
    job = make_job(demand=3.0, power_cap=2.0, tw_begin=0, tw_end=2)
    assert inconvenience_cost(job, 7.3, 0) == 0.0
    assert inconvenience_cost(job, 1.0, 1) == pytest.approx(1.5)
    assert inconvenience_cost(job, 1.0, 2) == pytest.approx(3.0)


def test_inconvenience_cost_rejects_slots_outside_window():
    job = make_job(tw_begin=3, tw_end=5)
    with pytest.raises(DomainError):
        inconvenience_cost(job, 1.0, 2)
    with pytest.raises(DomainError):
        inconvenience_cost(job, 1.0, 6)
    with pytest.raises(DomainError):
        inconvenience_cost(make_job(tw_begin=4, tw_end=4), 1.0, 4)


def test_inconvenience_cost_shape():
    rng = np.random.default_rng(7)
    for _ in range(50):
        begin = int(rng.integers(0, 20))
        end = int(rng.integers(begin + 1, 24))
        job = make_job(demand=rng.uniform(1, 10), power_cap=10.0, tw_begin=begin, tw_end=end)
        lam = rng.uniform(0, 3)
        c = window_costs(job, lam)
        assert np.all(np.diff(c) >= 0)
        assert c[-1] == pytest.approx(lam * job.demand)
        # linear in the delay
        assert np.allclose(np.diff(c, 2), 0.0, atol=1e-9)
        # doubling lambda or the demand doubles the cost
        doubled = make_job(demand=2 * job.demand, power_cap=10.0, tw_begin=begin, tw_end=end)
        assert np.allclose(window_costs(job, 2 * lam), 2 * c)
        assert np.allclose(window_costs(doubled, lam), 2 * c)


def test_validate_well_formed():
    instance = make_instance([(1.0, [(3, 2, 0, 2), (1, 1, 1, 3)]), (0.5, [(4, 2, 2, 5)])], horizon=6)
    assert validate(instance) == []
    assert check_instance(instance) is instance


def test_validate_reports_rules():
    # test 1: 10 > 2 x 3
    instance = make_instance([(1.0, [(10, 2, 0, 2)])], horizon=4)
    assert [v.rule for v in validate(instance)] == ['demand infeasible']

    # test 2
    instance = make_instance([(1.0, [(1, 2, 2, 2)])], horizon=4)
    assert 'degenerate window' in [v.rule for v in validate(instance)]

    # test 3
    instance = make_instance([(1.0, [(1, 2, 2, 4)])], horizon=4)
    assert 'window out of horizon' in [v.rule for v in validate(instance)]

    # test 4
    instance = make_instance([(-1.0, [(1, 2, 0, 1)])], horizon=4, kappa=-2.0)
    rules = [v.rule for v in validate(instance)]
    assert 'invalid lambda' in rules
    assert 'negative kappa' in rules

    # test 5
    instance = make_instance([(1.0, [(1, 2, 0, 1)])], horizon=4, competitor=[1.0, 2.0])
    assert [v.rule for v in validate(instance)] == ['competitor prices length']


def test_check_instance_raises_with_violations():
    instance = make_instance([(1.0, [(10, 2, 0, 2)])], horizon=4)
    with pytest.raises(ValidationError) as info:
        check_instance(instance)
    assert info.value.violations[0].job == 'c0/a0'
    assert 'demand infeasible' in str(info.value)


def test_schedule_violations():
    instance = one_job(3.0, 2.0, 0, 2, 1.0, horizon=3)
    key = ('c0', 'a0')
    assert schedule_violations(instance, Schedule(x={key: np.array([2.0, 1.0, 0.0])})) == []
    rules = [v.rule for v in schedule_violations(instance, Schedule(x={key: np.array([2.5, 0.0, 0.0])}))]
    assert rules == ['power cap exceeded', 'demand unmet']
    shared = cp_instance(instance)
    schedule = Schedule(x={key: np.array([1.5, 0.0, 0.0])}, x_bar={key: np.array([1.0, 0.5, 0.0])})
    assert [v.rule for v in schedule_violations(shared, schedule)] == ['power cap exceeded']


def test_price_vector_bounds():
    instance = one_job(3.0, 2.0, 0, 2, 1.0, horizon=3, p_max=10.0)
    assert PriceVector([0.0, 10.0, 5.0]).violations(instance) == []
    assert len(PriceVector([-1.0, 11.0, 5.0]).violations(instance)) == 2
    assert PriceVector([1.0, 2.0]).violations(instance)[0].rule == 'price length'


def test_model_views():
    instance = one_job(3.0, 2.0, 0, 2, 1.0, horizon=3, p_max=[10.0, 8.0, 6.0])
    competitive = cp_instance(instance)
    assert competitive.is_competitive
    assert competitive.competitor_prices == (10.0, 8.0, 6.0)
    assert not mp_instance(competitive).is_competitive
    assert cp_instance(instance, [1, 2, 3]).competitor_prices == (1.0, 2.0, 3.0)
    assert with_kappa(instance, 5).kappa == 5.0
    assert instance.kappa == 1.0


def test_instance_json_schema(tmp_path):
    instance = make_instance([(1.5, [(3, 2, 0, 2)])], horizon=3, kappa=200.0, competitor=[9.0, 9.0, 9.0])
    filename = save_instance(instance, str(tmp_path / 'instance.json'))
    with open(filename) as f:
        d = json.load(f)
    assert sorted(d) == ['competitor_prices', 'customers', 'horizon', 'kappa', 'price_cap']
    assert sorted(d['customers'][0]) == ['id', 'jobs', 'lambda']
    assert sorted(d['customers'][0]['jobs'][0]) == ['appliance', 'demand', 'power_cap', 'tw_begin', 'tw_end']
    assert load_instance(filename) == instance
    assert instance_to_dict(mp_instance(instance))['competitor_prices'] is None
