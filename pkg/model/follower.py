"""
Exact lower-level response of the smart grid.

For fixed prices the scheduling LP separates per job into a continuous
knapsack: fill the window slots in increasing order of unit cost
(price + inconvenience) at full power until the demand is met.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from model.errors import InfeasibleJobError, ModeError
from model.instance import Schedule, window_costs
from utils import constant


@dataclass
class DualSolution:
    """
    Lower-level duals: w for the per-slot power caps, v for the demand rows.
    w[job.key] is indexed like the schedule arrays.
    """
    w: Dict[Tuple[str, str], np.ndarray]
    v: Dict[Tuple[str, str], float]


@dataclass
class FollowerSolution:
    schedule: Schedule
    objective: float
    per_job_marginal: Dict[Tuple[str, str], float]


def _fill(job, unit_costs):
    """
    Greedy continuous-knapsack fill. Equal unit costs are served earliest
    slot first. Returns the power array and the marginal unit cost.
    """
    order = np.lexsort((np.arange(job.n_slots), unit_costs))
    x = np.zeros(job.n_slots)
    remaining = job.demand
    marginal = 0.0
    for k in order:
        if remaining <= 0:
            break
        amount = min(job.power_cap, remaining)
        x[k] = amount
        remaining -= amount
        marginal = float(unit_costs[k])
    if remaining > constant.PRIMAL_TOL * max(1.0, job.demand):
        raise InfeasibleJobError(str(job), "demand {} exceeds window capacity {}".format(
            job.demand, job.power_cap * job.n_slots))
    return x, marginal


def best_response_mp(instance, prices):
    p = np.asarray(prices.p, dtype=float)
    schedule = Schedule(x={})
    marginals = {}
    objective = 0.0
    for job, lam in instance.jobs():
        unit = p[job.tw_begin:job.tw_end + 1] + window_costs(job, lam)
        x, marginal = _fill(job, unit)
        schedule.x[job.key] = x
        marginals[job.key] = marginal
        objective += float(unit @ x)
    return FollowerSolution(schedule=schedule, objective=objective, per_job_marginal=marginals)


def best_response_cp(instance, prices):
    """
    Competitive response: each slot is bought from the cheaper supplier,
    from the leader on price ties.
    """
    if not instance.is_competitive:
        raise ModeError("competitor prices required")
    p = np.asarray(prices.p, dtype=float)
    p_bar = instance.p_bar
    schedule = Schedule(x={}, x_bar={})
    marginals = {}
    objective = 0.0
    for job, lam in instance.jobs():
        window = slice(job.tw_begin, job.tw_end + 1)
        leader = p[window] <= p_bar[window]
        unit = np.minimum(p[window], p_bar[window]) + window_costs(job, lam)
        total, marginal = _fill(job, unit)
        schedule.x[job.key] = np.where(leader, total, 0.0)
        schedule.x_bar[job.key] = np.where(leader, 0.0, total)
        marginals[job.key] = marginal
        objective += float(unit @ total)
    return FollowerSolution(schedule=schedule, objective=objective, per_job_marginal=marginals)


def best_response(instance, prices):
    if instance.is_competitive:
        return best_response_cp(instance, prices)
    return best_response_mp(instance, prices)


def follower_objective(instance, prices, schedule):
    p = np.asarray(prices.p, dtype=float)
    p_bar = instance.p_bar
    total = 0.0
    for job, lam in instance.jobs():
        window = slice(job.tw_begin, job.tw_end + 1)
        c = window_costs(job, lam)
        total += float((p[window] + c) @ schedule.x[job.key])
        if schedule.x_bar is not None:
            if p_bar is None:
                raise ModeError("competitor supply given for a monopoly instance")
            total += float((p_bar[window] + c) @ schedule.x_bar[job.key])
    return total


def follower_duals(instance, prices, solution):
    """
    Duals certifying an oracle response: v is the marginal unit cost,
    w the saving of every slot cheaper than the marginal one.
    """
    p = np.asarray(prices.p, dtype=float)
    p_bar = instance.p_bar
    w, v = {}, {}
    for job, lam in instance.jobs():
        window = slice(job.tw_begin, job.tw_end + 1)
        price = p[window] if p_bar is None else np.minimum(p[window], p_bar[window])
        unit = price + window_costs(job, lam)
        marginal = solution.per_job_marginal[job.key]
        v[job.key] = marginal
        w[job.key] = np.maximum(0.0, marginal - unit)
    return DualSolution(w=w, v=v)


def kkt_residual(instance, prices, schedule, duals):
    """
    Largest violation of primal feasibility, dual feasibility and
    complementary slackness of the lower-level LP. Returns (residual, label).
    """
    p = np.asarray(prices.p, dtype=float)
    p_bar = instance.p_bar
    worst, label = 0.0, 'none'

    def record(value, name):
        nonlocal worst, label
        if value > worst:
            worst, label = float(value), name

    for job, lam in instance.jobs():
        window = slice(job.tw_begin, job.tw_end + 1)
        c = window_costs(job, lam)
        x = schedule.x[job.key]
        x_bar = schedule.x_bar[job.key] if schedule.x_bar is not None else np.zeros_like(x)
        w = duals.w[job.key]
        v = duals.v[job.key]
        total = x + x_bar

        # primal
        record(np.max(-x, initial=0.0), "{} x >= 0".format(job))
        record(np.max(-x_bar, initial=0.0), "{} x_bar >= 0".format(job))
        record(np.max(total - job.power_cap, initial=0.0), "{} power cap".format(job))
        record(job.demand - total.sum(), "{} demand".format(job))
        # dual
        record(-v, "{} v >= 0".format(job))
        record(np.max(-w, initial=0.0), "{} w >= 0".format(job))
        slack = p[window] + c + w - v
        record(np.max(-slack, initial=0.0), "{} dual row x".format(job))
        # complementarity
        record(np.max(np.abs(x * slack), initial=0.0), "{} x complementarity".format(job))
        record(np.max(np.abs(w * (job.power_cap - total)), initial=0.0), "{} w complementarity".format(job))
        record(abs(v * (total.sum() - job.demand)), "{} v complementarity".format(job))
        if p_bar is not None:
            slack_bar = p_bar[window] + c + w - v
            record(np.max(-slack_bar, initial=0.0), "{} dual row x_bar".format(job))
            record(np.max(np.abs(x_bar * slack_bar), initial=0.0), "{} x_bar complementarity".format(job))
    return worst, label


def dominance_violations(instance, prices, schedule, tol=constant.PRIMAL_TOL):
    """ Slots where the leader supplies power although the competitor is strictly cheaper. """
    out = []
    if not instance.is_competitive:
        return out
    p = np.asarray(prices.p, dtype=float)
    p_bar = instance.p_bar
    for job, _ in instance.jobs():
        for k, h in enumerate(job.slots):
            if p[h] > p_bar[h] + tol and schedule.x[job.key][k] > tol:
                out.append((str(job), h))
    return out
