"""
Domain types for pricing instances, price vectors and appliance schedules.

Slots are 0-based. A job may run in any slot of its inclusive window
[tw_begin, tw_end]; windows span at least two slots.
"""

import math
from collections import namedtuple
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from model.errors import DomainError, ValidationError
from utils import constant

Violation = namedtuple('Violation', ['job', 'rule', 'detail'])


@dataclass(frozen=True)
class Job:
    customer_id: str
    appliance_id: str
    demand: float
    power_cap: float
    tw_begin: int
    tw_end: int

    @property
    def key(self):
        return self.customer_id, self.appliance_id

    @property
    def width(self):
        return self.tw_end - self.tw_begin

    @property
    def slots(self):
        return range(self.tw_begin, self.tw_end + 1)

    @property
    def n_slots(self):
        return self.tw_end - self.tw_begin + 1

    def __str__(self):
        return "{}/{}".format(self.customer_id, self.appliance_id)


@dataclass(frozen=True)
class Customer:
    id: str
    lam: float
    jobs: Tuple[Job, ...] = ()


@dataclass(frozen=True)
class Instance:
    horizon: int
    customers: Tuple[Customer, ...]
    price_cap: Tuple[float, ...]
    kappa: float
    competitor_prices: Optional[Tuple[float, ...]] = None

    @property
    def is_competitive(self):
        return self.competitor_prices is not None

    @property
    def p_max(self):
        return np.asarray(self.price_cap, dtype=float)

    @property
    def p_bar(self):
        if self.competitor_prices is None:
            return None
        return np.asarray(self.competitor_prices, dtype=float)

    def jobs(self):
        """
        All jobs with the inconvenience coefficient of their owner, in file order.
        """
        return [(job, c.lam) for c in self.customers for job in c.jobs]


def inconvenience_cost(job, lam, h):
    """
    Per-kW delay penalty of running `job` in slot `h`: linear from 0 at the
    window start to lam * E at the window end.
    """
    if job.tw_end <= job.tw_begin:
        raise DomainError("Job {} has a degenerate window [{}, {}]".format(job, job.tw_begin, job.tw_end))
    if h < job.tw_begin or h > job.tw_end:
        raise DomainError("Slot {} is outside the window [{}, {}] of job {}".format(
            h, job.tw_begin, job.tw_end, job))
    return lam * job.demand * (h - job.tw_begin) / (job.tw_end - job.tw_begin)


def window_costs(job, lam):
    """ Inconvenience costs over the whole window, as an array. """
    return np.array([inconvenience_cost(job, lam, h) for h in job.slots], dtype=float)


@dataclass
class PriceVector:
    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)

    def violations(self, instance, tol=constant.PRIMAL_TOL):
        out = []
        if self.p.shape != (instance.horizon,):
            return [Violation('-', 'price length', "{} prices for horizon {}".format(len(self.p), instance.horizon))]
        for h in range(instance.horizon):
            if not math.isfinite(self.p[h]) or self.p[h] < -tol or self.p[h] > instance.price_cap[h] + tol:
                out.append(Violation('-', 'price out of bounds', "slot {}: {}".format(h, self.p[h])))
        return out


@dataclass
class Schedule:
    """
    Power per job over its window: x[job.key][k] is the power in slot
    job.tw_begin + k. x_bar holds competitor supply in the competitive model.
    """
    x: Dict[Tuple[str, str], np.ndarray] = field(default_factory=dict)
    x_bar: Optional[Dict[Tuple[str, str], np.ndarray]] = None

    @classmethod
    def zeros(cls, instance):
        x = {job.key: np.zeros(job.n_slots) for job, _ in instance.jobs()}
        x_bar = None
        if instance.is_competitive:
            x_bar = {job.key: np.zeros(job.n_slots) for job, _ in instance.jobs()}
        return cls(x=x, x_bar=x_bar)

    def leader_load(self, instance):
        load = np.zeros(instance.horizon)
        for job, _ in instance.jobs():
            load[job.tw_begin:job.tw_end + 1] += self.x[job.key]
        return load

    def competitor_load(self, instance):
        load = np.zeros(instance.horizon)
        if self.x_bar is None:
            return load
        for job, _ in instance.jobs():
            load[job.tw_begin:job.tw_end + 1] += self.x_bar[job.key]
        return load

    def supplied(self, job):
        total = float(np.sum(self.x[job.key]))
        if self.x_bar is not None:
            total += float(np.sum(self.x_bar[job.key]))
        return total


def validate(instance):
    """
    Check every instance invariant. Returns a list of violations, empty when
    the instance is well formed.
    """
    out = []
    H = instance.horizon
    if H <= 0:
        out.append(Violation('-', 'horizon', "horizon must be positive, got {}".format(H)))
    if len(instance.price_cap) != H:
        out.append(Violation('-', 'price cap length', "{} caps for horizon {}".format(len(instance.price_cap), H)))
    elif any(not math.isfinite(p) or p < 0 for p in instance.price_cap):
        out.append(Violation('-', 'negative price cap', "caps must be finite and >= 0"))
    if not math.isfinite(instance.kappa) or instance.kappa < 0:
        out.append(Violation('-', 'negative kappa', "kappa = {}".format(instance.kappa)))
    if instance.competitor_prices is not None:
        if len(instance.competitor_prices) != H:
            out.append(Violation('-', 'competitor prices length',
                                 "{} prices for horizon {}".format(len(instance.competitor_prices), H)))
        elif any(not math.isfinite(p) or p < 0 for p in instance.competitor_prices):
            out.append(Violation('-', 'negative competitor price', "competitor prices must be finite and >= 0"))

    seen = set()
    for customer in instance.customers:
        if not math.isfinite(customer.lam) or customer.lam < 0:
            out.append(Violation(customer.id, 'invalid lambda', "lambda = {}".format(customer.lam)))
        for job in customer.jobs:
            if job.customer_id != customer.id:
                out.append(Violation(str(job), 'customer mismatch', "job listed under {}".format(customer.id)))
            if job.key in seen:
                out.append(Violation(str(job), 'duplicate job', "appliance id repeated"))
            seen.add(job.key)
            if not (math.isfinite(job.demand) and job.demand > 0):
                out.append(Violation(str(job), 'non-positive demand', "E = {}".format(job.demand)))
            if not (math.isfinite(job.power_cap) and job.power_cap > 0):
                out.append(Violation(str(job), 'non-positive power cap', "beta = {}".format(job.power_cap)))
            if job.tw_begin == job.tw_end:
                out.append(Violation(str(job), 'degenerate window', "tw_begin = tw_end = {}".format(job.tw_begin)))
            elif job.tw_begin > job.tw_end:
                out.append(Violation(str(job), 'reversed window', "[{}, {}]".format(job.tw_begin, job.tw_end)))
            if job.tw_begin < 0 or job.tw_end > H - 1:
                out.append(Violation(str(job), 'window out of horizon',
                                     "[{}, {}] not in [0, {}]".format(job.tw_begin, job.tw_end, H - 1)))
            if job.tw_end >= job.tw_begin and job.demand > job.power_cap * job.n_slots:
                out.append(Violation(str(job), 'demand infeasible', "{} > {} x {}".format(
                    job.demand, job.power_cap, job.n_slots)))
    return out


def check_instance(instance):
    violations = validate(instance)
    if violations:
        raise ValidationError(violations)
    return instance


def schedule_violations(instance, schedule, tol=constant.PRIMAL_TOL):
    """
    Feasibility of a schedule: window shapes, power caps (shared with the
    competitor in CP) and demand satisfaction.
    """
    out = []
    for job, _ in instance.jobs():
        x = schedule.x.get(job.key)
        if x is None or len(x) != job.n_slots:
            out.append(Violation(str(job), 'schedule shape', "expected {} slots".format(job.n_slots)))
            continue
        total = np.asarray(x, dtype=float)
        if np.any(total < -tol):
            out.append(Violation(str(job), 'negative power', "min {}".format(total.min())))
        if schedule.x_bar is not None:
            x_bar = schedule.x_bar.get(job.key)
            if x_bar is None or len(x_bar) != job.n_slots:
                out.append(Violation(str(job), 'schedule shape', "competitor supply shape"))
                continue
            if np.any(x_bar < -tol):
                out.append(Violation(str(job), 'negative power', "competitor min {}".format(x_bar.min())))
            total = total + x_bar
        if np.any(total > job.power_cap + tol):
            out.append(Violation(str(job), 'power cap exceeded', "max {} > {}".format(total.max(), job.power_cap)))
        if total.sum() < job.demand - tol:
            out.append(Violation(str(job), 'demand unmet', "{} < {}".format(total.sum(), job.demand)))
    return out


def mp_instance(instance):
    """ Monopoly view of the same jobs: competitor prices dropped. """
    return replace(instance, competitor_prices=None)


def cp_instance(instance, competitor_prices=None):
    """
    Competitive view of the same jobs. Competitor prices default to the
    price caps.
    """
    if competitor_prices is None:
        competitor_prices = instance.price_cap
    return replace(instance, competitor_prices=tuple(float(p) for p in competitor_prices))


def with_kappa(instance, kappa):
    return replace(instance, kappa=float(kappa))


def job_index(instance):
    """ Map job key -> (position, job, lambda). """
    return {job.key: (i, job, lam) for i, (job, lam) in enumerate(instance.jobs())}
