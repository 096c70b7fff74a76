"""
Seeded random instances: customers with preemptive appliance jobs over a
daily horizon.
"""

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional, Tuple

import numpy as np

from model.errors import ConfigError
from model.instance import Customer, Instance, Job, check_instance
from utils import constant


@dataclass(frozen=True)
class GeneratorConfig:
    n_customers: int = constant.N_CUSTOMERS
    jobs_per_customer: int = constant.JOBS_PER_CUSTOMER
    horizon: int = constant.HORIZON
    tww: Tuple[float, ...] = constant.TWW_SET
    beta_range: Tuple[float, float] = constant.BETA_RANGE
    demand_range: Tuple[float, float] = constant.DEMAND_RANGE
    lambda_range: Tuple[float, float] = constant.LAMBDA_RANGE
    p_max: float = constant.P_MAX
    kappa_set: Tuple[float, ...] = constant.KAPPA_SET
    seeds_per_kappa: int = constant.SEEDS_PER_KAPPA
    seed: int = 1234

    def __post_init__(self):
        for name in ('n_customers', 'jobs_per_customer', 'horizon', 'seeds_per_kappa'):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(name, "must be a positive integer, got {}".format(getattr(self, name)))
        for name in ('beta_range', 'demand_range', 'lambda_range'):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(name, "min {} > max {}".format(lo, hi))
            if lo < 0 or (name != 'lambda_range' and lo <= 0):
                raise ConfigError(name, "range must be positive, got [{}, {}]".format(lo, hi))
        if self.p_max < 0:
            raise ConfigError('p_max', "must be non-negative, got {}".format(self.p_max))
        if not self.tww or any(t < 0 for t in self.tww):
            raise ConfigError('tww', "need at least one non-negative width, got {}".format(self.tww))
        if not self.kappa_set or any(k < 0 for k in self.kappa_set):
            raise ConfigError('kappa_set', "need at least one non-negative kappa, got {}".format(self.kappa_set))
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError('seed', "must fit in 64 bits, got {}".format(self.seed))
        longest = window_length(self.demand_range[1], self.beta_range[0], max(self.tww))
        if longest >= self.horizon:
            raise ConfigError('horizon', "a window of {} slots does not fit {} slots".format(longest + 1, self.horizon))

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown generator field")
        kwargs = {}
        for k, v in d.items():
            kwargs[k] = tuple(float(x) for x in v) if isinstance(v, list) else v
        return cls(**kwargs)

    def to_dict(self):
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def desk(self):
        """ Desk-scale variant: fewer customers and jobs. """
        return replace(self, n_customers=constant.DESK_CUSTOMERS, jobs_per_customer=constant.DESK_JOBS_PER_CUSTOMER)


def mct(demand, power_cap):
    """ Fewest slots that meet `demand` at full power. """
    assert demand > 0 and power_cap > 0, "demand and power cap must be positive"
    return int(math.ceil(round(demand / power_cap, 9)))


def window_length(demand, power_cap, tww):
    return int(math.ceil(round((1.0 + tww) * mct(demand, power_cap), 9)))


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def generate(config, kappa, tww, seed=None):
    """
    One instance. Every customer and every job draws from its own
    substream, so the demand profile of a seed does not depend on tww,
    kappa or on how many customers follow.
    """
    seed = config.seed if seed is None else seed
    H = config.horizon
    customers = []
    for n in range(config.n_customers):
        lam = float(_rng(seed, 0, n).uniform(*config.lambda_range))
        cid = "c{}".format(n)
        jobs = []
        for a in range(config.jobs_per_customer):
            rng = _rng(seed, 1, n, a)
            beta = float(rng.uniform(*config.beta_range))
            demand = float(rng.uniform(*config.demand_range))
            u = float(rng.uniform())
            length = window_length(demand, beta, tww)
            if length >= H:
                raise ConfigError('tww', "window of {} slots does not fit horizon {}".format(length + 1, H))
            # uniform over the starts that keep the window inside the horizon
            begin = min(int(u * (H - length)), H - length - 1)
            end = begin + length
            jobs.append(Job(customer_id=cid, appliance_id="a{}".format(a), demand=demand, power_cap=beta,
                            tw_begin=begin, tw_end=end))
        customers.append(Customer(id=cid, lam=lam, jobs=tuple(jobs)))
    instance = Instance(horizon=H, customers=tuple(customers), price_cap=tuple([float(config.p_max)] * H),
                        kappa=float(kappa))
    return check_instance(instance)


def instance_seeds(config):
    return [config.seed + s for s in range(config.seeds_per_kappa)]


def batch(config, kappa_set: Optional[Tuple[float, ...]] = None):
    """
    Cross product tww x kappa x seed. The same seeds are reused for every
    kappa and tww so only the peak weight and the windows differ.
    """
    kappa_set = config.kappa_set if kappa_set is None else kappa_set
    out = []
    for tww in config.tww:
        for kappa in kappa_set:
            for seed in instance_seeds(config):
                out.append((float(kappa), float(tww), seed, generate(config, kappa, tww, seed=seed)))
    return out
