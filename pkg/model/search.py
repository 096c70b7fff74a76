"""
Warm-start price search for the leader.

Coordinate moves on the price vector: one slot at a time, every price
level at which some job would switch slots is tried at once, and the
best level is kept. Early sweeps score candidates on a smoothed peak
(log-sum-exp over slot loads) so that load can spread before the hard
maximum takes over. The best price vector found seeds branch-and-bound.
"""

import time
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from model.follower import best_response, follower_duals
from model.instance import PriceVector, window_costs
from model.reformulation import seed_point
from utils import constant


@dataclass
class SearchResult:
    prices: PriceVector
    value: float
    start_value: float
    evaluations: int
    sweeps: int


class _JobTable(object):
    """
    Jobs stacked into padded (J, W) arrays. Padding points at an extra
    slot H with infinite cost, so it is filled last and receives nothing.
    """

    def __init__(self, instance):
        jobs = instance.jobs()
        H = instance.horizon
        W = max([job.n_slots for job, _ in jobs], default=1)
        J = len(jobs)
        self.horizon = H
        self.slots = np.full((J, W), H, dtype=int)
        self.cost = np.full((J, W), np.inf)
        amounts = np.zeros((J, W))
        for i, (job, lam) in enumerate(jobs):
            n = job.n_slots
            self.slots[i, :n] = np.arange(job.tw_begin, job.tw_end + 1)
            self.cost[i, :n] = window_costs(job, lam)
            amounts[i] = np.clip(job.demand - job.power_cap * np.arange(W), 0.0, job.power_cap)
        self.amounts = amounts
        self.kappa = instance.kappa
        self.p_max = instance.p_max
        self.p_bar = instance.p_bar
        self.incidence = np.zeros((J * W, H))
        real = self.slots.ravel() < H
        self.incidence[np.flatnonzero(real), self.slots.ravel()[real]] = 1.0

    def _padded(self, prices):
        """ (K, H) prices -> (K, H + 1) with a zero padding slot. """
        return np.concatenate([prices, np.zeros((prices.shape[0], 1))], axis=1)

    def evaluate(self, prices, temperature=0.0):
        """
        Leader value and search score of K price vectors at once.
        The fill matches the follower oracle: cheapest unit cost first,
        earliest slot on ties, leader on price ties with the competitor.
        """
        K = prices.shape[0]
        padded = self._padded(prices)
        own = padded[:, self.slots]
        if self.p_bar is not None:
            bar = np.append(self.p_bar, 0.0)[self.slots]
            unit = np.minimum(own, bar) + self.cost
            leader = own <= bar
        else:
            unit = own + self.cost
            leader = None
        order = np.argsort(unit, axis=-1, kind='stable')
        x = np.zeros_like(unit)
        np.put_along_axis(x, order, np.broadcast_to(self.amounts, unit.shape), axis=-1)
        if leader is not None:
            x = np.where(leader, x, 0.0)
        revenue = (own * x).sum(axis=(1, 2))
        load = x.reshape(K, -1) @ self.incidence
        value = revenue - self.kappa * load.max(axis=1, initial=0.0)
        if temperature <= 0.0 or load.shape[1] == 0:
            return value, value
        smooth = temperature * logsumexp(load / temperature, axis=1)
        return value, revenue - self.kappa * smooth

    def levels(self, prices, g):
        """ Price levels for slot g at which a job using g ties with another slot. """
        H = self.horizon
        rows, cols = np.nonzero(self.slots == g)
        if self.p_bar is not None:
            effective = np.append(np.minimum(prices, self.p_bar), 0.0)
        else:
            effective = np.append(prices, 0.0)
        out = [np.array([self.p_max[g]])]
        if self.p_bar is not None:
            out.append(np.array([self.p_bar[g]]))
        for i, k in zip(rows, cols):
            others = self.slots[i] < H
            others[k] = False
            ties = effective[self.slots[i, others]] + self.cost[i, others] - self.cost[i, k]
            out.append(ties)
            out.append(ties - constant.SEARCH_STEP)
        levels = np.clip(np.concatenate(out), 0.0, self.p_max[g])
        return np.unique(levels)


def price_search(instance, prices=None, max_evaluations=constant.SEARCH_EVALUATIONS, deadline=None):
    """
    Improve `prices` (default: the price cap) by coordinate moves.
    Stops after `max_evaluations` price vectors or at `deadline`.
    """
    table = _JobTable(instance)
    p = instance.p_max.copy() if prices is None else np.asarray(prices.p, dtype=float).copy()
    start_value = float(table.evaluate(p[None, :])[0][0])
    best, best_value = p.copy(), start_value
    evaluations, sweeps = 1, 0
    scale = float(np.mean(table.amounts[:, 0])) if table.amounts.size else 1.0
    scale = max(scale, constant.PRIMAL_TOL)

    def exhausted():
        if evaluations >= max_evaluations:
            return True
        return deadline is not None and time.time() > deadline

    for factor in constant.SEARCH_TEMPERATURES:
        temperature = factor * scale
        current = float(table.evaluate(p[None, :], temperature)[1][0])
        for _ in range(constant.SEARCH_SWEEPS):
            improved = False
            for g in range(instance.horizon):
                if exhausted():
                    break
                levels = table.levels(p, g)
                for lo in range(0, len(levels), constant.SEARCH_BATCH):
                    chunk = levels[lo:lo + constant.SEARCH_BATCH]
                    trial = np.repeat(p[None, :], len(chunk), axis=0)
                    trial[:, g] = chunk
                    values, scores = table.evaluate(trial, temperature)
                    evaluations += len(chunk)
                    k = int(np.argmax(values))
                    if values[k] > best_value:
                        best, best_value = trial[k].copy(), float(values[k])
                    k = int(np.argmax(scores))
                    if scores[k] > current + 1e-12 * max(1.0, abs(current)):
                        p, current = trial[k].copy(), float(scores[k])
                        improved = True
            sweeps += 1
            if not improved or exhausted():
                break
        if exhausted():
            break
    return SearchResult(prices=PriceVector(best), value=best_value, start_value=start_value,
                        evaluations=evaluations, sweeps=sweeps)


def price_seeds(model, candidates):
    """ MIP seed assignments for a list of price vectors. """
    instance = model.instance
    seeds = []
    for prices in candidates:
        response = best_response(instance, prices)
        seeds.append(seed_point(model, prices, response, follower_duals(instance, prices, response)))
    return seeds


def search_seeds(model, deadline=None, max_evaluations=constant.SEARCH_EVALUATIONS):
    """
    Seeds for branch-and-bound: the searched prices and the price cap.
    Returns (seeds, SearchResult).
    """
    instance = model.instance
    result = price_search(instance, max_evaluations=max_evaluations, deadline=deadline)
    cap = PriceVector(instance.p_max.copy())
    return price_seeds(model, [result.prices, cap]), result
