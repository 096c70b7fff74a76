"""
Single-level MIP equivalent of the bilevel pricing models.

The lower-level LP is replaced by its primal rows, its dual rows and
big-M linearized complementary slackness; strong duality turns the
bilinear revenue term into a linear objective.

With H slots, J jobs and S = sum of window lengths (job-slot pairs):

    monopoly     variables  H + 1 + 4S + 2J      (p, gamma, x, w, v, psi, xi, eps)
                 binaries   2S + J
                 rows       H + 6S + 3J          (peak H, cap S, demand J, dual S,
                                                  xi 2S, eps 2J, psi 2S)
    competitive  variables  H + 1 + 6S + 2J      (+ x_bar, psi_bar)
                 binaries   3S + J
                 rows       H + 9S + 3J          (+ x_bar dual S, psi_bar 2S)
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from model.errors import BuildError, ExtractionError, ModeError
from model.follower import DualSolution, best_response, follower_objective, kkt_residual
from model.instance import PriceVector, Schedule, validate, window_costs
from utils import constant

LE, GE, EQ = '<=', '>=', '='


@dataclass(frozen=True)
class BigMBundle:
    m1: float
    m2: float
    m3: float
    v_max: float


def compute_big_ms(instance, scale=1.0):
    """
    Per-job big-M constants. With Vmax the largest unit cost a job can face,
    M1 bounds x and the dual slack, M2 bounds v and the demand surplus,
    M3 bounds w and the unused power. `scale` inflates all three.
    """
    if not scale >= 1.0:
        raise BuildError("big-M scale must be at least 1, got {}".format(scale))
    p_max = instance.p_max
    if instance.is_competitive:
        p_max = np.maximum(p_max, instance.p_bar)
    bundles = {}
    for job, lam in instance.jobs():
        v_max = float(np.max(p_max[job.tw_begin:job.tw_end + 1] + window_costs(job, lam)))
        bundles[job.key] = BigMBundle(
            m1=scale * max(job.power_cap, 2.0 * v_max),
            m2=scale * max(v_max, job.n_slots * job.power_cap - job.demand),
            m3=scale * max(v_max, job.power_cap),
            v_max=v_max,
        )
    return bundles


class MilpModel(object):
    """
    Maximize obj @ z subject to rows A z (<=, >=, =) rhs, lb <= z <= ub and
    z integral on the binary mask. Index maps tie columns back to prices,
    job-slot pairs and jobs.
    """

    def __init__(self, names, lb, ub, obj, binary, A, sense, rhs, row_names,
                 index, instance, mode, big_ms, pairs):
        self.names = names
        self.lb = lb
        self.ub = ub
        self.obj = obj
        self.binary = binary
        self.A = A
        self.sense = sense
        self.rhs = rhs
        self.row_names = row_names
        self.index = index
        self.instance = instance
        self.mode = mode
        self.big_ms = big_ms
        self.pairs = pairs
        self._sparse_A = None

    @property
    def sparse_A(self):
        if self._sparse_A is None:
            self._sparse_A = sp.csc_matrix(self.A)
        return self._sparse_A

    @property
    def n_vars(self):
        return len(self.names)

    @property
    def n_rows(self):
        return len(self.row_names)

    @property
    def n_binaries(self):
        return int(self.binary.sum())

    def objective_value(self, values):
        return float(self.obj @ values)

    def row_activity(self, values):
        return self.sparse_A @ values


class _Builder(object):

    def __init__(self):
        self.names = []
        self.lb = []
        self.ub = []
        self.obj = []
        self.binary = []
        self.rows = []
        self.sense = []
        self.rhs = []
        self.row_names = []

    def var(self, name, lb=0.0, ub=np.inf, obj=0.0, binary=False):
        self.names.append(name)
        self.lb.append(lb)
        self.ub.append(1.0 if binary else ub)
        self.obj.append(obj)
        self.binary.append(binary)
        return len(self.names) - 1

    def row(self, name, coefs, sense, rhs):
        self.rows.append(coefs)
        self.sense.append(sense)
        self.rhs.append(rhs)
        self.row_names.append(name)
        return len(self.row_names) - 1

    def freeze(self, index, instance, mode, big_ms, pairs):
        A = np.zeros((len(self.rows), len(self.names)))
        for i, coefs in enumerate(self.rows):
            for j, a in coefs:
                A[i, j] += a
        return MilpModel(
            names=self.names,
            lb=np.asarray(self.lb, dtype=float),
            ub=np.asarray(self.ub, dtype=float),
            obj=np.asarray(self.obj, dtype=float),
            binary=np.asarray(self.binary, dtype=bool),
            A=A,
            sense=self.sense,
            rhs=np.asarray(self.rhs, dtype=float),
            row_names=self.row_names,
            index=index,
            instance=instance,
            mode=mode,
            big_ms=big_ms,
            pairs=pairs,
        )


def _build(instance, competitive, big_m_scale=1.0):
    violations = validate(instance)
    if violations:
        raise BuildError("Cannot build a model for an invalid instance: " +
                         "; ".join("{} {}".format(v.job, v.rule) for v in violations))
    H = instance.horizon
    p_max = instance.p_max
    p_bar = instance.p_bar if competitive else None
    big_ms = compute_big_ms(instance, big_m_scale)
    b = _Builder()
    index = {'p': [], 'gamma': None, 'x': {}, 'w': {}, 'v': {}, 'psi': {}, 'xi': {}, 'eps': {},
             'x_bar': {}, 'psi_bar': {}}
    pairs = []

    index['p'] = [b.var("p_h{}".format(h), 0.0, float(p_max[h])) for h in range(H)]
    index['gamma'] = b.var("gamma", 0.0, np.inf, obj=-instance.kappa)

    jobs = instance.jobs()
    for j, (job, lam) in enumerate(jobs):
        c = window_costs(job, lam)
        for k, h in enumerate(job.slots):
            key = (job.key, h)
            index['x'][key] = b.var("x_j{}_h{}".format(j, h), 0.0, job.power_cap, obj=-c[k])
            index['w'][key] = b.var("w_j{}_h{}".format(j, h), 0.0, np.inf, obj=-job.power_cap)
            if competitive:
                index['x_bar'][key] = b.var("xbar_j{}_h{}".format(j, h), 0.0, job.power_cap,
                                            obj=-(p_bar[h] + c[k]))
        index['v'][job.key] = b.var("v_j{}".format(j), 0.0, np.inf, obj=job.demand)
        for h in job.slots:
            key = (job.key, h)
            index['psi'][key] = b.var("psi_j{}_h{}".format(j, h), binary=True)
            index['xi'][key] = b.var("xi_j{}_h{}".format(j, h), binary=True)
            if competitive:
                index['psi_bar'][key] = b.var("psibar_j{}_h{}".format(j, h), binary=True)
        index['eps'][job.key] = b.var("eps_j{}".format(j), binary=True)

    gamma = index['gamma']
    # peak load
    for h in range(H):
        coefs = [(gamma, 1.0)]
        for job, _ in jobs:
            if job.tw_begin <= h <= job.tw_end:
                coefs.append((index['x'][(job.key, h)], -1.0))
        b.row("peak_h{}".format(h), coefs, GE, 0.0)

    for j, (job, lam) in enumerate(jobs):
        c = window_costs(job, lam)
        m = big_ms[job.key]
        v = index['v'][job.key]
        eps = index['eps'][job.key]
        supply = []
        for h in job.slots:
            supply.append((index['x'][(job.key, h)], 1.0))
            if competitive:
                supply.append((index['x_bar'][(job.key, h)], 1.0))

        # lower-level primal
        for h in job.slots:
            coefs = [(index['x'][(job.key, h)], 1.0)]
            if competitive:
                coefs.append((index['x_bar'][(job.key, h)], 1.0))
            b.row("cap_j{}_h{}".format(j, h), coefs, LE, job.power_cap)
        b.row("demand_j{}".format(j), supply, GE, job.demand)

        # lower-level dual
        for k, h in enumerate(job.slots):
            w = index['w'][(job.key, h)]
            b.row("dual_j{}_h{}".format(j, h), [(w, -1.0), (v, 1.0), (index['p'][h], -1.0)], LE, c[k])
            if competitive:
                b.row("dualbar_j{}_h{}".format(j, h), [(w, -1.0), (v, 1.0)], LE, c[k] + p_bar[h])

        # w * (beta - x - x_bar) = 0
        for h in job.slots:
            key = (job.key, h)
            xi = index['xi'][key]
            coefs = [(index['x'][key], -1.0), (xi, m.m3)]
            if competitive:
                coefs.append((index['x_bar'][key], -1.0))
            r1 = b.row("xi_cap_j{}_h{}".format(j, h), coefs, LE, m.m3 - job.power_cap)
            r2 = b.row("xi_w_j{}_h{}".format(j, h), [(index['w'][key], 1.0), (xi, -m.m3)], LE, 0.0)
            pairs.append((xi, (r1, r2)))

        # v * (sum supply - E) = 0
        r1 = b.row("eps_demand_j{}".format(j), supply + [(eps, m.m2)], LE, m.m2 + job.demand)
        r2 = b.row("eps_v_j{}".format(j), [(v, 1.0), (eps, -m.m2)], LE, 0.0)
        pairs.append((eps, (r1, r2)))

        # x * (p + C + w - v) = 0
        for k, h in enumerate(job.slots):
            key = (job.key, h)
            psi = index['psi'][key]
            w = index['w'][key]
            r1 = b.row("psi_slack_j{}_h{}".format(j, h),
                       [(w, 1.0), (v, -1.0), (index['p'][h], 1.0), (psi, m.m1)], LE, m.m1 - c[k])
            r2 = b.row("psi_x_j{}_h{}".format(j, h), [(index['x'][key], 1.0), (psi, -m.m1)], LE, 0.0)
            pairs.append((psi, (r1, r2)))
            if competitive:
                psi_bar = index['psi_bar'][key]
                r1 = b.row("psibar_slack_j{}_h{}".format(j, h),
                           [(w, 1.0), (v, -1.0), (psi_bar, m.m1)], LE, m.m1 - c[k] - p_bar[h])
                r2 = b.row("psibar_x_j{}_h{}".format(j, h),
                           [(index['x_bar'][key], 1.0), (psi_bar, -m.m1)], LE, 0.0)
                pairs.append((psi_bar, (r1, r2)))

    mode = constant.CP if competitive else constant.MP
    return b.freeze(index, instance, mode, big_ms, pairs)


def build_mp_mip(instance, big_m_scale=1.0):
    if instance.is_competitive:
        raise ModeError("monopoly model requested for an instance with competitor prices")
    return _build(instance, competitive=False, big_m_scale=big_m_scale)


def build_cp_mip(instance, big_m_scale=1.0):
    if not instance.is_competitive:
        raise ModeError("competitor prices required")
    return _build(instance, competitive=True, big_m_scale=big_m_scale)


def build_mip(instance, big_m_scale=1.0):
    return _build(instance, competitive=instance.is_competitive, big_m_scale=big_m_scale)


def expected_size(instance):
    """ Closed-form (variables, binaries, rows) of the model built for `instance`. """
    H = instance.horizon
    J = len(instance.jobs())
    S = sum(job.n_slots for job, _ in instance.jobs())
    if instance.is_competitive:
        return H + 1 + 6 * S + 2 * J, 3 * S + J, H + 9 * S + 3 * J
    return H + 1 + 4 * S + 2 * J, 2 * S + J, H + 6 * S + 3 * J


def split_values(model, values):
    """ Map a column assignment back to prices, schedule, duals and gamma. """
    instance = model.instance
    values = np.asarray(values, dtype=float)
    prices = PriceVector(values[model.index['p']])
    competitive = model.mode == constant.CP
    schedule = Schedule(x={}, x_bar={} if competitive else None)
    w, v = {}, {}
    for job, _ in instance.jobs():
        schedule.x[job.key] = np.array([values[model.index['x'][(job.key, h)]] for h in job.slots])
        w[job.key] = np.array([values[model.index['w'][(job.key, h)]] for h in job.slots])
        v[job.key] = float(values[model.index['v'][job.key]])
        if competitive:
            schedule.x_bar[job.key] = np.array([values[model.index['x_bar'][(job.key, h)]] for h in job.slots])
    return prices, schedule, DualSolution(w=w, v=v), float(values[model.index['gamma']])


def row_residuals(model, values):
    activity = model.row_activity(values)
    out = np.zeros(model.n_rows)
    for i, s in enumerate(model.sense):
        if s == LE:
            out[i] = max(0.0, activity[i] - model.rhs[i])
        elif s == GE:
            out[i] = max(0.0, model.rhs[i] - activity[i])
        else:
            out[i] = abs(activity[i] - model.rhs[i])
    return out


def strong_duality_gap(instance, prices, schedule, duals, gamma):
    """
    |linearized leader objective - (revenue - kappa * gamma)| for a point
    carrying lower-level duals.
    """
    p = np.asarray(prices.p, dtype=float)
    p_bar = instance.p_bar
    linear = -instance.kappa * gamma
    revenue = 0.0
    for job, lam in instance.jobs():
        window = slice(job.tw_begin, job.tw_end + 1)
        c = window_costs(job, lam)
        x = schedule.x[job.key]
        linear += -job.power_cap * float(duals.w[job.key].sum()) + job.demand * duals.v[job.key]
        linear -= float(c @ x)
        if schedule.x_bar is not None:
            linear -= float((p_bar[window] + c) @ schedule.x_bar[job.key])
        revenue += float(p[window] @ x)
    return abs(linear - (revenue - instance.kappa * gamma))


def extract_solution(model, values):
    """
    Domain view of a solver assignment: (prices, schedule, duals, gamma).
    Raises ExtractionError when the assignment leaves the tolerances.
    """
    values = np.asarray(values, dtype=float)
    residual = row_residuals(model, values) / (1.0 + np.abs(model.rhs))
    bounds = np.maximum(model.lb - values, 0.0) + np.maximum(values - model.ub, 0.0)
    if residual.size and residual.max() > constant.PRIMAL_TOL:
        i = int(np.argmax(residual))
        raise ExtractionError(model.row_names[i], float(residual[i]))
    if bounds.size and bounds.max() > constant.PRIMAL_TOL:
        i = int(np.argmax(bounds))
        raise ExtractionError(model.names[i], float(bounds[i]))

    prices, schedule, duals, gamma = split_values(model, values)
    instance = model.instance
    prices = PriceVector(np.clip(prices.p, 0.0, instance.p_max))
    for supply in (schedule.x, schedule.x_bar or {}):
        for key in supply:
            supply[key] = np.maximum(supply[key], 0.0)
    for key in duals.w:
        duals.w[key] = np.maximum(duals.w[key], 0.0)
        duals.v[key] = max(duals.v[key], 0.0)

    worst, label = kkt_residual(instance, prices, schedule, duals)
    if worst > constant.COMPLEMENTARITY_TOL:
        raise ExtractionError(label, worst)

    peak = float(schedule.leader_load(instance).max(initial=0.0))
    if instance.kappa == 0 and gamma > peak:
        # gamma carries no cost, any value above the peak is optimal
        gamma = peak
    if abs(gamma - peak) > constant.GAMMA_TOL:
        raise ExtractionError("gamma vs peak load", abs(gamma - peak))
    return prices, schedule, duals, peak


def seed_point(model, prices, solution, duals):
    """
    Complete MIP assignment for a follower response: prices, supply,
    duals, gamma at the peak and binaries matching the active sides of
    every complementarity pair. A slot whose reduced cost is zero gets
    psi = 1 even when empty, so fixing the binaries leaves the load free
    to move among tied slots.
    """
    instance = model.instance
    values = np.zeros(model.n_vars)
    values[model.index['p']] = prices.p
    schedule = solution.schedule
    values[model.index['gamma']] = float(schedule.leader_load(instance).max(initial=0.0))
    tol = constant.PRIMAL_TOL
    for job, lam in instance.jobs():
        c = window_costs(job, lam)
        window = slice(job.tw_begin, job.tw_end + 1)
        v = duals.v[job.key]
        slack = prices.p[window] + c + duals.w[job.key] - v
        x = schedule.x[job.key]
        x_bar = schedule.x_bar[job.key] if schedule.x_bar is not None else np.zeros_like(x)
        values[model.index['v'][job.key]] = duals.v[job.key]
        total = x + x_bar
        values[model.index['eps'][job.key]] = 1.0 if total.sum() <= job.demand + tol else 0.0
        for k, h in enumerate(job.slots):
            key = (job.key, h)
            values[model.index['x'][key]] = x[k]
            values[model.index['w'][key]] = duals.w[job.key][k]
            values[model.index['psi'][key]] = 1.0 if x[k] > tol or abs(slack[k]) <= tol else 0.0
            values[model.index['xi'][key]] = 1.0 if total[k] >= job.power_cap - tol else 0.0
            if model.mode == constant.CP:
                values[model.index['x_bar'][key]] = x_bar[k]
                slack_bar = instance.p_bar[h] + c[k] + duals.w[job.key][k] - v
                values[model.index['psi_bar'][key]] = 1.0 if x_bar[k] > tol or abs(slack_bar) <= tol else 0.0
    return values


def bilevel_check(model):
    """
    Incumbent filter: the schedule of an integer point must be an optimal
    follower response to its prices.
    """
    instance = model.instance

    def check(values):
        prices, schedule, _, _ = split_values(model, values)
        prices = PriceVector(np.clip(prices.p, 0.0, instance.p_max))
        best = best_response(instance, prices).objective
        actual = follower_objective(instance, prices, schedule)
        return abs(actual - best) <= constant.OBJECTIVE_TOL * max(1.0, abs(best))

    return check


def _format_terms(names, coefs):
    terms = []
    for name, a in zip(names, coefs):
        if a == 0:
            continue
        sign = '-' if a < 0 else '+'
        terms.append("{} {} {}".format(sign, repr(abs(float(a))), name))
    if not terms:
        return "0 {}".format(names[0]) if names else "0"
    text = " ".join(terms)
    return text[2:] if text.startswith('+ ') else text


def write_lp(model, filename):
    """
    Export in CPLEX LP text format: Maximize, Subject To, Bounds, Binaries, End.
    Row and column names are the builder's.
    """
    lines = ["\\ {} pricing model, {} columns, {} rows".format(model.mode, model.n_vars, model.n_rows),
             "Maximize"]
    nz = np.flatnonzero(model.obj)
    lines.append(" obj: " + _format_terms([model.names[j] for j in nz], model.obj[nz]))
    lines.append("Subject To")
    for i in range(model.n_rows):
        cols = np.flatnonzero(model.A[i])
        lines.append(" {}: {} {} {}".format(
            model.row_names[i], _format_terms([model.names[j] for j in cols], model.A[i, cols]),
            model.sense[i], repr(float(model.rhs[i]))))
    lines.append("Bounds")
    for j in range(model.n_vars):
        if model.binary[j]:
            continue
        if np.isinf(model.ub[j]):
            lines.append(" {} >= {}".format(model.names[j], repr(float(model.lb[j]))))
        else:
            lines.append(" {} <= {} <= {}".format(repr(float(model.lb[j])), model.names[j], repr(float(model.ub[j]))))
    lines.append("Binaries")
    for j in np.flatnonzero(model.binary):
        lines.append(" {}".format(model.names[j]))
    lines.append("End")
    with open(filename, 'w') as out:
        out.write("\n".join(lines) + "\n")
    return filename
