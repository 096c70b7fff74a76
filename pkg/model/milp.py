"""
MILP engine: bounded-variable revised simplex LP core and branch-and-bound
on binary columns.

The LP works on the columns [A | slacks | artificials]. The basis is kept
as a sparse LU factor, updated in product form between refactorizations.
The root is solved with a two-phase primal simplex; child nodes restart
from the parent's final basis, where a bound change keeps dual
feasibility, and are re-optimized with the dual simplex.
"""

import heapq
import math
import time
from dataclasses import dataclass, field
from datetime import datetime
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from model.errors import ConfigError, NumericalError
from utils import constant
from utils.helper import FileLogger

LE, GE, EQ = '<=', '>=', '='

LP_OPTIMAL = 'optimal'
LP_INFEASIBLE = 'infeasible'
LP_UNBOUNDED = 'unbounded'

DEGENERATE_BEFORE_BLAND = 50
REFACTOR_EVERY = 64
PLUNGE_EVERY = 25


class _Timeout(Exception):
    pass


@dataclass
class SolverLimits:
    time_limit: float = constant.DESK_TIME_LIMIT
    gap_tolerance: float = constant.OPTIMALITY_GAP
    node_limit: Optional[int] = None
    log_step: int = 100
    verbose: bool = True
    log_file: Optional[str] = None

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ConfigError('time_limit', "must be positive, got {}".format(self.time_limit))
        if not self.gap_tolerance > 0:
            raise ConfigError('gap_tolerance', "must be positive, got {}".format(self.gap_tolerance))
        if self.node_limit is not None and self.node_limit <= 0:
            raise ConfigError('node_limit', "must be positive, got {}".format(self.node_limit))
        if self.log_step <= 0:
            raise ConfigError('log_step', "must be positive, got {}".format(self.log_step))


@dataclass
class SolveStats:
    nodes: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0
    incumbents: int = 0
    rejected: int = 0
    seeded: bool = False
    incumbent_history: List[float] = field(default_factory=list)
    bound_history: List[float] = field(default_factory=list)


@dataclass
class SolveResult:
    status: str
    values: Optional[np.ndarray]
    objective: Optional[float]
    best_bound: float
    gap: float
    stats: SolveStats

    @property
    def has_incumbent(self):
        return self.values is not None


@dataclass
class LpResult:
    status: str
    x: Optional[np.ndarray]
    objective: Optional[float]
    duals: Optional[np.ndarray]
    iterations: int
    basis: Optional[Tuple[np.ndarray, np.ndarray]] = None


class _RevisedSimplex(object):
    """
    Bounded-variable revised simplex for min cost @ z over A z = b,
    lb <= z <= ub, where z stacks structurals, one slack per inequality
    row and one artificial per row. Columns of B^-1 A are formed on demand
    from the LU factor of the basis and the eta file of later pivots.
    """

    def __init__(self, A, sense, rhs, lb, ub, deadline=None):
        m, n = A.shape
        slack_rows = np.array([i for i in range(m) if sense[i] != EQ], dtype=int)
        n_slack = len(slack_rows)
        self.m, self.n = m, n
        self.N = n + n_slack + m
        signs = np.array([1.0 if sense[i] == LE else -1.0 for i in slack_rows])
        slacks = sp.csc_matrix((signs, (slack_rows, np.arange(n_slack))), shape=(m, n_slack))
        self.structural = sp.hstack([sp.csc_matrix(A), slacks], format='csc')
        self.slack_col = -np.ones(m, dtype=int)
        self.slack_col[slack_rows] = n + np.arange(n_slack)
        self.slack_sign = np.zeros(m)
        self.slack_sign[slack_rows] = signs
        self.art = n + n_slack + np.arange(m)
        self._set_art_signs(np.ones(m))
        self.b = np.asarray(rhs, dtype=float)
        self.lb = np.concatenate([lb, np.zeros(n_slack + m)])
        self.ub = np.concatenate([ub, np.full(n_slack, np.inf), np.zeros(m)])
        self.deadline = deadline
        self.iterations = 0
        self.bland = False
        self.degenerate = 0

    # basis handling

    def _set_art_signs(self, signs):
        self.art_sign = signs
        self.full = sp.hstack([self.structural, sp.diags(signs, format='csc')], format='csc')
        self.full_t = self.full.T.tocsr()

    def _column(self, j):
        a = np.zeros(self.m)
        start, end = self.full.indptr[j], self.full.indptr[j + 1]
        a[self.full.indices[start:end]] = self.full.data[start:end]
        return a

    def _condition(self):
        return float(np.linalg.cond(self.full[:, self.basis].toarray()))

    def _factor(self):
        try:
            self.lu = splu(self.full[:, self.basis].tocsc())
        except RuntimeError:
            raise NumericalError("singular basis", condition=self._condition())
        self.etas = []

    def _ftran(self, a):
        """ B^-1 a """
        y = self.lu.solve(a)
        for r, alpha in self.etas:
            t = y[r] / alpha[r]
            y -= t * alpha
            y[r] = t
        return y

    def _btran(self, c):
        """ B^-T c """
        z = np.array(c, dtype=float)
        for r, alpha in reversed(self.etas):
            z[r] = (z[r] - (z @ alpha - z[r] * alpha[r])) / alpha[r]
        return self.lu.solve(z, trans='T')

    def _nonbasic_values(self):
        values = np.where(self.at_upper, self.ub, self.lb)
        values[self.is_basic] = 0.0
        return values

    def _recompute_beta(self):
        self.beta = self._ftran(self.b - self.full @ self._nonbasic_values())
        if not np.all(np.isfinite(self.beta)):
            raise NumericalError("basic solution is not finite", condition=self._condition())

    def start_slack_basis(self):
        """ Initial basis of slacks and artificials, structurals at their lower bounds. """
        m = self.m
        self.at_upper = np.zeros(self.N, dtype=bool)
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.basis = np.zeros(m, dtype=int)
        residual = self.b - self.structural[:, :self.n] @ self.lb[:self.n]
        signs = np.ones(m)
        self.artificial_used = np.zeros(m, dtype=bool)
        for i in range(m):
            s = self.slack_col[i]
            if s >= 0 and residual[i] * self.slack_sign[i] >= 0:
                self.basis[i] = s
            else:
                signs[i] = 1.0 if residual[i] >= 0 else -1.0
                self.basis[i] = self.art[i]
                self.artificial_used[i] = True
        self._set_art_signs(signs)
        self.ub[self.art] = np.where(self.artificial_used, np.inf, 0.0)
        self.is_basic[self.basis] = True
        self._factor()
        self._recompute_beta()

    def start_from_basis(self, basis, at_upper):
        self.basis = np.array(basis, dtype=int)
        self.at_upper = np.array(at_upper, dtype=bool)
        self.at_upper &= np.isfinite(self.ub)
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.is_basic[self.basis] = True
        self.at_upper[self.is_basic] = False
        self._factor()
        self._recompute_beta()

    def snapshot(self):
        return self.basis.copy(), self.at_upper.copy()

    # pivoting

    def _pivot(self, r, j, col):
        self.etas.append((r, col))
        leaving = self.basis[r]
        self.is_basic[leaving] = False
        self.basis[r] = j
        self.is_basic[j] = True
        self.at_upper[j] = False

    def _reduced(self, cost):
        return cost - self.full_t @ self._btran(cost[self.basis])

    def _tick(self):
        self.iterations += 1
        if len(self.etas) >= REFACTOR_EVERY:
            self._factor()
            self._recompute_beta()
        if self.deadline is not None and self.iterations % 50 == 0 and time.time() > self.deadline:
            raise _Timeout()

    def _movable(self):
        return (~self.is_basic) & (self.ub - self.lb > constant.SIMPLEX_FEAS_TOL)

    def _degenerate_step(self, step, tol):
        if step <= tol:
            self.degenerate += 1
            if self.degenerate > DEGENERATE_BEFORE_BLAND:
                self.bland = True
        else:
            self.degenerate = 0
            self.bland = False

    def primal(self, cost, max_iter):
        """ Primal simplex from a primal feasible basis. Returns LP status. """
        tol = constant.SIMPLEX_OPT_TOL
        start = self.iterations
        while True:
            if self.iterations - start > max_iter:
                raise NumericalError("primal simplex iteration limit reached", condition=self._condition())
            d = self._reduced(cost)
            movable = self._movable()
            eligible = movable & (((~self.at_upper) & (d < -tol)) | (self.at_upper & (d > tol)))
            candidates = np.flatnonzero(eligible)
            if candidates.size == 0:
                return LP_OPTIMAL
            if self.bland:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmax(np.abs(d[candidates]))])
            sigma = -1.0 if self.at_upper[j] else 1.0
            col = self._ftran(self._column(j))
            alpha = sigma * col
            lbB = self.lb[self.basis]
            ubB = self.ub[self.basis]
            ratios = np.full(self.m, np.inf)
            to_upper = np.zeros(self.m, dtype=bool)
            dec = alpha > constant.PIVOT_TOL
            inc = (alpha < -constant.PIVOT_TOL) & np.isfinite(ubB)
            ratios[dec] = (self.beta[dec] - lbB[dec]) / alpha[dec]
            ratios[inc] = (ubB[inc] - self.beta[inc]) / (-alpha[inc])
            to_upper[inc] = True
            ratios = np.maximum(ratios, 0.0)
            t_flip = self.ub[j] - self.lb[j]
            t_min = ratios.min() if self.m else np.inf
            if not np.isfinite(t_min) and not np.isfinite(t_flip):
                return LP_UNBOUNDED
            if t_flip <= t_min:
                self.beta -= sigma * t_flip * col
                self.at_upper[j] = not self.at_upper[j]
                step = t_flip
            else:
                ties = np.flatnonzero(ratios <= t_min + constant.SIMPLEX_FEAS_TOL)
                if self.bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(alpha[ties]))])
                leaving = self.basis[r]
                entering_value = (self.ub[j] if self.at_upper[j] else self.lb[j]) + sigma * t_min
                self.beta -= sigma * t_min * col
                self._pivot(r, j, col)
                self.at_upper[leaving] = bool(to_upper[r])
                self.beta[r] = entering_value
                step = t_min
            self._degenerate_step(step, constant.SIMPLEX_FEAS_TOL)
            self._tick()

    def dual(self, cost, max_iter):
        """ Dual simplex from a dual feasible basis. Returns LP status. """
        tol = constant.SIMPLEX_FEAS_TOL
        start = self.iterations
        unit = np.zeros(self.m)
        while True:
            if self.iterations - start > max_iter:
                raise NumericalError("dual simplex iteration limit reached", condition=self._condition())
            lbB = self.lb[self.basis]
            ubB = self.ub[self.basis]
            below = lbB - self.beta
            above = self.beta - ubB
            infeasibility = np.maximum(below, above)
            rows = np.flatnonzero(infeasibility > tol * (1.0 + np.abs(self.beta)))
            if rows.size == 0:
                return LP_OPTIMAL
            if self.bland:
                r = int(rows[np.argmin(self.basis[rows])])
            else:
                r = int(rows[np.argmax(infeasibility[rows])])
            unit[r] = 1.0
            row = self.full_t @ self._btran(unit)
            unit[r] = 0.0
            movable = self._movable()
            if below[r] > above[r]:
                target = lbB[r]
                eligible = movable & (((~self.at_upper) & (row < -constant.PIVOT_TOL)) |
                                      (self.at_upper & (row > constant.PIVOT_TOL)))
            else:
                target = ubB[r]
                eligible = movable & (((~self.at_upper) & (row > constant.PIVOT_TOL)) |
                                      (self.at_upper & (row < -constant.PIVOT_TOL)))
            candidates = np.flatnonzero(eligible)
            if candidates.size == 0:
                return LP_INFEASIBLE
            d = self._reduced(cost)
            ratios = np.abs(d[candidates]) / np.abs(row[candidates])
            best = ratios.min()
            ties = candidates[ratios <= best + constant.SIMPLEX_OPT_TOL]
            if self.bland:
                j = int(ties[0])
            else:
                j = int(ties[np.argmax(np.abs(row[ties]))])
            col = self._ftran(self._column(j))
            delta = (self.beta[r] - target) / col[r]
            entering_value = (self.ub[j] if self.at_upper[j] else self.lb[j]) + delta
            leaving = self.basis[r]
            self.beta -= delta * col
            self._pivot(r, j, col)
            self.at_upper[leaving] = bool(target == self.ub[leaving] and np.isfinite(target)
                                          and target != self.lb[leaving])
            self.beta[r] = entering_value
            self._degenerate_step(abs(delta), tol)
            self._tick()

    def dual_feasible(self, cost):
        d = self._reduced(cost)
        movable = self._movable()
        tol = constant.SIMPLEX_OPT_TOL * 10
        bad = movable & (((~self.at_upper) & (d < -tol)) | (self.at_upper & (d > tol)))
        return not bad.any()

    def duals(self, cost):
        return -self._btran(cost[self.basis])

    def structural_values(self):
        values = self._nonbasic_values()
        values[self.basis] = self.beta
        return values[:self.n].copy()


def _box_solve(c, lb, ub):
    """ LP without rows: every column sits at its better bound. """
    if np.any(lb > ub + constant.SIMPLEX_FEAS_TOL):
        return LpResult(LP_INFEASIBLE, None, None, None, 0)
    if np.any((c > 0) & ~np.isfinite(ub)):
        return LpResult(LP_UNBOUNDED, None, None, None, 0)
    x = np.where(c > 0, ub, lb)
    return LpResult(LP_OPTIMAL, x, float(c @ x), np.zeros(0), 0)


def lp_solve(model, lb=None, ub=None, warm=None, deadline=None):
    """
    Maximize the LP relaxation of `model` under column bounds lb/ub
    (defaults: the model's). `warm` is a basis snapshot from an earlier
    solve of the same model under looser bounds.
    """
    lb = model.lb if lb is None else lb
    ub = model.ub if ub is None else ub
    c = np.asarray(model.obj, dtype=float)
    A = model.sparse_A
    m, n = A.shape
    if np.any(lb > ub + constant.SIMPLEX_FEAS_TOL):
        return LpResult(LP_INFEASIBLE, None, None, None, 0)
    if m == 0:
        return _box_solve(c, lb, ub)

    max_iter = 20 * (m + n) + 1000
    lp = _RevisedSimplex(A, model.sense, model.rhs, lb, ub, deadline=deadline)
    cost = np.concatenate([-c, np.zeros(lp.N - n)])
    status = None
    if warm is not None:
        try:
            lp.start_from_basis(*warm)
            if lp.dual_feasible(cost):
                status = lp.dual(cost, max_iter)
                if status == LP_OPTIMAL:
                    status = lp.primal(cost, max_iter)
        except NumericalError:
            status = None
        if status is None:
            lp = _RevisedSimplex(A, model.sense, model.rhs, lb, ub, deadline=deadline)
    if status is None:
        lp.start_slack_basis()
        phase_one = np.zeros(lp.N)
        phase_one[lp.art] = 1.0
        lp.primal(phase_one, max_iter)
        lp._factor()
        lp._recompute_beta()
        infeasibility = float(lp._nonbasic_values()[lp.art].sum() +
                              lp.beta[np.isin(lp.basis, lp.art)].sum())
        if infeasibility > 1e-7 * (1.0 + np.abs(model.rhs).max()):
            return LpResult(LP_INFEASIBLE, None, None, None, lp.iterations)
        lp.ub[lp.art] = 0.0
        lp.bland = False
        lp.degenerate = 0
        status = lp.primal(cost, max_iter)

    if status != LP_OPTIMAL:
        return LpResult(status, None, None, None, lp.iterations)
    lp._factor()
    lp._recompute_beta()
    x = lp.structural_values()
    violation = np.maximum(lb - x, 0.0) + np.maximum(x - ub, 0.0)
    if violation.max(initial=0.0) > constant.PRIMAL_TOL:
        raise NumericalError("basic solution leaves its bounds by {:.3e}".format(violation.max()),
                             condition=lp._condition())
    x = np.clip(x, lb, ub)
    return LpResult(LP_OPTIMAL, x, float(c @ x), lp.duals(cost), lp.iterations, basis=lp.snapshot())


def point_residual(model, values):
    """ Worst bound, row and integrality violation of a full assignment. """
    values = np.asarray(values, dtype=float)
    bounds = np.maximum(model.lb - values, 0.0) + np.maximum(values - model.ub, 0.0)
    activity = model.sparse_A @ values
    scale = 1.0 + np.abs(model.rhs)
    rows = np.zeros(model.n_rows)
    for i, s in enumerate(model.sense):
        if s == LE:
            rows[i] = max(0.0, activity[i] - model.rhs[i]) / scale[i]
        elif s == GE:
            rows[i] = max(0.0, model.rhs[i] - activity[i]) / scale[i]
        else:
            rows[i] = abs(activity[i] - model.rhs[i]) / scale[i]
    binaries = values[model.binary]
    integrality = np.abs(binaries - np.round(binaries))
    return max(bounds.max(initial=0.0), rows.max(initial=0.0), integrality.max(initial=0.0))


def complementarity_residual(model, values):
    """ Worst violation over the rows of the big-M complementarity pairs. """
    values = np.asarray(values, dtype=float)
    activity = model.sparse_A @ values
    worst = 0.0
    for binary, rows in model.pairs:
        worst = max(worst, abs(values[binary] - round(values[binary])))
        for i in rows:
            worst = max(worst, activity[i] - model.rhs[i])
    return worst


def warm_start(model, values, incumbent_check=None):
    """
    Validate a seed assignment. Returns (values, objective) or None when
    the seed leaves the tolerances or fails the incumbent check.
    """
    values = np.asarray(values, dtype=float).copy()
    if values.shape != (model.n_vars,):
        return None
    if complementarity_residual(model, values) > constant.COMPLEMENTARITY_TOL:
        return None
    if point_residual(model, values) > constant.PRIMAL_TOL:
        return None
    values[model.binary] = np.round(values[model.binary])
    if incumbent_check is not None and not incumbent_check(values):
        return None
    return values, model.objective_value(values)


def polish(model, values, deadline=None):
    """
    Fix the binaries of `values` and re-optimize the continuous columns.
    Returns the polished assignment, or None when the pattern is infeasible.
    """
    cols = np.flatnonzero(model.binary)
    lb, ub = model.lb.copy(), model.ub.copy()
    lb[cols] = ub[cols] = np.round(np.asarray(values, dtype=float)[cols])
    lp = lp_solve(model, lb, ub, deadline=deadline)
    if lp.status != LP_OPTIMAL:
        return None
    x = lp.x.copy()
    x[cols] = np.round(x[cols])
    return x


def _seed_list(seed):
    if seed is None:
        return []
    if np.ndim(seed) == 1:
        return [seed]
    return list(seed)


@dataclass(order=True)
class _Node:
    priority: float
    seq: int
    bound: float = field(compare=False)
    depth: int = field(compare=False)
    fixings: Tuple[Tuple[int, float], ...] = field(compare=False, default=())
    warm: Optional[Tuple[np.ndarray, np.ndarray]] = field(compare=False, default=None)


def _gap(bound, incumbent):
    if incumbent is None or not math.isfinite(bound):
        return math.inf
    return max(0.0, bound - incumbent) / max(1.0, abs(incumbent))


def solve(model, limits=None, seed=None, incumbent_check=None):
    """
    Branch-and-bound on the binary columns of `model` (maximize).

    Depth-first dive until the tree finds an integer point of its own,
    then best-bound selection with a plunge to a leaf every PLUNGE_EVERY
    nodes. Branching on the most fractional binary, lowest index on ties.
    `seed` is a full assignment, or a list of them, polished and used as
    starting incumbents; `incumbent_check` filters integer points before
    they are accepted.
    """
    limits = limits or SolverLimits()
    start = time.time()
    deadline = start + limits.time_limit
    stats = SolveStats()
    logger = None
    if limits.log_file is not None:
        logger = FileLogger(limits.log_file, header="# node\topen\tbound\tincumbent\tgap")
    format_str = '{}: node {}, open {}, bound {:.6f}, incumbent {:.6f}, gap {:.4%}'

    incumbent, inc_obj = None, None

    def offer(values):
        nonlocal incumbent, inc_obj
        checked = warm_start(model, values, incumbent_check)
        if checked is None:
            return False
        if inc_obj is None or checked[1] > inc_obj + 1e-9 * max(1.0, abs(inc_obj)):
            incumbent, inc_obj = checked
            stats.incumbent_history.append(inc_obj)
        return True

    for values in _seed_list(seed):
        accepted = offer(values)
        try:
            polished = polish(model, values, deadline=deadline)
        except (_Timeout, NumericalError):
            polished = None
        if polished is not None:
            accepted = offer(polished) or accepted
        stats.seeded = stats.seeded or accepted

    binary_cols = np.flatnonzero(model.binary)
    heap = []
    stack = [_Node(priority=-math.inf, seq=0, bound=math.inf, depth=0)]
    seq = 0
    found = False
    plunging = False
    popped = 0
    floor = -math.inf
    best_bound = math.inf
    status = None

    def prune_limit():
        if inc_obj is None:
            return -math.inf
        return inc_obj + max(constant.OPTIMALITY_GAP, limits.gap_tolerance) * max(1.0, abs(inc_obj)) * 0.5

    def current_bound(extra=-math.inf):
        bound = max([extra, floor] + [n.bound for n in stack])
        if heap:
            bound = max(bound, -heap[0].priority)
        if inc_obj is not None:
            bound = max(bound, inc_obj)
        return bound

    def log(open_nodes, bound):
        if stats.nodes % limits.log_step != 0:
            return
        inc = inc_obj if inc_obj is not None else -math.inf
        gap = _gap(bound, inc_obj)
        if limits.verbose:
            print(format_str.format(datetime.now(), stats.nodes, open_nodes, bound, inc, gap))
        if logger is not None:
            logger.log("{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}".format(stats.nodes, open_nodes, bound, inc, gap))

    while True:
        if stack:
            node = stack.pop()
        elif heap:
            node = heapq.heappop(heap)
            popped += 1
            plunging = found and popped % PLUNGE_EVERY == 0
        else:
            break
        if node.bound <= prune_limit():
            continue

        bound_now = current_bound(node.bound)
        if bound_now < best_bound:
            best_bound = bound_now
        stats.bound_history.append(best_bound)
        gap = _gap(best_bound, inc_obj)
        if gap <= constant.OPTIMALITY_GAP:
            heapq.heappush(heap, node)
            status = constant.OPTIMAL
            break
        if gap <= limits.gap_tolerance:
            heapq.heappush(heap, node)
            status = constant.GAP_LIMIT
            break
        if time.time() > deadline or (limits.node_limit is not None and stats.nodes >= limits.node_limit):
            heapq.heappush(heap, node)
            status = constant.TIME_LIMIT
            break

        lb = model.lb.copy()
        ub = model.ub.copy()
        for col, val in node.fixings:
            lb[col] = ub[col] = val
        try:
            lp = lp_solve(model, lb, ub, warm=node.warm, deadline=deadline)
        except _Timeout:
            heapq.heappush(heap, node)
            status = constant.TIME_LIMIT
            break
        stats.nodes += 1
        stats.lp_iterations += lp.iterations
        log(len(heap) + len(stack), best_bound)
        if lp.status != LP_OPTIMAL or lp.objective <= prune_limit():
            continue

        x = lp.x
        frac = np.abs(x[binary_cols] - np.round(x[binary_cols]))
        branch_col = None
        if frac.max(initial=0.0) <= constant.INTEGRALITY_TOL:
            candidate = x.copy()
            if frac.max(initial=0.0) > 0.0:
                lb_fix, ub_fix = lb.copy(), ub.copy()
                lb_fix[binary_cols] = ub_fix[binary_cols] = np.round(x[binary_cols])
                try:
                    polished = lp_solve(model, lb_fix, ub_fix, warm=lp.basis, deadline=deadline)
                except _Timeout:
                    status = constant.TIME_LIMIT
                    break
                stats.lp_iterations += polished.iterations
                if polished.status == LP_OPTIMAL:
                    candidate = polished.x
                else:
                    branch_col = int(binary_cols[np.argmax(frac)])
            if branch_col is None:
                candidate[binary_cols] = np.round(candidate[binary_cols])
                value = model.objective_value(candidate)
                if incumbent_check is not None and not incumbent_check(candidate):
                    stats.rejected += 1
                    floor = max(floor, lp.objective)
                    continue
                if inc_obj is None or value > inc_obj + 1e-9 * max(1.0, abs(inc_obj)):
                    incumbent, inc_obj = candidate, value
                    stats.incumbents += 1
                    stats.incumbent_history.append(inc_obj)
                if not found:
                    found = True
                    for open_node in stack:
                        heapq.heappush(heap, open_node)
                    stack.clear()
                continue
        else:
            distance = np.abs(x[binary_cols] - 0.5)
            distance[frac <= constant.INTEGRALITY_TOL] = np.inf
            branch_col = int(binary_cols[np.argmin(distance)])

        children = []
        for val in (0.0, 1.0):
            seq += 1
            children.append(_Node(priority=-lp.objective, seq=seq, bound=lp.objective, depth=node.depth + 1,
                                  fixings=node.fixings + ((branch_col, val),), warm=lp.basis))
        up_first = x[branch_col] >= 0.5
        first, second = (children[1], children[0]) if up_first else (children[0], children[1])
        if not found:
            stack.append(second)
            stack.append(first)
        elif plunging:
            stack.append(first)
            heapq.heappush(heap, second)
        else:
            heapq.heappush(heap, first)
            heapq.heappush(heap, second)

    if status is None:
        status = constant.OPTIMAL if incumbent is not None else constant.INFEASIBLE
        best_bound = inc_obj if inc_obj is not None else -math.inf
        if floor > best_bound:
            best_bound = floor
    else:
        best_bound = min(best_bound, current_bound())
    stats.bound_history.append(best_bound)
    gap = _gap(best_bound, inc_obj) if incumbent is not None else math.inf
    if status == constant.OPTIMAL and incumbent is not None and gap > constant.OPTIMALITY_GAP:
        # rejected integer points keep their LP bound open
        status = constant.GAP_LIMIT if gap <= limits.gap_tolerance else constant.TIME_LIMIT
    stats.wall_time = time.time() - start
    if limits.verbose:
        print("{}: {} after {} nodes, {} LP iterations, {:.2f} sec, objective {}, bound {:.6f}, gap {:.4%}".format(
            datetime.now(), status, stats.nodes, stats.lp_iterations, stats.wall_time,
            "{:.6f}".format(inc_obj) if inc_obj is not None else "none", best_bound,
            gap if math.isfinite(gap) else 0.0))
    return SolveResult(status=status, values=incumbent, objective=inc_obj, best_bound=best_bound,
                       gap=gap, stats=stats)
