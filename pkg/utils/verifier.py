"""
Independent checks of a result file: the reported schedule must be an
optimal follower response to the reported prices, and the reported peak
and metrics must match the schedule.
"""

from collections import namedtuple

from data.loader import duals_from_dict, instance_from_dict, prices_from_list, schedule_from_dict
from model.errors import PeakGridError
from model.follower import (best_response, dominance_violations, follower_duals, follower_objective,
                            kkt_residual)
from model.instance import schedule_violations
from model.reformulation import strong_duality_gap
from utils import constant
from utils.scorer import evaluate

Check = namedtuple('Check', ['name', 'passed', 'detail'])


class VerificationReport(object):

    def __init__(self, checks):
        self.checks = list(checks)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def summary(self):
        lines = []
        for c in self.checks:
            lines.append("{:<28} {}  {}".format(c.name, "ok" if c.passed else "FAIL", c.detail))
        return "\n".join(lines)


def _scale(value):
    return max(1.0, abs(value))


def verify_result(result):
    """ Run every check that applies to the result's model. """
    checks = []
    try:
        instance = instance_from_dict(result['instance'])
        prices = prices_from_list(result['prices'])
        schedule = schedule_from_dict(result['schedule'])
    except (KeyError, TypeError, ValueError, PeakGridError) as e:
        return VerificationReport([Check('result file', False, "unreadable: {}".format(e))])

    bad_prices = prices.violations(instance)
    checks.append(Check('price bounds', not bad_prices,
                        "; ".join(v.detail for v in bad_prices) or "all prices in [0, p_max]"))
    bad_schedule = schedule_violations(instance, schedule)
    checks.append(Check('schedule feasibility', not bad_schedule,
                        "; ".join("{} {}".format(v.job, v.rule) for v in bad_schedule) or "caps and demands met"))
    if bad_prices or bad_schedule:
        return VerificationReport(checks)

    peak = float(schedule.leader_load(instance).max(initial=0.0))
    reported_peak = float(result['peak'])
    checks.append(Check('peak load', abs(peak - reported_peak) <= constant.GAMMA_TOL,
                        "reported {:.6f}, max load {:.6f}".format(reported_peak, peak)))

    metrics = evaluate(instance, prices, schedule)
    reported = result['metrics']['net_revenue']
    checks.append(Check('net revenue', abs(metrics.net_revenue - reported) <= constant.OBJECTIVE_TOL * _scale(reported),
                        "reported {:.6f}, recomputed {:.6f}".format(reported, metrics.net_revenue)))

    if result['model'] == constant.BC:
        return VerificationReport(checks)

    response = best_response(instance, prices)
    actual = follower_objective(instance, prices, schedule)
    match = abs(actual - response.objective) <= constant.OBJECTIVE_TOL * _scale(response.objective)
    checks.append(Check('follower response mismatch' if not match else 'follower response', match,
                        "schedule costs {:.9f}, best response {:.9f}".format(actual, response.objective)))

    certificate = follower_duals(instance, prices, response)
    worst, label = kkt_residual(instance, prices, response.schedule, certificate)
    checks.append(Check('kkt certificate', worst <= constant.KKT_TOL,
                        "worst residual {:.3e} at {}".format(worst, label)))

    duals = duals_from_dict(result.get('duals'))
    if duals is not None:
        worst, label = kkt_residual(instance, prices, schedule, duals)
        checks.append(Check('reported duals', worst <= constant.COMPLEMENTARITY_TOL,
                            "worst residual {:.3e} at {}".format(worst, label)))
        gap = strong_duality_gap(instance, prices, schedule, duals, peak)
        scale = _scale(result['metrics']['net_revenue'])
        checks.append(Check('strong duality', gap <= constant.OBJECTIVE_TOL * scale,
                            "linearized vs revenue - peak cost differ by {:.3e}".format(gap)))

    if instance.is_competitive:
        dominated = dominance_violations(instance, prices, schedule)
        detail = ", ".join("{} slot {}".format(j, h) for j, h in dominated[:5]) or "leader never undercut"
        checks.append(Check('dominance violation' if dominated else 'dominance', not dominated, detail))
    return VerificationReport(checks)

