#!/usr/bin/env python

"""
Score pricing solutions: cost decomposition against the base case, and
aggregation of per-instance results into the experiment CSV tables.
"""

import argparse
import glob
import json
import os
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from model.errors import ValidationError
from model.instance import PriceVector, Schedule, schedule_violations, window_costs
from utils import constant


@dataclass
class MetricsReport:
    eb: float
    eb_total: float
    ic: float
    tc: float
    peak_load: float
    total_peak_load: float
    peak_cost: float
    revenue: float
    net_revenue: float

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: float(d[k]) for k in cls.__dataclass_fields__})


def base_case(instance):
    """
    Prices at the cap, every job filled at full power from the start of
    its window.
    """
    prices = PriceVector(instance.p_max.copy())
    schedule = Schedule.zeros(instance)
    for job, _ in instance.jobs():
        remaining = job.demand
        x = schedule.x[job.key]
        for k in range(job.n_slots):
            if remaining <= 0:
                break
            x[k] = min(job.power_cap, remaining)
            remaining -= x[k]
    return prices, schedule, evaluate(instance, prices, schedule)


def evaluate(instance, prices, schedule):
    violations = schedule_violations(instance, schedule)
    if violations:
        raise ValidationError(violations, what='schedule')
    p = np.asarray(prices.p, dtype=float)
    p_bar = instance.p_bar
    revenue = competitor = ic = 0.0
    for job, lam in instance.jobs():
        window = slice(job.tw_begin, job.tw_end + 1)
        c = window_costs(job, lam)
        x = schedule.x[job.key]
        revenue += float(p[window] @ x)
        ic += float(c @ x)
        if schedule.x_bar is not None:
            x_bar = schedule.x_bar[job.key]
            competitor += float(p_bar[window] @ x_bar)
            ic += float(c @ x_bar)
    load = schedule.leader_load(instance)
    total_load = load + schedule.competitor_load(instance)
    peak = float(load.max(initial=0.0))
    peak_cost = instance.kappa * peak
    return MetricsReport(
        eb=revenue,
        eb_total=revenue + competitor,
        ic=ic,
        tc=revenue + competitor + ic,
        peak_load=peak,
        total_peak_load=float(total_load.max(initial=0.0)),
        peak_cost=peak_cost,
        revenue=revenue,
        net_revenue=revenue - peak_cost,
    )


def compare(report, bc_report):
    """
    Customer costs as a percentage of the base-case total cost. All values
    are None when the base case costs nothing.
    """
    if bc_report.tc <= 0:
        return {'EB': None, 'IC': None, 'TC': None}
    eb = 100.0 * report.eb_total / bc_report.tc
    ic = 100.0 * report.ic / bc_report.tc
    return {'EB': eb, 'IC': ic, 'TC': eb + ic}


def net_revenue_gain(report, bc_report):
    if bc_report.net_revenue == 0:
        return None
    return 100.0 * (report.net_revenue - bc_report.net_revenue) / abs(bc_report.net_revenue)


# aggregation

def _frame(results):
    rows = []
    for r in results:
        pct = r.get('pct_vs_bc') or {}
        stats = r.get('stats') or {}
        row = {
            'tww': float(r['tww']),
            'kappa': float(r['kappa']),
            'seed': int(r['seed']),
            'model': r['model'],
            'status': r['status'],
            'time': stats.get('wall_time'),
            'gap': r.get('gap'),
            'EB': pct.get('EB'),
            'IC': pct.get('IC'),
            'TC': pct.get('TC'),
        }
        row.update(r['metrics'])
        row['bc_net_revenue'] = r['bc_metrics']['net_revenue']
        rows.append(row)
    columns = ['tww', 'kappa', 'seed', 'model', 'status', 'time', 'gap', 'EB', 'IC', 'TC',
               'bc_net_revenue'] + list(MetricsReport.__dataclass_fields__)
    df = pd.DataFrame(rows, columns=columns)
    for col in ('time', 'gap', 'EB', 'IC', 'TC'):
        df[col] = pd.to_numeric(df[col], errors='coerce')
    return df.sort_values(['tww', 'kappa', 'model', 'seed'], kind='mergesort').reset_index(drop=True)


def _with_average(df, key='kappa'):
    average = df.drop(columns=[key]).mean(numeric_only=True)
    average[key] = 'Average'
    out = df.astype({key: object})
    return pd.concat([out, average.to_frame().T[df.columns]], ignore_index=True).infer_objects()


def cost_table(df, tww):
    """ Per kappa mean EB/IC/TC percentages of MP and CP, plus an average row. """
    sub = df[df['tww'] == tww]
    out = pd.DataFrame({'kappa': sorted(sub['kappa'].unique())})
    for model in (constant.MP, constant.CP):
        means = sub[sub['model'] == model].groupby('kappa')[['EB', 'IC', 'TC']].mean()
        for col in ('EB', 'IC', 'TC'):
            out['{}_{}'.format(model, col)] = out['kappa'].map(means[col])
    return _with_average(out[constant.TABLE_COST_HEADER])


def solver_table(df, tww):
    """
    Mean time over instances solved within the limit, mean gap (percent)
    over the unsolved ones and the number of unsolved instances.
    """
    sub = df[df['tww'] == tww]
    out = pd.DataFrame({'kappa': sorted(sub['kappa'].unique())})
    for model in (constant.MP, constant.CP):
        rows = sub[sub['model'] == model]
        solved = rows[rows['status'].isin(constant.SOLVED_STATUSES)]
        unsolved = rows[~rows['status'].isin(constant.SOLVED_STATUSES)]
        out['avg_time_' + model] = out['kappa'].map(solved.groupby('kappa')['time'].mean())
        out['avg_gap_' + model] = out['kappa'].map(100.0 * unsolved.groupby('kappa')['gap'].mean())
        out['unsolved_' + model] = out['kappa'].map(unsolved.groupby('kappa').size()).fillna(0).astype(int)
    return _with_average(out[constant.TABLE_SOLVER_HEADER])


def figures_table(df):
    """
    Per (tww, kappa) means of peak cost, peak load and net revenue of every
    model. Net revenue gains compare cell means against the base case.
    """
    cells = df[['tww', 'kappa']].drop_duplicates().sort_values(['tww', 'kappa']).reset_index(drop=True)
    for model in constant.MODELS:
        means = df[df['model'] == model].groupby(['tww', 'kappa'])[['peak_cost', 'peak_load', 'net_revenue']].mean()
        for col in ('peak_cost', 'peak_load', 'net_revenue'):
            cells['{}_{}'.format(model, col)] = [means[col].get((t, k), np.nan)
                                                 for t, k in zip(cells['tww'], cells['kappa'])]
    total = df[df['model'] == constant.CP].groupby(['tww', 'kappa'])['total_peak_load'].mean()
    cells['CP_total_peak_load'] = [total.get((t, k), np.nan) for t, k in zip(cells['tww'], cells['kappa'])]
    for model in (constant.MP, constant.CP):
        bc = cells['BC_net_revenue']
        gain = 100.0 * (cells[model + '_net_revenue'] - bc) / bc.abs()
        cells[model + '_net_revenue_gain_pct'] = gain.where(bc != 0)
    return cells[constant.FIGURES_HEADER]


def loadcurve_table(results):
    """ Per-slot leader load and price of the first seed of every (tww, kappa) cell. """
    first = {}
    for r in results:
        cell = (float(r['tww']), float(r['kappa']))
        first[cell] = min(first.get(cell, r['seed']), r['seed'])
    rows = []
    for r in results:
        cell = (float(r['tww']), float(r['kappa']))
        if r['seed'] != first[cell]:
            continue
        for h, (load, price) in enumerate(zip(r['load'], r['prices'])):
            rows.append({'tww': cell[0], 'kappa': cell[1], 'model': r['model'], 'slot': h,
                         'load': load, 'price': price})
    df = pd.DataFrame(rows, columns=constant.LOADCURVE_HEADER)
    order = {m: i for i, m in enumerate(constant.MODELS)}
    df['_order'] = df['model'].map(order)
    df = df.sort_values(['tww', 'kappa', '_order', 'slot'], kind='mergesort').drop(columns=['_order'])
    return df.reset_index(drop=True)


def _direction(kappas, values):
    finite = np.isfinite(values)
    if finite.sum() < 2:
        return np.nan, 'undetermined'
    slope = float(np.polyfit(kappas[finite], values[finite], 1)[0])
    span = kappas[finite].max() - kappas[finite].min()
    if abs(slope) * span <= 1e-9:
        return slope, 'flat'
    return slope, 'increasing' if slope > 0 else 'decreasing'


def trend_table(df):
    """
    Least-squares slope over kappa of every tracked table column and
    whether it points the expected way.
    """
    rows = []
    for tww in sorted(df['tww'].unique()):
        cost = cost_table(df, tww).iloc[:-1].reset_index(drop=True)
        solver = solver_table(df, tww).iloc[:-1].drop(columns=['kappa']).reset_index(drop=True)
        per_kappa = pd.concat([cost, solver], axis=1)
        kappas = per_kappa['kappa'].astype(float).to_numpy()
        for quantity, expected in constant.TRENDS:
            slope, observed = _direction(kappas, per_kappa[quantity].astype(float).to_numpy())
            rows.append({'tww': tww, 'quantity': quantity, 'expected': expected, 'slope': slope,
                         'observed': observed, 'holds': observed == expected})
    return pd.DataFrame(rows, columns=constant.TRENDS_HEADER)


def reference_table(df):
    """ Average cost shares next to the published reference averages. """
    rows = []
    for tww, reference in sorted(constant.REFERENCE_AVERAGES.items()):
        if not (df['tww'] == tww).any():
            continue
        average = cost_table(df, tww).iloc[-1]
        for quantity, value in reference.items():
            measured = float(average[quantity])
            rows.append({'tww': tww, 'quantity': quantity, 'reference': value, 'measured': measured,
                         'difference': measured - value})
    return pd.DataFrame(rows, columns=constant.REFERENCE_HEADER)


def write_tables(results, out_dir, verbose=True):
    """ Write table1-4, figures, loadcurve, trends and reference CSVs. Returns the written file names. """
    df = _frame(results)
    written = []

    def write(frame, name):
        path = os.path.join(out_dir, name)
        frame.to_csv(path, index=False, float_format=constant.CSV_FLOAT_FORMAT)
        written.append(path)

    for tww, name in sorted(constant.COST_TABLES.items()):
        if (df['tww'] == tww).any():
            write(cost_table(df, tww), name)
    for tww, name in sorted(constant.SOLVER_TABLES.items()):
        if (df['tww'] == tww).any():
            write(solver_table(df, tww), name)
    write(figures_table(df), constant.FIGURES_CSV)
    write(loadcurve_table(results), constant.LOADCURVE_CSV)
    trends = trend_table(df)
    write(trends, constant.TRENDS_CSV)
    reference = reference_table(df)
    write(reference, constant.REFERENCE_CSV)
    if verbose:
        for tww, name in sorted(constant.COST_TABLES.items()):
            if (df['tww'] == tww).any():
                print("TWW {:.0%} (BC = 100%):".format(tww))
                print(cost_table(df, tww).to_string(index=False, float_format=lambda v: "{:.2f}".format(v)))
                print("")
        print("Trends over kappa:")
        print(trends.to_string(index=False, float_format=lambda v: "{:.4g}".format(v)))
        print("")
        if len(reference):
            print("Average cost shares against the reference averages:")
            print(reference.to_string(index=False, float_format=lambda v: "{:.2f}".format(v)))
            print("")
        print("Tables written to {}".format(out_dir))
    return written


def load_results(result_dir):
    results = []
    for filename in sorted(glob.glob(os.path.join(result_dir, 'result_*.json'))):
        with open(filename) as infile:
            results.append(json.load(infile))
    return results


def parse_arguments():
    parser = argparse.ArgumentParser(description='Aggregate per-instance result files into experiment tables.')
    parser.add_argument('result_dir', help='Directory holding result_*.json files')
    parser.add_argument('--out', type=str, default=None, help='Directory for the CSV tables (default: result_dir)')
    return parser.parse_args()


if __name__ == "__main__":
    args = parse_arguments()
    results = load_results(args.result_dir)
    if not results:
        print("No result files found in {}".format(args.result_dir))
        exit(1)
    write_tables(results, args.out or args.result_dir)
