# coding: utf-8

"""
Generate pricing instances, solve the base case, monopoly and competitive
models, verify results and run the full experiment sweep.
"""

import argparse
import math
import multiprocessing
import os
import sys
import time
from dataclasses import replace
from datetime import datetime

from tqdm import tqdm

from data import loader
from data.generator import GeneratorConfig, batch
from model import milp, reformulation, search
from model.errors import ConfigError, ModeError, PeakGridError
from model.instance import PriceVector, check_instance, cp_instance, mp_instance
from utils import constant, helper, scorer
from utils.verifier import verify_result


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description='Bilevel day-ahead electricity pricing.')
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    def solver_flags(p):
        p.add_argument('--time-limit', type=float, default=None, help='Seconds per solve (env {} overrides).'.format(
            constant.TIME_LIMIT_ENV))
        p.add_argument('--gap', type=float, default=constant.OPTIMALITY_GAP, help='Relative gap tolerance.')
        p.add_argument('--node-limit', type=int, default=None,
                       help='Stop branch-and-bound after k nodes; with a generous time limit '
                            'every output except timing columns repeats exactly.')
        p.add_argument('--log-step', type=int, default=100, help='Print solver progress every k nodes.')
        p.add_argument('--quiet', action='store_true', help='No console output besides errors.')

    gen = sub.add_parser('generate', help='Write seeded instance files.')
    gen.add_argument('--config', type=str, default=None, help='Generator config JSON.')
    gen.add_argument('--seed', type=int, default=None)
    gen.add_argument('--out', type=str, default='instances')
    gen.add_argument('--quiet', action='store_true')

    solve = sub.add_parser('solve', help='Solve one instance file.')
    solve.add_argument('instance', type=str)
    solve.add_argument('--model', type=str.upper, choices=constant.MODELS, default=constant.MP)
    solve.add_argument('--out', type=str, default='results')
    solve.add_argument('--lp', type=str, default=None, help='Also export the MIP in LP format to this file.')
    solver_flags(solve)

    exp = sub.add_parser('experiment', help='Run the kappa x tww x seed sweep.')
    exp.add_argument('--config', type=str, default=None, help='Generator config JSON.')
    exp.add_argument('--seed', type=int, default=None)
    exp.add_argument('--out', type=str, default='saved_experiments/desk')
    exp.add_argument('--models', type=str, default='BC,MP,CP', help='Comma separated subset of BC,MP,CP.')
    exp.add_argument('--threads', type=int, default=1, help='Worker processes; 1 solves in-process.')
    exp.add_argument('--full', action='store_true', help='Full size instances and the long time limit.')
    solver_flags(exp)

    ver = sub.add_parser('verify', help='Check result files.')
    ver.add_argument('results', nargs='+', type=str)
    ver.add_argument('--quiet', action='store_true')
    return parser.parse_args(argv)


def time_limit(args, full=False):
    env = os.environ.get(constant.TIME_LIMIT_ENV)
    if env:
        try:
            return float(env)
        except ValueError:
            raise ConfigError(constant.TIME_LIMIT_ENV, "not a number: {}".format(env))
    if args.time_limit is not None:
        return args.time_limit
    return constant.FULL_TIME_LIMIT if full else constant.DESK_TIME_LIMIT


def make_limits(args, full=False, log_file=None, verbose=None):
    return milp.SolverLimits(
        time_limit=time_limit(args, full),
        gap_tolerance=args.gap,
        node_limit=args.node_limit,
        log_step=args.log_step,
        verbose=not args.quiet if verbose is None else verbose,
        log_file=log_file,
    )


def _finite(value):
    return value if value is not None and math.isfinite(value) else None


def solve_model(instance, model, limits, lp_file=None):
    """
    Solve one model on one instance and return the result record written
    to disk: prices, schedule, duals, metrics against the base case and
    solver statistics.
    """
    base = mp_instance(instance)
    _, bc_schedule, bc_report = scorer.base_case(base)
    result = {'model': model, 'kappa': instance.kappa}

    if model == constant.BC:
        view = base
        prices = PriceVector(base.p_max.copy())
        schedule, duals, peak, report = bc_schedule, None, bc_report.peak_load, bc_report
        result.update(status=constant.EVALUATED, objective=report.net_revenue, best_bound=None, gap=None,
                      stats=None)
    else:
        if model == constant.CP and not instance.is_competitive:
            raise ModeError("competitor prices required")
        view = base if model == constant.MP else instance
        mip = reformulation.build_mip(view)
        if lp_file is not None:
            reformulation.write_lp(mip, lp_file)
        started = time.time()
        seeds, searched = search.search_seeds(mip, deadline=started + constant.SEARCH_TIME_SHARE * limits.time_limit)
        remaining = max(limits.time_limit - (time.time() - started), constant.SEARCH_TIME_SHARE * limits.time_limit)
        solved = milp.solve(mip, replace(limits, time_limit=remaining), seed=seeds,
                            incumbent_check=reformulation.bilevel_check(mip))
        if not solved.has_incumbent:
            raise PeakGridError("{} found no feasible pricing ({})".format(model, solved.status))
        prices, schedule, duals, peak = reformulation.extract_solution(mip, solved.values)
        report = scorer.evaluate(view, prices, schedule)
        stats = solved.stats
        result.update(status=solved.status, objective=solved.objective, best_bound=_finite(solved.best_bound),
                      gap=_finite(solved.gap),
                      stats={'nodes': stats.nodes, 'lp_iterations': stats.lp_iterations,
                             'wall_time': time.time() - started, 'incumbents': stats.incumbents,
                             'rejected': stats.rejected, 'seeded': stats.seeded,
                             'search_value': searched.value, 'search_evaluations': searched.evaluations})

    result.update(
        prices=[float(p) for p in prices.p],
        schedule=loader.schedule_to_dict(view, schedule),
        duals=loader.duals_to_dict(view, duals),
        peak=float(peak),
        load=[float(v) for v in schedule.leader_load(view)],
        metrics=report.to_dict(),
        bc_metrics=bc_report.to_dict(),
        pct_vs_bc=scorer.compare(report, bc_report),
        net_revenue_gain_pct=scorer.net_revenue_gain(report, bc_report),
        instance=loader.instance_to_dict(view),
    )
    return result


def result_name(model, kappa, tww, seed):
    return constant.RESULT_JSON.format(model=model, kappa='{:g}'.format(kappa), tww='{:g}'.format(tww), seed=seed)


def cmd_generate(args):
    d = helper.load_config(args.config, verbose=not args.quiet) if args.config else {}
    if args.seed is not None:
        d['seed'] = args.seed
    config = GeneratorConfig.from_dict(d)
    helper.ensure_dir(args.out, verbose=not args.quiet)
    if not args.quiet:
        helper.print_config(config.to_dict())
    manifest = {'config': config.to_dict(), 'instances': []}
    for kappa, tww, seed, instance in tqdm(batch(config), disable=args.quiet):
        name = constant.INSTANCE_JSON.format(kappa='{:g}'.format(kappa), tww='{:g}'.format(tww), seed=seed)
        loader.save_instance(instance, os.path.join(args.out, name))
        manifest['instances'].append({'file': name, 'kappa': kappa, 'tww': tww, 'seed': seed})
    helper.save_config(manifest, os.path.join(args.out, constant.MANIFEST_JSON), verbose=not args.quiet)
    if not args.quiet:
        print("{} instances written to {}".format(len(manifest['instances']), args.out))
    return 0


def cmd_solve(args):
    instance = check_instance(loader.load_instance(args.instance))
    helper.ensure_dir(args.out, verbose=not args.quiet)
    log_file = os.path.join(args.out, constant.SOLVER_LOG) if args.model != constant.BC else None
    limits = make_limits(args, log_file=log_file)
    if not args.quiet:
        helper.print_config({'instance': args.instance, 'model': args.model, 'time_limit': limits.time_limit,
                             'gap': limits.gap_tolerance, 'node_limit': limits.node_limit})
    result = solve_model(instance, args.model, limits, lp_file=args.lp)
    stem = os.path.splitext(os.path.basename(args.instance))[0]
    filename = os.path.join(args.out, "result_{}_{}.json".format(args.model, stem))
    loader.save_result(result, filename)
    if not args.quiet:
        m = result['metrics']
        print("{}: {} {}, net revenue = {:.6f}, peak = {:.6f}, revenue = {:.6f}".format(
            datetime.now(), args.model, result['status'], m['net_revenue'], m['peak_load'], m['revenue']))
        print("Result saved to {}".format(filename))
    return 0


def _experiment_task(task):
    """ Solve every requested model on one generated instance. """
    kappa, tww, seed, instance, models, limits, out = task
    outcomes = []
    for model in models:
        view = cp_instance(instance) if model == constant.CP else instance
        start = time.time()
        try:
            result = solve_model(view, model, limits)
        except PeakGridError as e:
            outcomes.append({'model': model, 'kappa': kappa, 'tww': tww, 'seed': seed, 'error': str(e),
                             'time': time.time() - start})
            continue
        result.update(tww=tww, seed=seed)
        loader.save_result(result, os.path.join(out, result_name(model, kappa, tww, seed)))
        outcomes.append(result)
    return outcomes


def _worker_init():
    os.environ.setdefault('OMP_NUM_THREADS', '1')
    os.environ.setdefault('OPENBLAS_NUM_THREADS', '1')


def _run_tasks(tasks, threads, quiet):
    if threads <= 1:
        for task in tqdm(tasks, disable=quiet):
            yield _experiment_task(task)
        return
    try:
        ctx = multiprocessing.get_context('fork')
    except ValueError:
        ctx = multiprocessing.get_context('spawn')
    with ctx.Pool(processes=threads, initializer=_worker_init) as pool:
        for outcome in tqdm(pool.imap(_experiment_task, tasks, chunksize=1), total=len(tasks), disable=quiet):
            yield outcome


def cmd_experiment(args):
    models = [m.strip().upper() for m in args.models.split(',') if m.strip()]
    if not models or any(m not in constant.MODELS for m in models):
        raise ConfigError('models', "expected a non-empty subset of {}, got {}".format(
            ",".join(constant.MODELS), args.models))
    if args.threads <= 0:
        raise ConfigError('threads', "must be positive, got {}".format(args.threads))
    d = helper.load_config(args.config, verbose=not args.quiet) if args.config else {}
    if args.seed is not None:
        d['seed'] = args.seed
    config = GeneratorConfig.from_dict(d)
    if not args.full and not args.config:
        config = config.desk()
    limits = make_limits(args, full=args.full, verbose=False)

    helper.ensure_dir(args.out, verbose=not args.quiet)
    plan = {'generator': config.to_dict(), 'models': models, 'threads': args.threads,
            'time_limit': limits.time_limit, 'gap': limits.gap_tolerance, 'node_limit': limits.node_limit,
            'out': args.out}
    helper.save_config(plan, os.path.join(args.out, constant.CONFIG_JSON), verbose=not args.quiet)
    if not args.quiet:
        helper.print_config(plan)
    file_logger = helper.FileLogger(os.path.join(args.out, constant.EXPERIMENT_LOG),
                                    header="# kappa\ttww\tseed\tmodel\tstatus\tnet_revenue\tgap\ttime")

    tasks = [(kappa, tww, seed, instance, models, limits, args.out) for kappa, tww, seed, instance in batch(config)]
    results, failures = [], 0
    for outcomes in _run_tasks(tasks, args.threads, args.quiet):
        for o in outcomes:
            if 'error' in o:
                failures += 1
                file_logger.log("{:g}\t{:g}\t{}\t{}\tError\t-\t-\t{:.2f}".format(
                    o['kappa'], o['tww'], o['seed'], o['model'], o['time']))
                if not args.quiet:
                    print("{}: {} kappa={:g} tww={:g} seed={} failed: {}".format(
                        datetime.now(), o['model'], o['kappa'], o['tww'], o['seed'], o['error']))
                continue
            stats = o['stats'] or {}
            file_logger.log("{:g}\t{:g}\t{}\t{}\t{}\t{:.6f}\t{}\t{:.2f}".format(
                o['kappa'], o['tww'], o['seed'], o['model'], o['status'], o['metrics']['net_revenue'],
                '-' if o['gap'] is None else "{:.6f}".format(o['gap']), stats.get('wall_time', 0.0)))
            results.append(o)

    if not results:
        raise PeakGridError("no instance was solved, see {}".format(constant.EXPERIMENT_LOG))
    scorer.write_tables(results, args.out, verbose=not args.quiet)
    if not args.quiet:
        print("Experiment ended with {} results and {} failures.".format(len(results), failures))
    return 0


def cmd_verify(args):
    failed = 0
    for filename in args.results:
        report = verify_result(loader.load_result(filename))
        if not report.passed:
            failed += 1
        if not args.quiet or not report.passed:
            print("{}: {}".format(filename, "pass" if report.passed else "FAIL"))
            print(report.summary())
            print("")
    if not args.quiet:
        print("{} of {} result files passed.".format(len(args.results) - failed, len(args.results)))
    return 2 if failed else 0


COMMANDS = {
    'generate': cmd_generate,
    'solve': cmd_solve,
    'experiment': cmd_experiment,
    'verify': cmd_verify,
}


def main(argv=None):
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except PeakGridError as e:
        print("Error: {}".format(e), file=sys.stderr)
        return 1
    except (IOError, OSError) as e:
        print("Error: {}".format(e), file=sys.stderr)
        return 1


if __name__ == '__main__':
    exit(main())
