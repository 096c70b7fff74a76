"""
Define common constants.
"""
INSTANCE_JSON = 'instance_k{kappa}_tww{tww}_s{seed}.json'
RESULT_JSON = 'result_{model}_k{kappa}_tww{tww}_s{seed}.json'
MANIFEST_JSON = 'manifest.json'
CONFIG_JSON = 'config.json'
SOLVER_LOG = 'solver_log.txt'
EXPERIMENT_LOG = 'experiment_log.txt'

TIME_LIMIT_ENV = 'PEAKGRID_TIME_LIMIT'
FULL_TESTS_ENV = 'PEAKGRID_FULL_TESTS'

# models
BC = 'BC'
MP = 'MP'
CP = 'CP'
MODELS = (BC, MP, CP)

# solve statuses
OPTIMAL = 'Optimal'
GAP_LIMIT = 'GapLimit'
TIME_LIMIT = 'TimeLimit'
INFEASIBLE = 'Infeasible'
EVALUATED = 'Evaluated'
SOLVED_STATUSES = (OPTIMAL, GAP_LIMIT)

# horizon and generator defaults
HORIZON = 24
N_CUSTOMERS = 10
JOBS_PER_CUSTOMER = 3
TWW_SET = (0.2, 1.0)
BETA_RANGE = (1.0, 3.0)
DEMAND_RANGE = (2.0, 10.0)
LAMBDA_RANGE = (0.5, 2.0)
P_MAX = 10.0
KAPPA_SET = (200.0, 400.0, 600.0, 800.0, 1000.0)
SEEDS_PER_KAPPA = 10

# desk scale experiment
DESK_CUSTOMERS = 5
DESK_JOBS_PER_CUSTOMER = 2
DESK_TIME_LIMIT = 60.0
FULL_TIME_LIMIT = 4 * 3600.0

# tolerances
KKT_TOL = 1e-8
OBJECTIVE_TOL = 1e-6
PRIMAL_TOL = 1e-7
COMPLEMENTARITY_TOL = 1e-6
GAMMA_TOL = 1e-6
SIMPLEX_FEAS_TOL = 1e-9
SIMPLEX_OPT_TOL = 1e-9
PIVOT_TOL = 1e-11
INTEGRALITY_TOL = 1e-6
OPTIMALITY_GAP = 1e-6

# warm-start price search
SEARCH_EVALUATIONS = 100000
SEARCH_SWEEPS = 4
SEARCH_STEP = 1e-6
SEARCH_TEMPERATURES = (1.0, 0.3, 0.1, 0.0)
SEARCH_BATCH = 512
SEARCH_TIME_SHARE = 0.25

# csv outputs
TABLE_COST_HEADER = ['kappa', 'MP_EB', 'MP_IC', 'MP_TC', 'CP_EB', 'CP_IC', 'CP_TC']
TABLE_SOLVER_HEADER = ['kappa', 'avg_time_MP', 'avg_time_CP', 'avg_gap_MP', 'avg_gap_CP', 'unsolved_MP', 'unsolved_CP']
FIGURES_HEADER = ['tww', 'kappa',
                  'BC_peak_cost', 'BC_peak_load', 'BC_net_revenue',
                  'MP_peak_cost', 'MP_peak_load', 'MP_net_revenue',
                  'CP_peak_cost', 'CP_peak_load', 'CP_net_revenue',
                  'CP_total_peak_load', 'MP_net_revenue_gain_pct', 'CP_net_revenue_gain_pct']
LOADCURVE_HEADER = ['tww', 'kappa', 'model', 'slot', 'load', 'price']
COST_TABLES = {0.2: 'table1.csv', 1.0: 'table2.csv'}
SOLVER_TABLES = {0.2: 'table3.csv', 1.0: 'table4.csv'}
FIGURES_CSV = 'figures.csv'
LOADCURVE_CSV = 'loadcurve.csv'
TRENDS_CSV = 'trends.csv'
REFERENCE_CSV = 'reference.csv'
TRENDS_HEADER = ['tww', 'quantity', 'expected', 'slope', 'observed', 'holds']
# direction of each per-kappa table column as kappa grows
TRENDS = (('MP_TC', 'decreasing'), ('MP_IC', 'increasing'), ('CP_IC', 'decreasing'), ('avg_time_MP', 'increasing'))
REFERENCE_HEADER = ['tww', 'quantity', 'reference', 'measured', 'difference']
# cost-share averages over the kappa set, percent of total bill
REFERENCE_AVERAGES = {
    0.2: {'MP_EB': 75.19, 'MP_IC': 21.91, 'MP_TC': 97.10, 'CP_EB': 77.97, 'CP_IC': 18.63, 'CP_TC': 96.60},
    1.0: {'MP_EB': 79.75, 'MP_IC': 15.35, 'MP_TC': 95.10, 'CP_EB': 84.40, 'CP_IC': 12.79, 'CP_TC': 97.19},
}
CSV_FLOAT_FORMAT = '%.6f'
