"""
Run verification on saved result files.
"""

import argparse
import glob
import os

from data.loader import load_result
from utils import helper
from utils.verifier import verify_result

parser = argparse.ArgumentParser()
parser.add_argument(
    '--result_dir', type=str, help='Directory of the result files.',
    default="saved_experiments/desk/"
)
parser.add_argument('--pattern', type=str, default='result_*.json', help='Glob of the files to check.')
parser.add_argument('--out', type=str, default='', help='Write the itemized report to this file.')

args = parser.parse_args()

files = sorted(glob.glob(os.path.join(args.result_dir, args.pattern)))
print("Verifying {} result files from {}".format(len(files), args.result_dir))
if not files:
    exit(1)

lines = []
failed = 0
for filename in files:
    report = verify_result(load_result(filename))
    if not report.passed:
        failed += 1
        print("{}: FAIL".format(filename))
        print(report.summary())
    lines.append("{}\t{}".format(os.path.basename(filename), "pass" if report.passed else "FAIL"))
    lines.extend("\t{}\t{}\t{}".format(c.name, "ok" if c.passed else "FAIL", c.detail) for c in report.checks)

if len(args.out) > 0:
    helper.ensure_dir(os.path.dirname(args.out) or '.')
    with open(args.out, 'w') as outfile:
        outfile.write("\n".join(lines) + "\n")
    print("Report saved to {}.".format(args.out))

print("{} of {} result files passed.".format(len(files) - failed, len(files)))
print("Evaluation ended.")
exit(2 if failed else 0)
