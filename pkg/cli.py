"""
 DESCRIPTION
   Command line of toeplitz-lab

   toeplitz-lab run --config <file> [--output-dir DIR] [--seed N] [--jobs N]
   toeplitz-lab list

   Exit codes: 0 all verdicts pass, 1 verdict failure or aborted run,
   2 usage or configuration error.

        This program is free software: you can redistribute it and/or modify
        it under the terms of the GNU General Public License as published by
        the Free Software Foundation, either version 3 of the License, or
        (at your option) any later version.

        This program is distributed in the hope that it will be useful,
        but WITHOUT ANY WARRANTY; without even the implied warranty of
        MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
        GNU General Public License for more details.

        You should have received a copy of the GNU General Public License
        along with this program.  If not, see <http://www.gnu.org/licenses/>.
"""

import argparse
import sys

import experiments
from errors import ConfigError

# Logging
import __main__
import logging
import os
script = os.path.basename(getattr(__main__, "__file__", "toeplitz-lab"))
script = os.path.splitext(script)[0]
logger = logging.getLogger(script + "." + __name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _epilog():
  lines = ["configuration keys (JSON object):"]
  lines += [f"  {key:<12} {text}" for key, text in experiments.CONFIG_KEYS.items()]
  lines += ["", "experiments:"]
  for name, entry in experiments.REGISTRY.items():
    tolerances = ", ".join(entry[experiments.TOLERANCES]) or "-"
    options = ", ".join(entry[experiments.OPTIONS]) or "-"
    lines.append(f"  {name:<17} tolerances: {tolerances}; options: {options}")
  lines += ["", "environment: BTLAB_LOGLEVEL, BTLAB_SYSLOG, BTLAB_OUTPUT_DIR, BTLAB_JOBS, BTLAB_SEED,",
            "             BTLAB_K_LADDER, BTLAB_MC_SAMPLES, BTLAB_SAMPLE_BLOCK"]
  return "\n".join(lines)


def build_parser(version="unknown"):
  parser = argparse.ArgumentParser(prog="toeplitz-lab",
                                   description="Convergence experiments for Berezin-Toeplitz spectral asymptotics",
                                   epilog=_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
  parser.add_argument("--version", action="version", version=f"%(prog)s {version}")
  commands = parser.add_subparsers(dest="command", required=True)

  run = commands.add_parser("run", help="run one experiment from a JSON configuration",
                            epilog=_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
  run.add_argument("--config", required=True, help="experiment configuration (JSON)")
  run.add_argument("--output-dir", help="directory for results; overrides 'output_dir'")
  run.add_argument("--seed", type=int, help="random seed; overrides 'seed'")
  run.add_argument("--jobs", type=int, help="worker threads; overrides 'jobs'")

  commands.add_parser("list", help="list the experiments and the results they reproduce")
  return parser


def main(argv=None, version="unknown"):
  """
  Parse argv and run the command

  Returns:
    int: exit code
  """
  logger.debug(">>")
  try:
    args = build_parser(version).parse_args(argv)
  except SystemExit as e:
    return EXIT_PASS if e.code in (0, None) else EXIT_USAGE

  if args.command == "list":
    print(experiments.list_experiments())
    return EXIT_PASS

  try:
    run = experiments.load_config(args.config, seed=args.seed, output_dir=args.output_dir, jobs=args.jobs)
  except ConfigError as e:
    logger.error(f"configuration: {e}")
    print(f"toeplitz-lab: configuration error: {e}", file=sys.stderr)
    return EXIT_USAGE

  logger.info(f"running {run.experiment} over {list(run.k_ladder)} on {run.jobs} thread(s)")
  record = experiments.run_experiment(run)
  try:
    csv_path, json_path = experiments.write_record(record, run.output_dir)
  except OSError as e:
    logger.error(f"cannot write results to {run.output_dir}: {e}")
    return EXIT_FAIL

  for verdict in record.verdicts:
    print(f"{verdict['name']:<20} value={verdict['value']!s:<24} tolerance={verdict['tolerance']:g} "
          f"{'PASS' if verdict['pass'] else 'FAIL'}")
  if record.error:
    print(f"error: {record.error}")
  print(f"{record.experiment}: {'PASS' if record.passed else 'FAIL'} ({csv_path}, {json_path})")

  logger.debug("<<")
  return EXIT_PASS if record.passed else EXIT_FAIL
