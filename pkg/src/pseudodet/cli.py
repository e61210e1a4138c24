"""Command-line experiment runner.

    pseudodet <experiment> [--config run.json] [flags]

Flags override values from the config file. Exit status: 0 ok, 2 invalid
configuration, 3 a built-in threshold check failed.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError
from .experiments import ADVERSARIES, BACKENDS, EXPERIMENTS, ExperimentConfig, run, write

EXIT_OK, EXIT_CONFIG, EXIT_THRESHOLD = 0, 2, 3


def _shots(value: str):
    return value if value == "auto" else int(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pseudodet", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with ExperimentConfig fields")
        p.add_argument("--dim", type=int)
        p.add_argument("--backend", choices=BACKENDS)
        p.add_argument("--shots", type=_shots, help="integer or 'auto' (Hoeffding count)")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--lambda", dest="lam", type=int)
        p.add_argument("--s", type=int)
        p.add_argument("--repeats", type=int, help="runs per seed for modal frequencies")
        p.add_argument("--adversary", choices=ADVERSARIES)
        p.add_argument("--agreement", type=float, help="pairwise agreement of the synthetic generator")
        p.add_argument("--ell", type=int, help="output bits of the synthetic generator")
        p.add_argument("--threads", type=int)
        p.add_argument("--out", help="output directory")
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    name, config = args.pop("experiment"), args.pop("config")
    try:
        if config:
            cfg = ExperimentConfig.from_file(config, experiment=name, **args)
        else:
            cfg = ExperimentConfig(experiment=name, **{k: v for k, v in args.items() if v is not None})
        result = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    csv_path, json_path = write(result, cfg)
    print(f"wrote {csv_path} and {json_path}")
    for check, passed in result.checks.items():
        print(f"{'PASS' if passed else 'FAIL'} {check}")
    return EXIT_OK if result.ok else EXIT_THRESHOLD


if __name__ == "__main__":
    sys.exit(main())
