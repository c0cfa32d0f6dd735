"""Rank the adaptive, modular and PD controllers on the cube walk, then sweep
the controller's parameter error.  The full run takes several minutes.

    python3 demos/controller_comparison.py [--duration SECONDS] [--workers N]
"""

import argparse

from emla_vdc.config import resolve_config
from emla_vdc.harness import (
    ScenarioConfig,
    compare_controllers,
    format_comparison,
    format_sweep_table,
    uncertainty_sweep,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--duration", type=float, help="truncate the walk [s]")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    cube = ScenarioConfig.from_config(resolve_config("cubic"))
    if args.duration:
        cube = cube.with_(duration=args.duration)
    print(format_comparison(compare_controllers(cube, workers=args.workers)))
    print()
    print(format_sweep_table(uncertainty_sweep(cube, workers=args.workers)))


if __name__ == "__main__":
    main()
