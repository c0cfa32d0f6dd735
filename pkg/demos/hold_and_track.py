"""Hold the home pose, then track the cube walk, and print the metrics of both.

    python3 demos/hold_and_track.py [--duration SECONDS]
"""

import argparse
import tempfile

from emla_vdc.config import resolve_config
from emla_vdc.harness import ScenarioConfig, run_scenario


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--duration", type=float, default=1.0, help="cube-walk duration to simulate [s]")
    args = parser.parse_args()
    out = tempfile.mkdtemp(prefix="emla-vdc-demo-")
    for name, duration in (("hold", 0.2), ("cubic", args.duration)):
        cfg = ScenarioConfig.from_config(resolve_config(name)).with_(duration=duration)
        m = run_scenario(cfg, out_dir=f"{out}/{name}").metrics
        print(f"{name:<6} {duration:4.1f} s  RMSE {m.rmse * 1e3:8.4f} mm  max {m.max_error * 1e3:8.4f} mm  "
              f"gains {'pass' if m.gain_conditions_passed else 'FAIL'}  {m.status}")
    print(f"traces in {out}")


if __name__ == "__main__":
    main()
