"""One actuator driving a translating load under the full current and voltage
laws: prints how the accompanying function and its parts decay.

    python3 demos/single_axis_stability.py
"""

import numpy as np

from emla_vdc.single_axis import SingleAxisConfig, force_error_rate, run_single_axis


def main() -> None:
    cfg = SingleAxisConfig()
    run = run_single_axis(cfg)
    print(f"gain conditions held at every step: {run['gains_pass']}")
    print(f"{'t [s]':>7} {'nu':>11} {'load part':>11} {'actuator part':>14} {'e_F [N]':>10}")
    for t in (0.0, 0.001, 0.01, 0.05, 0.1, 0.2, 0.3):
        k = int(round(t / cfg.dt))
        print(f"{t:>7.3f} {run['nu'][k]:>11.3e} {run['nu_load'][k]:>11.3e} {run['nu_act'][k]:>14.3e} {run['e_F'][k]:>10.3f}")
    start = int(round(1e-3 / cfg.dt))
    numeric = np.gradient(run["e_F"], cfg.dt)[start:-1]
    closed = force_error_rate(run, cfg)[start:-1]
    print(f"largest step increase of nu after 1 ms: {np.max(np.diff(run['nu'])[start:]) / run['nu'][0]:.2e} nu(0)")
    print(f"closed-form force-error rate mismatch: {np.max(np.abs(numeric - closed)) / np.max(np.abs(closed)):.2e}")


if __name__ == "__main__":
    main()
