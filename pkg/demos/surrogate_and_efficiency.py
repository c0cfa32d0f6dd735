"""Train the actuator surrogate on the synthetic bench dataset and print the
hybrid efficiency over rod force and speed for three blend weights.

    python3 demos/surrogate_and_efficiency.py
"""

import numpy as np

from emla_vdc.emla import EmlaParams
from emla_vdc.surrogate import (
    DisturbanceOracle,
    GridSpec,
    HybridModel,
    TrainingConfig,
    efficiency_map,
    generate_dataset,
    train,
)


def main() -> None:
    P = EmlaParams()
    data = generate_dataset(P, GridSpec(n_force=24, n_speed=24), DisturbanceOracle(), noise_std=1e-3, seed=0)
    model, norm, report = train(data, TrainingConfig(hidden=(16, 8), max_epochs=300, seed=0))
    r_force, r_speed = report.correlation["test"]
    print(f"{len(data)} samples; stop: {report.stop_reason}; held-out R force {r_force:.4f}, speed {r_speed:.4f}")
    forces = np.array([10e3, 30e3, 50e3, 70e3])
    speeds = np.array([0.01, 0.03, 0.05, 0.07])
    for alpha in (0.0, 0.5, 1.0):
        eta = efficiency_map(HybridModel(P, model, norm, alpha), forces, speeds)
        print(f"\nalpha = {alpha}   rows: force [kN], columns: speed [mm/s]")
        print("        " + "".join(f"{v * 1e3:>8.0f}" for v in speeds))
        for F, row in zip(forces, eta):
            print(f"{F / 1e3:>8.0f}" + "".join(f"{e:>8.3f}" for e in row))


if __name__ == "__main__":
    main()
