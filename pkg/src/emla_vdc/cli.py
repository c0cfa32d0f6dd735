"""Command line interface: ``emla-vdc <command> [options]``.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure
(aborted scenario, failed training, violated gain conditions).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .config import ConfigError, resolve_config
from .controller import CONDITIONS, betas, gain_condition_check
from .harness import (
    SWEEP_SCALES,
    VARIANT_ORDER,
    ScenarioConfig,
    SweepRow,
    build,
    emla_params,
    format_comparison,
    format_sweep_table,
    load_surrogate,
    loop_surrogate_dataset,
    output_dir,
    run_many,
    run_scenario,
    write_outputs,
)
from .surrogate import (
    Dataset,
    DisturbanceOracle,
    GridSpec,
    HybridModel,
    ModelFileError,
    TrainingConfig,
    TrainingError,
    efficiency_map,
    generate_dataset,
    save_model,
    train,
    write_efficiency_map,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors print the usage text and exit with the config-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default="default", help="config file or packaged preset (default, cubic, triangle, hold)")
    p.add_argument("--out", type=Path, help="output directory (default: $EMLA_VDC_OUT/<name> or runs/<name>)")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--alpha", type=float, help="surrogate blend weight in [0, 1)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--duration", type=float, help="override the scenario duration [s]")
    parser = _Parser(prog="emla-vdc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", parents=[common, sim], help="simulate one scenario")
    run.add_argument("--variant", choices=VARIANT_ORDER)
    run.add_argument("--scale", type=float, help="relative error of the controller's parameters")

    sweep = sub.add_parser("sweep", parents=[common, sim], help="parameter-uncertainty sweep")
    sweep.add_argument("--scales", type=float, nargs="+", default=list(SWEEP_SCALES))
    sweep.add_argument("--workers", type=int, default=1)

    cmp_ = sub.add_parser("compare", parents=[common, sim], help="rank the controller variants")
    cmp_.add_argument("--workers", type=int, default=1)

    ds = sub.add_parser("gen-dataset", parents=[common], help="synthetic actuator dataset (CSV)")
    ds.add_argument("--envelope", choices=("bench", "loop"), default="bench",
                    help="bench: 0-70 kN x 0-70 mm/s with the disturbance oracle; loop: the arm's operating envelope")
    ds.add_argument("--points", type=int, default=36, help="grid points per axis")
    ds.add_argument("--noise", type=float, default=0.0, help="noise std relative to each target's range")
    ds.add_argument("--actuator", type=int, choices=(0, 1, 2), default=0)

    tr = sub.add_parser("train-surrogate", parents=[common], help="train the actuator surrogate")
    tr.add_argument("--dataset", type=Path, help="dataset CSV (default: freshly generated loop envelope)")
    tr.add_argument("--hidden", type=int, nargs="+", default=[16, 16])
    tr.add_argument("--epochs", type=int, default=200)
    tr.add_argument("--optimizer", choices=("lm", "gd"), default="lm")
    tr.add_argument("--actuator", type=int, choices=(0, 1, 2), default=0)

    em = sub.add_parser("efficiency-map", parents=[common], help="hybrid efficiency over force and speed")
    em.add_argument("--model", help="surrogate model file (default: the config's)")
    em.add_argument("--forces", type=int, default=15, help="number of force samples up to 70 kN")
    em.add_argument("--speeds", type=int, default=15, help="number of speed samples up to 70 mm/s")
    em.add_argument("--actuator", type=int, choices=(0, 1, 2), default=0)

    sub.add_parser("check-gains", parents=[common], help="verify the actuator gain conditions at the home pose")
    return parser


def _load(args) -> dict:
    overrides: dict = {}
    if args.seed is not None:
        overrides.setdefault("scenario", {})["seed"] = args.seed
    if args.alpha is not None:
        overrides.setdefault("controller", {})["alpha"] = args.alpha
    for key in ("variant", "scale", "duration"):
        value = getattr(args, key, None)
        if value is not None:
            overrides.setdefault("scenario", {})[key] = value
    return resolve_config(args.config, overrides)


def _scenario(args) -> ScenarioConfig:
    return ScenarioConfig.from_config(_load(args))


def _print_metrics(m) -> None:
    print(f"status      {m.status}{': ' + m.reason if m.reason else ''}")
    print(f"RMSE        {m.rmse:.6g} m  (x {m.rmse_axes['x']:.3g}, y {m.rmse_axes['y']:.3g}, z {m.rmse_axes['z']:.3g})")
    print(f"max error   {m.max_error:.6g} m")
    print(f"gains       {'pass' if m.gain_conditions_passed else 'FAIL'}")
    print(f"energy      audit residuals {', '.join(f'{a:.2e}' for a in m.energy_audit)}")


def cmd_run(args) -> int:
    cfg = _scenario(args)
    out = output_dir(args.out, cfg.name)
    result = run_scenario(cfg, out_dir=out)
    _print_metrics(result.metrics)
    print(f"outputs     {out}")
    return EXIT_RUNTIME if result.aborted else EXIT_OK


def _write_batch(results, labels, out: Path) -> None:
    for label, r in zip(labels, results):
        write_outputs(r, out / label)


def cmd_sweep(args) -> int:
    cfg = _scenario(args)
    out = output_dir(args.out, f"{cfg.name}-sweep")
    results = run_many([cfg.with_(scale=s) for s in args.scales], args.workers)
    rows = [SweepRow(s, r.metrics) for s, r in zip(args.scales, results)]
    _write_batch(results, [f"scale{s:+.2f}" for s in args.scales], out)
    summary = [{"scale": r.scale, "label": r.label, "rmse": r.metrics.rmse, "status": r.metrics.status} for r in rows]
    (out / "sweep.json").write_text(json.dumps(summary, indent=2))
    print(format_sweep_table(rows))
    print(f"outputs     {out}")
    return EXIT_RUNTIME if any(r.aborted for r in results) else EXIT_OK


def cmd_compare(args) -> int:
    cfg = _scenario(args)
    out = output_dir(args.out, f"{cfg.name}-compare")
    results = run_many([cfg.with_(variant=v) for v in VARIANT_ORDER], args.workers)
    _write_batch(results, VARIANT_ORDER, out)
    ranked = dict(sorted(((v, r.metrics) for v, r in zip(VARIANT_ORDER, results)), key=lambda vm: vm[1].rmse))
    (out / "compare.json").write_text(json.dumps({v: {"rmse": m.rmse, "status": m.status} for v, m in ranked.items()}, indent=2))
    print(format_comparison(ranked))
    print(f"outputs     {out}")
    return EXIT_RUNTIME if any(r.aborted for r in results) else EXIT_OK


def _params(args):
    return emla_params(_load(args))[args.actuator]


def _seed(args, cfg: dict) -> int:
    return args.seed if args.seed is not None else int((cfg.get("scenario") or {}).get("seed", 0))


def cmd_gen_dataset(args) -> int:
    cfg = _load(args)
    P = emla_params(cfg)[args.actuator]
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    if args.envelope == "bench":
        data = generate_dataset(P, GridSpec(n_force=args.points, n_speed=args.points), DisturbanceOracle(),
                                args.noise, _seed(args, cfg), log=lambda s: print(s, file=sys.stderr))
    else:
        data = loop_surrogate_dataset(P, args.points)
    out = output_dir(args.out, "dataset")
    out.mkdir(parents=True, exist_ok=True)
    data.to_csv(out / "dataset.csv")
    print(f"{len(data)} samples written to {out / 'dataset.csv'}")
    return EXIT_OK


def cmd_train_surrogate(args) -> int:
    cfg = _load(args)
    P = emla_params(cfg)[args.actuator]
    try:
        data = Dataset.from_csv(args.dataset) if args.dataset else loop_surrogate_dataset(P)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read dataset: {exc}") from exc
    tcfg = TrainingConfig(hidden=tuple(args.hidden), max_epochs=args.epochs, patience=20,
                          optimizer=args.optimizer, seed=_seed(args, cfg))
    model, norm, report = train(data, tcfg)
    out = output_dir(args.out, "surrogate")
    out.mkdir(parents=True, exist_ok=True)
    save_model(out / "surrogate.json", model, norm, {"training": {"hidden": list(args.hidden), "epochs": args.epochs,
                                                                   "optimizer": args.optimizer, "seed": tcfg.seed}})
    (out / "training_report.json").write_text(json.dumps(report.to_dict(), indent=2))
    r_test = ", ".join(f"{r:.4f}" for r in report.correlation["test"])
    print(f"stop: {report.stop_reason}; test MSE {report.test_mse:.3e}; test R {r_test}")
    print(f"model written to {out / 'surrogate.json'}")
    return EXIT_OK


def cmd_efficiency_map(args) -> int:
    cfg = _load(args)
    P = emla_params(cfg)[args.actuator]
    alpha = float(cfg["controller"].get("alpha", 0.5))
    model = norm = None
    if alpha > 0:
        model, norm = load_surrogate(args.model or cfg["controller"].get("surrogate", "surrogate_default.json"))
    forces = np.linspace(70e3 / args.forces, 70e3, args.forces)
    speeds = np.linspace(0.07 / args.speeds, 0.07, args.speeds)
    eta = efficiency_map(HybridModel(P, model, norm, alpha=alpha), forces, speeds)
    out = output_dir(args.out, "efficiency")
    out.mkdir(parents=True, exist_ok=True)
    write_efficiency_map(out / "efficiency_map.csv", forces, speeds, eta)
    print(f"efficiency {np.nanmin(eta):.3f} .. {np.nanmax(eta):.3f}; map written to {out / 'efficiency_map.csv'}")
    return EXIT_OK


def cmd_check_gains(args) -> int:
    setup = build(_scenario(args))
    i_d, i_q = setup.plant.emla[:, 0], setup.plant.emla[:, 1]
    ok = True
    print(f"{'actuator':<9}" + "".join(f"{c:>26}" for c in CONDITIONS) + "  result")
    for j, (h, name) in enumerate(zip(setup.controller.models, ("base", "lift", "tilt"))):
        M = h.params.motor
        b1, b2 = betas(h.params, h.alpha, i_d[j], i_q[j])
        chk = gain_condition_check(setup.gains.actuators[j], b1, b2, M.L_d, M.L_q)
        ok &= chk.passed
        print(f"{name:<9}" + "".join(f"{m:>26.6g}" for m in chk.margins) + f"  {'pass' if chk.passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_RUNTIME


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "gen-dataset": cmd_gen_dataset,
    "train-surrogate": cmd_train_surrogate,
    "efficiency-map": cmd_efficiency_map,
    "check-gains": cmd_check_gains,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"emla-vdc: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ModelFileError, yaml.YAMLError) as exc:
        print(f"emla-vdc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrainingError, RuntimeError) as exc:
        print(f"emla-vdc: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
