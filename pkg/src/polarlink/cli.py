"""Batch command-line front end.

Two commands: `channel-eval` prints the gain report of one dipole link, and
`run` dispatches the experiment families, writing one CSV per run plus a JSON
provenance sidecar. Exit codes: 0 success, 2 usage, 3 I/O, 4 infeasible
geometry or scenario, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .channel import element_gain, matching_efficiency, reflection_coefficients
from .config import RunConfig
from .errors import (ConfigurationError, DegeneratePolarizationError, GeometryError,
                     InfeasibleLayoutError, NumericalError, PolarlinkError,
                     SingularChannelError, UnsupportedConfigurationError)
from .geometry import (AntennaPose, emission_angle, incident_angle,
                       polarization_matching_angle)
from .harness import (RunRecord, make_scenario, monte_carlo_half_energy,
                      random_initial_layout, reference_link_peak, run_configuration,
                      sweep, _half_energy_magnitudes, _rng)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4
EXIT_NUMERICAL = 5

RUN_SUBCOMMANDS = ("scenario1", "scenario2", "montecarlo", "optimize",
                   "sweep-users", "sweep-power", "sweep-granularity", "convergence")


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.12g}"
    return str(value)


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    import csv
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_sidecar(out_path, config: RunConfig, subcommand: str, seed: int,
                  reps: int, extra: Optional[dict] = None) -> None:
    meta = {
        "tool": "polarlink",
        "version": __version__,
        "subcommand": subcommand,
        "seed": seed,
        "repetitions": reps,
        "config_hash": config.config_hash(),
        "config": config.to_dict(),
    }
    if extra:
        meta.update(extra)
    with open(f"{out_path}.meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def _parse_triple(text: str, flag: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigurationError(f"{flag} expects three comma-separated numbers")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ConfigurationError(f"{flag}: {exc}") from None


def cmd_channel_eval(args) -> int:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    medium = config.medium()
    try:
        tx = AntennaPose(position=_parse_triple(args.tx_pos, "--tx-pos"),
                         orientation=_parse_triple(args.tx_dir, "--tx-dir"))
        rx = AntennaPose(position=_parse_triple(args.rx_pos, "--rx-pos"),
                         orientation=_parse_triple(args.rx_dir, "--rx-dir"))
        theta_e = emission_angle(rx.position, tx, far_field=True)
        theta_i = incident_angle(rx)
        gamma_par, gamma_perp = reflection_coefficients(theta_i, medium)
        try:
            alpha = polarization_matching_angle(tx, rx)
            match = matching_efficiency(theta_i, alpha, medium)
        except DegeneratePolarizationError:
            alpha = math.nan
            match = 0.0
        gain = element_gain(tx, rx, medium)
    except GeometryError as exc:
        print(f"error: invalid geometry: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE

    fields = [
        ("gain_magnitude", abs(gain)),
        ("gain_phase_rad", math.atan2(gain.imag, gain.real)),
        ("emission_angle_rad", theta_e),
        ("incident_angle_rad", theta_i),
        ("matching_angle_rad", alpha),
        ("gamma_parallel", gamma_par),
        ("gamma_perpendicular", gamma_perp),
        ("matching_efficiency", match),
    ]
    width = max(len(name) for name, _ in fields)
    for name, value in fields:
        print(f"{name:<{width}}  {_fmt(float(value))}")
    return EXIT_OK


def _record_rows(records: Sequence[RunRecord]):
    header = ["grid_value", "configuration", "users", "antennas", "power_w",
              "gamma_total", "gamma_total_db", "average_rate", "iterations",
              "scenario_hash", "seed", "failure", "trace_db"]
    rows = []
    for rec in records:
        avg_rate = 0.5 * math.log2(1.0 + rec.gamma_total) if rec.gamma_total == rec.gamma_total else math.nan
        rows.append([
            rec.grid_value if rec.grid_value is not None else "",
            rec.configuration, rec.user_count, rec.antenna_count, rec.total_power,
            rec.gamma_total, rec.gamma_total_db, avg_rate, rec.iterations,
            rec.scenario_hash, rec.seed, rec.failure or "",
            ";".join(_fmt(v) for v in rec.trace_db),
        ])
    return header, rows


def cmd_run(args) -> int:
    try:
        config = RunConfig.from_file(args.config) if args.config else RunConfig()
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.seed is not None:
        config.seed = args.seed
    if args.reps is not None:
        config.repetitions = args.reps

    medium = config.medium()
    optimizer_config = config.optimizer()
    sub = args.experiment
    try:
        if sub in ("scenario1", "scenario2"):
            kind = "tx_random" if sub == "scenario1" else "rx_random"
            step = 1.0
            polar = np.deg2rad(np.arange(0.0, 180.0 + step / 2, step))
            azimuthal = np.deg2rad(np.arange(0.0, 360.0, step))
            pp, aa = np.meshgrid(polar, azimuthal, indexing="ij")
            mags = _half_energy_magnitudes(kind, pp, aa, medium)
            rows = [[np.rad2deg(p), np.rad2deg(a), m, m * m]
                    for p, a, m in zip(pp.ravel(), aa.ravel(), mags.ravel())]
            write_csv(args.out, ["polar_deg", "azimuthal_deg", "gain_magnitude",
                                 "gain_power"], rows)
            write_sidecar(args.out, config, sub, config.seed, 1,
                          {"peak_gain": reference_link_peak(kind, medium)})
        elif sub == "montecarlo":
            rows = []
            for kind in ("tx_random", "rx_random"):
                frac = monte_carlo_half_energy(
                    kind, config.monte_carlo_samples, config.seed, medium,
                    sphere_uniform=config.monte_carlo_sphere_uniform)
                rows.append([kind, config.monte_carlo_samples, frac])
            write_csv(args.out, ["scenario_kind", "samples", "half_energy_fraction"], rows)
            write_sidecar(args.out, config, sub, config.seed, 1)
        elif sub == "optimize":
            scenario = make_scenario(config.user_count, seed=config.seed, medium=medium,
                                     antenna_count=config.antenna_count,
                                     total_power=config.total_power_w,
                                     cube_half_side=config.coverage_half_side_m,
                                     region_half_side=config.region_half_side_m)
            layout = random_initial_layout(scenario, _rng(scenario.seed, 2))
            record = run_configuration(scenario, 5, optimizer_config, layout)
            if record.failure:
                print(f"error: optimization failed: {record.failure}", file=sys.stderr)
                return EXIT_NUMERICAL
            rows = [[i, db] for i, db in enumerate(record.trace_db)]
            write_csv(args.out, ["iteration", "gamma_total_db"], rows)
            write_sidecar(args.out, config, sub, config.seed, 1,
                          {"scenario_hash": record.scenario_hash,
                           "gamma_total_db": record.gamma_total_db})
        else:
            kind = {"sweep-users": "users", "sweep-power": "power",
                    "sweep-granularity": "granularity", "convergence": "convergence"}[sub]
            grid = {"users": config.users_grid, "power": config.power_grid_w,
                    "granularity": config.granularity_grid_deg,
                    "convergence": [config.user_count]}[kind]
            configurations = config.configurations if kind == "users" else None
            records = sweep(kind, grid, config.repetitions, config.seed, medium,
                            optimizer_config, antenna_count=config.antenna_count,
                            total_power=config.total_power_w, user_count=config.user_count,
                            configurations=configurations,
                            workers=max(args.threads, 1))
            header, rows = _record_rows(records)
            write_csv(args.out, header, rows)
            write_sidecar(args.out, config, sub, config.seed, config.repetitions)
    except (InfeasibleLayoutError, UnsupportedConfigurationError) as exc:
        print(f"error: infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConfigurationError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SingularChannelError, NumericalError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarlink",
        description="Polarization-aware movable-antenna link simulator and optimizer.")
    sub = parser.add_subparsers(dest="command", required=True)

    ce = sub.add_parser("channel-eval", help="evaluate one dipole link")
    ce.add_argument("--tx-pos", required=True, help="transmitter position x,y,z (m)")
    ce.add_argument("--tx-dir", required=True, help="transmitter orientation x,y,z")
    ce.add_argument("--rx-pos", required=True, help="receiver position x,y,z (m)")
    ce.add_argument("--rx-dir", required=True, help="receiver orientation x,y,z")
    ce.add_argument("--config", default=None, help="JSON run configuration")
    ce.set_defaults(func=cmd_channel_eval)

    run = sub.add_parser("run", help="run a batch experiment")
    run.add_argument("experiment", choices=RUN_SUBCOMMANDS)
    run.add_argument("--config", default=None, help="JSON run configuration")
    run.add_argument("--out", required=True, help="output CSV path")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--reps", type=int, default=None, help="override repetitions")
    run.add_argument("--threads", type=int, default=1, help="parallel workers for sweeps")
    run.set_defaults(func=cmd_run)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PolarlinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
