"""Desk-scale experiment harness: scenarios, movement configurations, sweeps.

Reproduces the headline experiments: the rotatable-link Monte Carlo
half-energy fractions, the five antenna-movement configurations compared over
random user drops, and sweeps over user count, transmit power, rotation
granularity, and optimizer convergence. All randomness flows from explicit
seeds through counter-derived generators, so every record is reproducible.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .channel import ChannelMatrix, gain_matrix
from .errors import ConfigurationError, UnsupportedConfigurationError
from .geometry import AntennaPose, angles_to_unit, cartesian_to_spherical
from .medium import MediumParams
from .mimo import solve_beamforming
from .optimizer import (Constraints, LayoutVariables, OptimizeResult, OptimizerConfig,
                        optimize, quantize_angles)

CONFIGURATION_FLAGS = {
    1: (False, False, False),   # nothing optimized
    2: (False, True, False),    # transmit positions
    3: (True, True, False),     # transmit positions + orientations
    4: (False, False, True),    # receive orientations
    5: (True, True, True),      # everything
}

_REFERENCE_TX = np.array([0.0, 0.0, 0.0])
_REFERENCE_RX = np.array([75.0, -40.0, 50.0])
_VERTICAL = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Scenario:
    """One experiment instance: medium, movement region, users, and budget."""

    medium: MediumParams
    constraints: Constraints
    user_poses: Sequence[AntennaPose]
    antenna_count: int
    total_power: float
    seed: int

    def __post_init__(self):
        if len(self.user_poses) > self.antenna_count:
            raise UnsupportedConfigurationError(
                f"{len(self.user_poses)} users exceed {self.antenna_count} antennas")
        if not self.total_power > 0:
            raise ConfigurationError("total power must be positive")

    @property
    def user_count(self) -> int:
        return len(self.user_poses)

    def fingerprint(self) -> str:
        payload = {
            "wavelength": self.medium.wavelength,
            "relative_permittivity": self.medium.relative_permittivity,
            "noise_power": self.medium.noise_power,
            "antenna_factor": self.medium.antenna_factor,
            "box_min": self.constraints.box_min.tolist(),
            "box_max": self.constraints.box_max.tolist(),
            "min_separation": self.constraints.min_separation,
            "users": [[u.position.tolist(), u.orientation.tolist()] for u in self.user_poses],
            "antenna_count": self.antenna_count,
            "total_power": self.total_power,
            "seed": self.seed,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    """Outcome of one optimization run, reproducible from (scenario, config, seed)."""

    scenario_hash: str
    configuration: int
    user_count: int
    antenna_count: int
    total_power: float
    sinr: List[float]
    rates: List[float]
    gamma_total: float
    gamma_total_db: float
    iterations: int
    trace_db: List[float]
    seed: int
    grid_value: Optional[float] = None
    failure: Optional[str] = None
    extras: Dict[str, float] = field(default_factory=dict)


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng(list(key))


def random_unit_vectors(count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform directions on the unit sphere."""
    vecs = rng.standard_normal((count, 3))
    norms = np.linalg.norm(vecs, axis=1)
    while np.any(norms < 1e-12):
        bad = norms < 1e-12
        vecs[bad] = rng.standard_normal((int(np.sum(bad)), 3))
        norms = np.linalg.norm(vecs, axis=1)
    return vecs / norms[:, None]


def generate_users(user_count: int, cube_half_side: float, seed) -> List[AntennaPose]:
    """Users uniform in the coverage cube with sphere-uniform orientations.

    Positions closer than 1 m to the origin are resampled so the far-field
    gain stays finite.
    """
    if user_count < 1:
        raise ConfigurationError("need at least one user")
    rng = seed if isinstance(seed, np.random.Generator) else _rng(seed)
    positions = rng.uniform(-cube_half_side, cube_half_side, size=(user_count, 3))
    too_close = np.linalg.norm(positions, axis=1) < 1.0
    while np.any(too_close):
        positions[too_close] = rng.uniform(
            -cube_half_side, cube_half_side, size=(int(np.sum(too_close)), 3))
        too_close = np.linalg.norm(positions, axis=1) < 1.0
    orientations = random_unit_vectors(user_count, rng)
    return [AntennaPose(position=p, orientation=n) for p, n in zip(positions, orientations)]


def random_tx_positions(count: int, constraints: Constraints,
                        rng: np.random.Generator, max_attempts: int = 10000) -> np.ndarray:
    """Dart-throwing placement inside the box with the minimum separation kept."""
    placed: List[np.ndarray] = []
    for _ in range(max_attempts):
        candidate = rng.uniform(constraints.box_min, constraints.box_max)
        if all(np.linalg.norm(candidate - q) >= constraints.min_separation for q in placed):
            placed.append(candidate)
            if len(placed) == count:
                return np.array(placed)
    raise ConfigurationError(
        f"could not place {count} antennas with separation {constraints.min_separation}")


def random_initial_layout(scenario: Scenario, rng: np.random.Generator) -> LayoutVariables:
    """Scenario-seeded random layout: the starting point of every configuration.

    Non-optimized quantities stay at these values; optimized blocks ascend
    from them, which makes the config-ordering comparison initialization-fair.
    """
    positions = random_tx_positions(scenario.antenna_count, scenario.constraints, rng)
    tx_dirs = random_unit_vectors(scenario.antenna_count, rng)
    tx_angles = np.array([[a.polar, a.azimuthal]
                          for a in map(cartesian_to_spherical, tx_dirs)])
    rx_angles = np.array([[a.polar, a.azimuthal]
                          for a in (cartesian_to_spherical(u.orientation)
                                    for u in scenario.user_poses)])
    return LayoutVariables(tx_angles=tx_angles, tx_positions=positions, rx_angles=rx_angles)


def make_scenario(user_count: int, seed: int, medium: Optional[MediumParams] = None,
                  antenna_count: int = 8, total_power: float = 0.5,
                  cube_half_side: float = 100.0,
                  region_half_side: Optional[float] = None) -> Scenario:
    """Standard scenario: users in the coverage cube, movement box of +/-100 wavelengths."""
    medium = medium or MediumParams()
    if region_half_side is None:
        region_half_side = 100.0 * medium.wavelength
    constraints = Constraints(
        box_min=-region_half_side * np.ones(3),
        box_max=region_half_side * np.ones(3),
        min_separation=medium.wavelength / 2.0,
    )
    users = generate_users(user_count, cube_half_side, _rng(seed, 0))
    return Scenario(medium=medium, constraints=constraints, user_poses=users,
                    antenna_count=antenna_count, total_power=total_power, seed=seed)


def _half_energy_magnitudes(kind: str, polar, azimuthal, medium: MediumParams) -> np.ndarray:
    """|h| for the fixed reference link with one antenna swept over orientations."""
    directions = angles_to_unit(np.asarray(polar, float), np.asarray(azimuthal, float))
    flat = directions.reshape(-1, 3)
    if kind == "tx_random":
        gains = gain_matrix(_REFERENCE_TX[None, :], flat, _REFERENCE_RX[None, :],
                            _VERTICAL[None, :], medium)[0]
    elif kind == "rx_random":
        # One receiver per sampled orientation, same position.
        rx_pos = np.tile(_REFERENCE_RX, (flat.shape[0], 1))
        gains = gain_matrix(_REFERENCE_TX[None, :], _VERTICAL[None, :],
                            rx_pos, flat, medium)[:, 0]
    else:
        raise ConfigurationError(f"unknown scenario kind {kind!r}")
    return np.abs(gains).reshape(np.shape(polar))


def reference_link_peak(kind: str, medium: Optional[MediumParams] = None,
                        grid_step_deg: float = 0.25) -> float:
    """Peak |h| of the reference link over a dense orientation grid."""
    medium = medium or MediumParams()
    polar = np.deg2rad(np.arange(0.0, 180.0 + grid_step_deg / 2, grid_step_deg))
    azimuthal = np.deg2rad(np.arange(0.0, 360.0, grid_step_deg))
    pp, aa = np.meshgrid(polar, azimuthal, indexing="ij")
    return float(_half_energy_magnitudes(kind, pp, aa, medium).max())


def monte_carlo_half_energy(scenario_kind: str, samples: int, seed: int,
                            medium: Optional[MediumParams] = None,
                            sphere_uniform: bool = False,
                            grid_step_deg: float = 0.25,
                            batch: int = 1_000_000) -> float:
    """Fraction of random orientations delivering at least half the peak energy.

    The fixed link places the transmitter at the origin and the receiver at
    (75, -40, 50) with the non-random antenna vertical. Angles are sampled
    uniformly in (polar, azimuthal) by default; sphere_uniform switches to
    area-uniform directions.
    """
    if samples < 1:
        raise ConfigurationError("need at least one Monte Carlo sample")
    medium = medium or MediumParams()
    peak = reference_link_peak(scenario_kind, medium, grid_step_deg)
    threshold = 0.5 * peak**2

    rng = _rng(seed, 1)
    hits = 0
    remaining = samples
    while remaining > 0:
        n = min(batch, remaining)
        if sphere_uniform:
            cos_polar = rng.uniform(-1.0, 1.0, n)
            polar = np.arccos(cos_polar)
        else:
            polar = rng.uniform(0.0, np.pi, n)
        azimuthal = rng.uniform(0.0, 2.0 * np.pi, n)
        mags = _half_energy_magnitudes(scenario_kind, polar, azimuthal, medium)
        hits += int(np.sum(mags**2 >= threshold))
        remaining -= n
    return hits / samples


def evaluate_layout(layout: LayoutVariables, scenario: Scenario):
    """Channel build + zero forcing + water filling for a fixed layout."""
    rx_positions = np.array([u.position for u in scenario.user_poses])
    gains = gain_matrix(layout.anchor_positions(), layout.tx_orientations(),
                        rx_positions, layout.rx_orientations(), scenario.medium)
    return solve_beamforming(ChannelMatrix(entries=gains), scenario.total_power,
                             scenario.medium.noise_power)


def run_configuration(scenario: Scenario, config_id: int,
                      optimizer_config: Optional[OptimizerConfig] = None,
                      initial_layout: Optional[LayoutVariables] = None) -> RunRecord:
    """Apply one movement configuration to a scenario and record the outcome."""
    if config_id not in CONFIGURATION_FLAGS:
        raise ConfigurationError(f"configuration id must be 1..5, got {config_id}")
    optimizer_config = optimizer_config or OptimizerConfig()
    layout = initial_layout.copy() if initial_layout is not None \
        else random_initial_layout(scenario, _rng(scenario.seed, 2))
    tx_orient, tx_pos, rx_orient = CONFIGURATION_FLAGS[config_id]
    layout.optimize_tx_orientation = tx_orient
    layout.optimize_tx_position = tx_pos
    layout.optimize_rx_orientation = rx_orient

    try:
        result = optimize(layout, scenario.user_poses, scenario.medium,
                          scenario.total_power, scenario.constraints, optimizer_config)
    except Exception as exc:  # recorded as a failed run, not raised
        return RunRecord(
            scenario_hash=scenario.fingerprint(), configuration=config_id,
            user_count=scenario.user_count, antenna_count=scenario.antenna_count,
            total_power=scenario.total_power, sinr=[], rates=[],
            gamma_total=math.nan, gamma_total_db=math.nan, iterations=0,
            trace_db=[], seed=scenario.seed, failure=f"{type(exc).__name__}: {exc}")
    return record_from_result(scenario, config_id, result)


def record_from_result(scenario: Scenario, config_id: int,
                       result: OptimizeResult) -> RunRecord:
    metrics = result.beamforming.metrics
    gamma = metrics.total_sinr
    return RunRecord(
        scenario_hash=scenario.fingerprint(),
        configuration=config_id,
        user_count=scenario.user_count,
        antenna_count=scenario.antenna_count,
        total_power=scenario.total_power,
        sinr=[float(v) for v in metrics.sinr],
        rates=[float(v) for v in metrics.rates],
        gamma_total=float(gamma),
        gamma_total_db=10.0 * math.log10(gamma) if gamma > 0 else -math.inf,
        iterations=result.trace.iterations,
        trace_db=list(result.trace.total_sinr_db),
        seed=scenario.seed,
    )


SWEEP_KINDS = ("users", "power", "granularity", "convergence")


def _sweep_cell(kind: str, grid: Sequence[float], grid_index: int, repetition: int,
                seed: int, medium: MediumParams, optimizer_config: OptimizerConfig,
                antenna_count: int, total_power: float, user_count: int,
                config_ids: Sequence[int]) -> List[RunRecord]:
    """All records for one (grid point, repetition) cell, in a fixed order."""
    records: List[RunRecord] = []
    if kind in ("users", "convergence"):
        k_users = int(grid[grid_index])
        scenario = make_scenario(k_users, seed=int(_mix(seed, grid_index, repetition)),
                                 medium=medium, antenna_count=antenna_count,
                                 total_power=total_power)
        layout = random_initial_layout(scenario, _rng(scenario.seed, 2))
        for cid in config_ids:
            rec = run_configuration(scenario, cid, optimizer_config, layout)
            rec.grid_value = float(k_users)
            records.append(rec)
    elif kind == "power":
        power = float(grid[grid_index])
        scenario = make_scenario(user_count, seed=int(_mix(seed, grid_index, repetition)),
                                 medium=medium, antenna_count=antenna_count,
                                 total_power=power)
        layout = random_initial_layout(scenario, _rng(scenario.seed, 2))
        for cid in config_ids:
            rec = run_configuration(scenario, cid, optimizer_config, layout)
            rec.grid_value = power
            records.append(rec)
    else:  # granularity: one full-precision optimization, quantized per resolution
        scenario = make_scenario(user_count, seed=int(_mix(seed, 0, repetition)),
                                 medium=medium, antenna_count=antenna_count,
                                 total_power=total_power)
        layout = random_initial_layout(scenario, _rng(scenario.seed, 2))
        layout.optimize_tx_orientation = True
        layout.optimize_tx_position = True
        layout.optimize_rx_orientation = True
        result = optimize(layout, scenario.user_poses, scenario.medium,
                          scenario.total_power, scenario.constraints, optimizer_config)
        full = record_from_result(scenario, 5, result)
        for resolution in grid:
            rec = quantized_record(scenario, result, float(resolution))
            rec.extras["unquantized_db"] = full.gamma_total_db
            records.append(rec)
    return records


def sweep(kind: str, grid: Sequence[float], repetitions: int, seed: int,
          medium: Optional[MediumParams] = None,
          optimizer_config: Optional[OptimizerConfig] = None,
          antenna_count: int = 8, total_power: float = 0.5,
          user_count: int = 8,
          configurations: Optional[Sequence[int]] = None,
          workers: int = 1) -> List[RunRecord]:
    """Run one experiment family over a parameter grid.

    users:       grid = user counts; each repetition runs the requested
                 configurations (default all five) on a fresh user drop.
    power:       grid = total powers; configurations default to (1, 5).
    granularity: grid = quantization resolutions in degrees; a single full-
                 precision optimization per repetition is quantized at each
                 resolution and re-evaluated.
    convergence: grid = user counts; records configuration-1 and -5 traces.

    Cells own counter-derived random streams and results are aggregated in a
    fixed index order, so the output is independent of the worker count.
    """
    if kind not in SWEEP_KINDS:
        raise ConfigurationError(f"unknown sweep kind {kind!r}")
    if len(grid) == 0:
        raise ConfigurationError("sweep grid must be nonempty")
    medium = medium or MediumParams()
    optimizer_config = optimizer_config or OptimizerConfig()
    if configurations:
        config_ids: Sequence[int] = tuple(configurations)
    elif kind == "users":
        config_ids = (1, 2, 3, 4, 5)
    else:
        config_ids = (1, 5)

    if kind == "granularity":
        tasks = [(0, rep) for rep in range(repetitions)]
    else:
        tasks = [(gi, rep) for gi in range(len(grid)) for rep in range(repetitions)]

    def run_cell(task):
        gi, rep = task
        return _sweep_cell(kind, tuple(grid), gi, rep, seed, medium, optimizer_config,
                           antenna_count, total_power, user_count, config_ids)

    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cell_lists = list(pool.map(
                _sweep_cell_star,
                [(kind, tuple(grid), gi, rep, seed, medium, optimizer_config,
                  antenna_count, total_power, user_count, tuple(config_ids))
                 for gi, rep in tasks]))
    else:
        cell_lists = [run_cell(task) for task in tasks]

    records: List[RunRecord] = []
    for cell in cell_lists:
        records.extend(cell)
    return records


def _sweep_cell_star(args) -> List[RunRecord]:
    return _sweep_cell(*args)


def quantized_record(scenario: Scenario, result: OptimizeResult,
                     resolution_deg: float) -> RunRecord:
    """Quantize an optimized layout's angles and re-evaluate the link metrics."""
    quantized = quantize_angles(result.layout, resolution_deg)
    solution = evaluate_layout(quantized, scenario)
    gamma = solution.metrics.total_sinr
    return RunRecord(
        scenario_hash=scenario.fingerprint(), configuration=5,
        user_count=scenario.user_count, antenna_count=scenario.antenna_count,
        total_power=scenario.total_power,
        sinr=[float(v) for v in solution.metrics.sinr],
        rates=[float(v) for v in solution.metrics.rates],
        gamma_total=float(gamma),
        gamma_total_db=10.0 * math.log10(gamma) if gamma > 0 else -math.inf,
        iterations=result.trace.iterations,
        trace_db=list(result.trace.total_sinr_db),
        seed=scenario.seed,
        grid_value=resolution_deg,
    )


def _mix(seed: int, grid_index: int, repetition: int) -> int:
    """Deterministic per-cell seed derivation."""
    blob = f"{seed}:{grid_index}:{repetition}".encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:6], "big")
