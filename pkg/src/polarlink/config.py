"""Run configuration: file schema, defaults, and hashing.

The configuration file is flat JSON; every key is optional and falls back to
the defaults below (30 GHz carrier, 1 cm wavelength, -20 dBm noise, 0.5 W
budget, relative permittivity 2, movement box of +/- 100 wavelengths, 8
transmit antennas).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import List, Optional

from .errors import ConfigurationError
from .medium import SPEED_OF_LIGHT, VACUUM_PERMEABILITY, MediumParams
from .optimizer import DEFAULT_BLOCK_ORDER, OptimizerConfig


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


@dataclass
class RunConfig:
    """Everything a batch run needs: medium, scenario shape, optimizer knobs, grids."""

    frequency_hz: Optional[float] = 30e9
    wavelength_m: float = 0.01
    noise_power_dbm: float = -20.0
    total_power_w: float = 0.5
    relative_permittivity: float = 2.0
    permeability: float = VACUUM_PERMEABILITY
    antenna_factor: float = 1.0
    region_half_side_m: Optional[float] = None     # defaults to 100 wavelengths
    coverage_half_side_m: float = 100.0
    antenna_count: int = 8
    user_count: int = 8
    seed: int = 1
    repetitions: int = 100
    monte_carlo_samples: int = 1_000_000
    monte_carlo_sphere_uniform: bool = False
    users_grid: List[int] = field(default_factory=lambda: [1, 2, 4, 8])
    power_grid_w: List[float] = field(default_factory=lambda: [0.125, 0.25, 0.5, 1.0, 2.0])
    granularity_grid_deg: List[float] = field(default_factory=lambda: [10, 30, 50, 80])
    configurations: List[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    max_outer_iterations: int = 100
    inner_steps: int = 3
    convergence_tol: float = 1e-4
    initial_step_angle: float = 0.1
    block_order: List[str] = field(default_factory=lambda: list(DEFAULT_BLOCK_ORDER))

    def __post_init__(self):
        if self.frequency_hz is not None:
            product = self.frequency_hz * self.wavelength_m
            if abs(product - SPEED_OF_LIGHT) > 1e-3 * SPEED_OF_LIGHT:
                raise ConfigurationError(
                    f"frequency x wavelength = {product:.6g} m/s disagrees with the "
                    f"speed of light by more than 0.1%")
        if self.user_count > self.antenna_count:
            raise ConfigurationError(
                f"{self.user_count} users exceed {self.antenna_count} antennas")
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be at least 1")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def medium(self) -> MediumParams:
        return MediumParams(
            wavelength=self.wavelength_m,
            relative_permittivity=self.relative_permittivity,
            permeability=self.permeability,
            antenna_factor=self.antenna_factor,
            noise_power=dbm_to_watts(self.noise_power_dbm),
        )

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(
            max_outer_iterations=self.max_outer_iterations,
            inner_steps=self.inner_steps,
            convergence_tol=self.convergence_tol,
            initial_step_angle=self.initial_step_angle,
            block_order=tuple(self.block_order),
            seed=self.seed,
        )
