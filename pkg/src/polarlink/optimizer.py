"""Alternating projected gradient ascent over antenna orientations and positions.

Maximizes the equivalent total SINR of the zero-forcing + water-filling link
by cycling through three variable blocks (receive orientations, transmit
orientations, transmit positions). Orientations are parameterized by their
polar/azimuthal angles so ascent steps stay unconstrained; positions are kept
feasible by cyclic projection onto the movement box and the half-space
linearization of the pairwise separation constraint.

Under the plane-wave model a translation changes only the phase of an
antenna's channel entries, and a phase pattern is something the precoding
stage can realize directly, so moving an antenna buys nothing that the
precoder does not already provide. The objective therefore evaluates the
channel at the layout's phase anchor (the placement captured when
optimization starts): position updates never change the objective, only the
feasibility bookkeeping.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .channel import ChannelMatrix, gain_matrix
from .errors import (ConfigurationError, InfeasibleLayoutError, ProjectionError,
                     SingularChannelError)
from .geometry import AntennaPose, angles_to_unit
from .medium import MediumParams
from .mimo import BeamformingSolution, solve_beamforming

_TWO_PI = 2.0 * np.pi
_FEASIBILITY_TOL = 1e-9
_PROJECTION_SWEEP_CAP = 1000

BLOCK_RX_ANGLES = "rx_angles"
BLOCK_TX_ANGLES = "tx_angles"
BLOCK_TX_POSITIONS = "tx_positions"
DEFAULT_BLOCK_ORDER = (BLOCK_RX_ANGLES, BLOCK_TX_ANGLES, BLOCK_TX_POSITIONS)


@dataclass(frozen=True)
class Constraints:
    """Axis-aligned movement box plus the minimum pairwise antenna separation."""

    box_min: np.ndarray
    box_max: np.ndarray
    min_separation: float

    def __post_init__(self):
        object.__setattr__(self, "box_min", np.asarray(self.box_min, dtype=float))
        object.__setattr__(self, "box_max", np.asarray(self.box_max, dtype=float))
        if self.box_min.shape != (3,) or self.box_max.shape != (3,):
            raise ConfigurationError("box bounds must be 3-vectors")
        if np.any(self.box_max <= self.box_min):
            raise ConfigurationError("movement box is empty")
        if not self.min_separation > 0:
            raise ConfigurationError("minimum separation must be positive")


@dataclass
class LayoutVariables:
    """Optimization variables: angles per antenna plus the active-block flags.

    tx_angles is (L, 2) of (polar, azimuthal); rx_angles is (K, 2);
    tx_positions is (L, 3) in meters. phase_anchor, when set, is the placement
    whose translation phases the objective uses; it stays fixed while
    tx_positions move (plane-wave translations are precoder-equivalent).
    """

    tx_angles: np.ndarray
    tx_positions: np.ndarray
    rx_angles: np.ndarray
    optimize_tx_orientation: bool = True
    optimize_tx_position: bool = True
    optimize_rx_orientation: bool = True
    phase_anchor: Optional[np.ndarray] = None

    def __post_init__(self):
        self.tx_angles = np.array(self.tx_angles, dtype=float)
        self.tx_positions = np.array(self.tx_positions, dtype=float)
        self.rx_angles = np.array(self.rx_angles, dtype=float)
        if self.phase_anchor is not None:
            self.phase_anchor = np.array(self.phase_anchor, dtype=float)

    def copy(self) -> "LayoutVariables":
        return LayoutVariables(
            tx_angles=self.tx_angles.copy(),
            tx_positions=self.tx_positions.copy(),
            rx_angles=self.rx_angles.copy(),
            optimize_tx_orientation=self.optimize_tx_orientation,
            optimize_tx_position=self.optimize_tx_position,
            optimize_rx_orientation=self.optimize_rx_orientation,
            phase_anchor=None if self.phase_anchor is None else self.phase_anchor.copy(),
        )

    def anchor_positions(self) -> np.ndarray:
        return self.tx_positions if self.phase_anchor is None else self.phase_anchor

    def tx_orientations(self) -> np.ndarray:
        return angles_to_unit(self.tx_angles[:, 0], self.tx_angles[:, 1])

    def rx_orientations(self) -> np.ndarray:
        return angles_to_unit(self.rx_angles[:, 0], self.rx_angles[:, 1])

    def canonicalize_angles(self) -> None:
        """Wrap both angle arrays back to polar in [0, pi], azimuth in [0, 2*pi)."""
        for arr in (self.tx_angles, self.rx_angles):
            arr[:] = wrap_angles(arr)


def wrap_angles(angles: np.ndarray) -> np.ndarray:
    """Map arbitrary (polar, azimuthal) pairs to the canonical ranges.

    A polar angle outside [0, pi] is folded back with a half-turn of azimuth,
    preserving the orientation vector exactly.
    """
    polar = np.mod(angles[..., 0], _TWO_PI)
    # np.mod can round a tiny negative input up to the modulus itself.
    polar = np.where(polar >= _TWO_PI, 0.0, polar)
    azimuthal = angles[..., 1].copy()
    over = polar > np.pi
    polar = np.where(over, _TWO_PI - polar, polar)
    azimuthal = np.where(over, azimuthal + np.pi, azimuthal)
    azimuthal = np.mod(azimuthal, _TWO_PI)
    azimuthal = np.where(azimuthal >= _TWO_PI, 0.0, azimuthal)
    return np.stack([polar, azimuthal], axis=-1)


@dataclass(frozen=True)
class OptimizerConfig:
    max_outer_iterations: int = 100
    block_order: Sequence[str] = DEFAULT_BLOCK_ORDER
    inner_steps: int = 3
    fd_step_angle: float = 1e-5
    fd_step_position: float = 1e-5
    initial_step_angle: float = 0.1
    initial_step_position: Optional[float] = None   # defaults to the wavelength
    armijo_c: float = 1e-4
    shrink_factor: float = 0.5
    max_backtracks: int = 30
    convergence_tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.max_outer_iterations <= 0 or self.inner_steps <= 0:
            raise ConfigurationError("iteration counts must be positive")
        for name in ("fd_step_angle", "fd_step_position", "initial_step_angle",
                     "armijo_c", "shrink_factor"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if not 0.0 < self.convergence_tol < 1.0:
            raise ConfigurationError("convergence tolerance must lie in (0, 1)")
        unknown = set(self.block_order) - set(DEFAULT_BLOCK_ORDER)
        if unknown:
            raise ConfigurationError(f"unknown blocks in block order: {sorted(unknown)}")


@dataclass
class ConvergenceTrace:
    """Objective history across accepted outer iterations (non-decreasing)."""

    total_sinr: List[float] = field(default_factory=list)
    block_improvements: List[dict] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def total_sinr_db(self) -> List[float]:
        return [10.0 * math.log10(v) if v > 0 else -math.inf for v in self.total_sinr]

    @property
    def iterations(self) -> int:
        return max(len(self.total_sinr) - 1, 0)


@dataclass(frozen=True)
class OptimizeResult:
    layout: LayoutVariables
    beamforming: BeamformingSolution
    trace: ConvergenceTrace


def objective(layout: LayoutVariables, users: Sequence[AntennaPose],
              medium: MediumParams, total_power: float) -> float:
    """Equivalent total SINR of the layout under zero forcing + water filling.

    Translation phases are taken from the layout's phase anchor, so the value
    is invariant under moves of tx_positions once the anchor is pinned.
    """
    rx_positions = np.array([u.position for u in users])
    gains = gain_matrix(layout.anchor_positions(), layout.tx_orientations(),
                        rx_positions, layout.rx_orientations(), medium)
    solution = solve_beamforming(ChannelMatrix(entries=gains), total_power, medium.noise_power)
    return solution.metrics.total_sinr


def _block_vector(layout: LayoutVariables, block: str) -> np.ndarray:
    if block == BLOCK_TX_ANGLES:
        return layout.tx_angles.ravel().copy()
    if block == BLOCK_TX_POSITIONS:
        return layout.tx_positions.ravel().copy()
    if block == BLOCK_RX_ANGLES:
        return layout.rx_angles.ravel().copy()
    raise ConfigurationError(f"unknown block {block!r}")


def _with_block_vector(layout: LayoutVariables, block: str, vec: np.ndarray) -> LayoutVariables:
    out = layout.copy()
    if block == BLOCK_TX_ANGLES:
        out.tx_angles = vec.reshape(out.tx_angles.shape)
    elif block == BLOCK_TX_POSITIONS:
        out.tx_positions = vec.reshape(out.tx_positions.shape)
    elif block == BLOCK_RX_ANGLES:
        out.rx_angles = vec.reshape(out.rx_angles.shape)
    else:
        raise ConfigurationError(f"unknown block {block!r}")
    return out


def finite_difference_gradient(layout: LayoutVariables, block: str,
                               func: Callable[[LayoutVariables], float],
                               fd_step: float) -> np.ndarray:
    """Central-difference gradient of func over one variable block.

    Angle coordinates may momentarily leave their canonical ranges during the
    probe; the orientation parameterization is periodic, so no wrapping is
    needed for the evaluation itself.
    """
    base = _block_vector(layout, block)
    grad = np.zeros_like(base)
    for i in range(base.size):
        bumped = base.copy()
        bumped[i] = base[i] + fd_step
        high = func(_with_block_vector(layout, block, bumped))
        bumped[i] = base[i] - fd_step
        low = func(_with_block_vector(layout, block, bumped))
        grad[i] = (high - low) / (2.0 * fd_step)
    return grad


def _pair_halfspace_violations(positions: np.ndarray, previous: np.ndarray,
                               constraints: Constraints) -> float:
    """Worst violation (meters) of the linearized separation half-spaces."""
    worst = 0.0
    count = positions.shape[0]
    for ell in range(count):
        for i in range(count):
            if i == ell:
                continue
            direction = previous[ell] - positions[i]
            norm = np.linalg.norm(direction)
            if norm == 0.0:
                worst = max(worst, constraints.min_separation)
                continue
            unit_dir = direction / norm
            boundary = positions[i] + constraints.min_separation * unit_dir
            worst = max(worst, float(-np.dot(unit_dir, positions[ell] - boundary)))
    return worst


def separation_projection(positions, previous, constraints: Constraints) -> np.ndarray:
    """Project candidate positions onto the box and the linearized separation set.

    For each ordered pair the separation sphere around antenna i is replaced by
    the supporting half-space at the boundary point seen from the previous
    iterate; cyclic projection sweeps all half-spaces and the box until every
    constraint holds within 1e-9 m.
    """
    pos = np.array(positions, dtype=float)
    prev = np.asarray(previous, dtype=float)
    count = pos.shape[0]
    for _ in range(_PROJECTION_SWEEP_CAP):
        pos = np.clip(pos, constraints.box_min, constraints.box_max)
        for ell in range(count):
            for i in range(count):
                if i == ell:
                    continue
                direction = prev[ell] - pos[i]
                norm = np.linalg.norm(direction)
                if norm == 0.0:
                    raise ProjectionError(
                        "previous iterate coincides with another antenna; half-space undefined")
                unit_dir = direction / norm
                boundary = pos[i] + constraints.min_separation * unit_dir
                violation = np.dot(unit_dir, pos[ell] - boundary)
                if violation < 0.0:
                    pos[ell] = pos[ell] - violation * unit_dir
        inside = np.all(pos >= constraints.box_min - _FEASIBILITY_TOL) and \
            np.all(pos <= constraints.box_max + _FEASIBILITY_TOL)
        if inside and _pair_halfspace_violations(pos, prev, constraints) <= _FEASIBILITY_TOL:
            return np.clip(pos, constraints.box_min, constraints.box_max)
    raise ProjectionError(
        f"no feasible point found after {_PROJECTION_SWEEP_CAP} projection sweeps")


def check_feasible(positions: np.ndarray, constraints: Constraints) -> bool:
    """True when all positions sit in the box with pairwise separation respected."""
    pos = np.asarray(positions, dtype=float)
    if np.any(pos < constraints.box_min - _FEASIBILITY_TOL) or \
            np.any(pos > constraints.box_max + _FEASIBILITY_TOL):
        return False
    count = pos.shape[0]
    for ell in range(count):
        for i in range(ell + 1, count):
            if np.linalg.norm(pos[ell] - pos[i]) < constraints.min_separation - _FEASIBILITY_TOL:
                return False
    return True


def default_initial_layout(antenna_count: int, user_count: int,
                           constraints: Constraints, medium: MediumParams) -> LayoutVariables:
    """Vertical orientations and a half-wavelength grid centered in the box."""
    spacing = medium.wavelength / 2.0
    center = 0.5 * (constraints.box_min + constraints.box_max)
    offsets = (np.arange(antenna_count) - 0.5 * (antenna_count - 1)) * spacing
    positions = np.tile(center, (antenna_count, 1))
    positions[:, 0] += offsets
    return LayoutVariables(
        tx_angles=np.zeros((antenna_count, 2)),
        tx_positions=positions,
        rx_angles=np.zeros((user_count, 2)),
    )


def optimize(initial_layout: LayoutVariables, users: Sequence[AntennaPose],
             medium: MediumParams, total_power: float, constraints: Constraints,
             config: OptimizerConfig) -> OptimizeResult:
    """Alternating projected gradient ascent on the total-SINR objective.

    Blocks run in config.block_order, skipping those whose optimize_* flag is
    off. Each accepted step passes an Armijo test, so the recorded trace is
    non-decreasing. Stops when one full outer sweep improves the objective by
    less than the relative convergence tolerance.
    """
    layout = initial_layout.copy()
    layout.canonicalize_angles()
    if layout.phase_anchor is None:
        layout.phase_anchor = layout.tx_positions.copy()
    if not check_feasible(layout.tx_positions, constraints):
        raise InfeasibleLayoutError("initial transmit positions violate the constraints")

    def safe_objective(candidate: LayoutVariables) -> float:
        try:
            return objective(candidate, users, medium, total_power)
        except SingularChannelError:
            return -math.inf

    start_time = time.perf_counter()
    current = objective(layout, users, medium, total_power)
    trace = ConvergenceTrace(total_sinr=[current])
    step_position = config.initial_step_position
    if step_position is None:
        step_position = medium.wavelength

    active = {
        BLOCK_RX_ANGLES: layout.optimize_rx_orientation,
        BLOCK_TX_ANGLES: layout.optimize_tx_orientation,
        BLOCK_TX_POSITIONS: layout.optimize_tx_position,
    }

    for _ in range(config.max_outer_iterations):
        sweep_start = current
        improvements = {}
        for block in config.block_order:
            if not active[block]:
                continue
            block_start = current
            fd_step = config.fd_step_position if block == BLOCK_TX_POSITIONS \
                else config.fd_step_angle
            initial_step = step_position if block == BLOCK_TX_POSITIONS \
                else config.initial_step_angle
            for _ in range(config.inner_steps):
                grad = finite_difference_gradient(layout, block, safe_objective, fd_step)
                grad_sq = float(grad @ grad)
                if not np.isfinite(grad_sq) or grad_sq == 0.0:
                    break
                base = _block_vector(layout, block)
                step = initial_step / math.sqrt(grad_sq)
                accepted = False
                for _ in range(config.max_backtracks):
                    candidate_vec = base + step * grad
                    candidate = _with_block_vector(layout, block, candidate_vec)
                    if block == BLOCK_TX_POSITIONS:
                        candidate.tx_positions = separation_projection(
                            candidate.tx_positions, layout.tx_positions, constraints)
                    value = safe_objective(candidate)
                    if value >= current + config.armijo_c * step * grad_sq:
                        candidate.canonicalize_angles()
                        layout = candidate
                        current = value
                        accepted = True
                        break
                    step *= config.shrink_factor
                if not accepted:
                    break
            improvements[block] = current - block_start
        trace.total_sinr.append(current)
        trace.block_improvements.append(improvements)
        if current - sweep_start <= config.convergence_tol * max(abs(sweep_start), 1e-300):
            break

    trace.wall_time = time.perf_counter() - start_time
    rx_positions = np.array([u.position for u in users])
    gains = gain_matrix(layout.anchor_positions(), layout.tx_orientations(),
                        rx_positions, layout.rx_orientations(), medium)
    beamforming = solve_beamforming(ChannelMatrix(entries=gains), total_power,
                                    medium.noise_power)
    return OptimizeResult(layout=layout, beamforming=beamforming, trace=trace)


def quantize_angles(layout: LayoutVariables, resolution_deg: float) -> LayoutVariables:
    """Snap every polar/azimuthal angle to the nearest multiple of the resolution.

    Resolution 0 means no quantization; ties round half away from zero.
    """
    if resolution_deg == 0:
        return layout.copy()
    if not 0.0 < resolution_deg <= 180.0:
        raise ConfigurationError(f"resolution {resolution_deg} deg outside (0, 180]")
    step = math.radians(resolution_deg)

    def snap(arr: np.ndarray) -> np.ndarray:
        return np.sign(arr) * np.floor(np.abs(arr) / step + 0.5) * step

    out = layout.copy()
    out.tx_angles = snap(out.tx_angles)
    out.rx_angles = snap(out.rx_angles)
    out.canonicalize_angles()
    return out
