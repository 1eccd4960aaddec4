"""Downlink MU-MISO processing: zero forcing, water filling, link metrics."""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix
from .errors import ConfigurationError, SingularChannelError

CONDITION_LIMIT = 1e12
_WATERFILL_MAX_ITER = 200


@dataclass(frozen=True)
class Precoder:
    """Unit-norm precoding columns (L x K) plus the post-precoding diagonal gains.

    diag_gains[k] is |H W| on the diagonal for user k, equal to the reciprocal
    norm of the unnormalized zero-forcing column.
    """

    columns: np.ndarray
    diag_gains: np.ndarray


@dataclass(frozen=True)
class PowerAllocation:
    """Per-user transmit powers in watts, summing to the total budget."""

    powers: np.ndarray
    total_power: float


@dataclass(frozen=True)
class LinkMetrics:
    """Per-user SINR/rate plus the equivalent total SINR and average rate."""

    sinr: np.ndarray
    rates: np.ndarray
    total_sinr: float
    average_rate: float


@dataclass(frozen=True)
class BeamformingSolution:
    precoder: Precoder
    allocation: PowerAllocation
    metrics: LinkMetrics


def zf_precoder(H: ChannelMatrix) -> Precoder:
    """Zero-forcing precoder W = H^H (H H^H)^{-1}, columns normalized.

    Raises SingularChannelError when the channel is rank deficient or has a
    condition number above 1e12; ill conditioning is reported, never silently
    regularized.
    """
    entries = H.entries
    singular_values = np.linalg.svd(entries, compute_uv=False)
    if singular_values[-1] <= 0.0 or singular_values[0] / singular_values[-1] > CONDITION_LIMIT:
        raise SingularChannelError(
            f"channel condition number {singular_values[0] / max(singular_values[-1], 1e-300):.3e} "
            f"exceeds {CONDITION_LIMIT:.0e}")
    gram = entries @ entries.conj().T
    unnormalized = entries.conj().T @ np.linalg.inv(gram)
    column_norms = np.linalg.norm(unnormalized, axis=0)
    return Precoder(columns=unnormalized / column_norms, diag_gains=1.0 / column_norms)


def water_filling(diag_gains, total_power: float, noise_power: float) -> PowerAllocation:
    """Water-filling power allocation over interference-free per-user channels.

    P_k = max(level - 1/snr_k, 0) with snr_k = g_k^2 / sigma^2 the per-unit-power
    SNR; the common water level is found by bisection so the powers sum to the
    budget within 1e-9 of it.
    """
    gains = np.asarray(diag_gains, dtype=float)
    if np.any(gains <= 0):
        raise ConfigurationError("post-precoding gains must be positive")
    if not total_power > 0:
        raise ConfigurationError(f"total power must be positive, got {total_power}")
    inv_snr = noise_power / gains**2

    # used(level) = sum_k max(level - inv_snr_k, 0) is piecewise linear; with
    # the thresholds sorted and prefix-summed each bisection probe is O(log K).
    thresholds = np.sort(inv_snr).tolist()
    prefix = [0.0]
    for t in thresholds:
        prefix.append(prefix[-1] + t)

    low, high = 0.0, total_power + prefix[-1]
    level = high
    for _ in range(_WATERFILL_MAX_ITER):
        level = 0.5 * (low + high)
        active = bisect.bisect_right(thresholds, level)
        used = active * level - prefix[active]
        if abs(used - total_power) <= 1e-12 * total_power:
            break
        if used > total_power:
            high = level
        else:
            low = level
        if high - low <= 1e-16 * high:
            level = 0.5 * (low + high)
            break
    powers = np.maximum(level - inv_snr, 0.0)
    return PowerAllocation(powers=powers, total_power=float(total_power))


def link_metrics(H: ChannelMatrix, W: Precoder, allocation: PowerAllocation,
                 noise_power: float) -> LinkMetrics:
    """SINR, per-user rate, equivalent total SINR, and average rate.

    SINR uses the general interference expression, so residual leakage of any
    precoder shows up rather than being assumed away.
    """
    effective = H.entries @ W.columns                      # (K, K), entry (k, j)
    powers = allocation.powers
    signal = powers * np.abs(np.diag(effective))**2
    cross = powers[None, :] * np.abs(effective)**2
    interference = np.sum(cross, axis=1) - np.diag(cross).real
    sinr = signal / (noise_power + interference)
    rates = 0.5 * np.log2(1.0 + sinr)
    total_sinr = float(np.exp(np.mean(np.log1p(sinr))) - 1.0)
    average_rate = 0.5 * float(np.log2(1.0 + total_sinr))
    return LinkMetrics(sinr=sinr, rates=rates, total_sinr=total_sinr, average_rate=average_rate)


def solve_beamforming(H: ChannelMatrix, total_power: float, noise_power: float) -> BeamformingSolution:
    """Zero forcing + water filling + metrics for one channel realization."""
    precoder = zf_precoder(H)
    allocation = water_filling(precoder.diag_gains, total_power, noise_power)
    metrics = link_metrics(H, precoder, allocation, noise_power)
    return BeamformingSolution(precoder=precoder, allocation=allocation, metrics=metrics)
