"""Beacon channel simulation: RSSI/range conversion and noisy range sampling.

The receiver never sees raw signal strength in simulation; measurements
are generated directly in range space with Gaussian noise applied to the
true range, since the noise level of interest is specified on range.
The log-distance conversion is still provided for operating on real
RSSI readings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelParams",
    "RangeMeasurement",
    "range_from_rssi",
    "rssi_from_range",
    "sample_measurement",
]

NOISE_MODELS = ("constant", "distance_scaled")

_MIN_RANGE = 1e-3
_MAX_REDRAWS = 10


@dataclass(frozen=True)
class ChannelParams:
    """Log-distance path-loss channel with selectable range-noise law.

    ``constant`` noise uses ``noise_sigma0`` everywhere; ``distance_scaled``
    grows it with the square of range relative to ``noise_ref_range``.
    """

    P: float = -40.0
    n_exp: float = 2.0
    noise_sigma0: float = 0.1
    noise_model: str = "constant"
    noise_ref_range: float = 1.0

    def __post_init__(self):
        if self.n_exp <= 0:
            raise ValueError("path-loss exponent must be positive")
        if self.noise_sigma0 < 0:
            raise ValueError("noise_sigma0 must be non-negative")
        if self.noise_ref_range <= 0:
            raise ValueError("noise_ref_range must be positive")
        if self.noise_model not in NOISE_MODELS:
            raise ValueError(
                f"unknown noise_model {self.noise_model!r}; expected one of {NOISE_MODELS}"
            )

    def sigma_at(self, true_range: float) -> float:
        if self.noise_model == "constant":
            return self.noise_sigma0
        return self.noise_sigma0 * (true_range / self.noise_ref_range) ** 2


@dataclass(frozen=True)
class RangeMeasurement:
    """One timestamped range reading plus simulation-only diagnostics."""

    t: float
    range: float
    true_range: float
    vehicle_pos: np.ndarray


def range_from_rssi(rssi: float, params: ChannelParams) -> float:
    """Invert the log-distance law: range = 10^((P - RSSI) / (10 n))."""
    return float(10.0 ** ((params.P - rssi) / (10.0 * params.n_exp)))


def rssi_from_range(rng_m: float, params: ChannelParams) -> float:
    """Forward log-distance law; rejects non-positive ranges."""
    if rng_m <= 0:
        raise ValueError(f"range must be positive, got {rng_m}")
    return float(params.P - 10.0 * params.n_exp * np.log10(rng_m))


def sample_measurement(
    vehicle_pos,
    target_pos,
    t: float,
    params: ChannelParams,
    rng: np.random.Generator,
) -> RangeMeasurement:
    """Draw one noisy range measurement at time t.

    The noisy range is resampled while non-positive (at most 10 times),
    then clamped to 1 mm, so downstream residuals stay well defined.
    """
    vehicle_pos = np.asarray(vehicle_pos, dtype=float)
    target_pos = np.asarray(target_pos, dtype=float)
    true_range = float(np.linalg.norm(vehicle_pos - target_pos))
    if true_range == 0.0:
        raise ValueError("vehicle and target positions coincide")
    sigma = params.sigma_at(true_range)
    measured = true_range + sigma * rng.standard_normal()
    redraws = 0
    while measured <= 0.0 and redraws < _MAX_REDRAWS:
        measured = true_range + sigma * rng.standard_normal()
        redraws += 1
    if measured <= 0.0:
        measured = _MIN_RANGE
    pos = vehicle_pos.copy()
    pos.setflags(write=False)
    return RangeMeasurement(t=float(t), range=float(measured), true_range=true_range, vehicle_pos=pos)
