"""Homodyne receiver noise model and shot-noise calibration.

The electronic noise of a transimpedance-amplified homodyne detector is
dominated by the Johnson noise of the feedback resistor. Expressed in
shot-noise units it reads::

    v_ele = (sqrt(4 k T_k R_f) / G)**2 * BW * d * lambda / (h c P_LO)

where the bracket is the noise-equivalent power of the amplifier and the
second factor is the inverse of the number of LO photons per pulse scaled by
the detection bandwidth.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields, replace
from os import PathLike
from typing import Iterable, Sequence

import numpy as np

from .constants import BOLTZMANN, PLANCK, SPEED_OF_LIGHT
from .errors import CalibrationError, DomainError, FitError

__all__ = [
    "DetectorParams",
    "RepRateScenario",
    "CalibrationResult",
    "electronic_noise_snu",
    "detector_from_scenario",
    "lo_photons_per_pulse",
    "calibrate_from_variance_samples",
    "read_calibration_csv",
    "format_calibration",
    "calibration_csv_row",
    "CALIBRATION_CSV_HEADER",
]


def _require_positive(name: str, value: float) -> None:
    if not (value > 0) or not math.isfinite(value):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class DetectorParams:
    """Physical description of a homodyne receiver.

    ``feedback_resistance`` defaults to 10 kOhm; the value is not published
    for the reference detector, so absolute noise levels are illustrative.
    """

    temperature_k: float = 300.0
    feedback_resistance: float = 10e3
    amplifier_gain: float = 4000.0
    bandwidth: float = 3e6
    pulse_width: float = 100e-9
    wavelength: float = 1550e-9
    lo_power: float = 1e-3

    def __post_init__(self) -> None:
        for f in fields(self):
            _require_positive(f.name, getattr(self, f.name))

    @property
    def noise_equivalent_power(self) -> float:
        """sqrt(4 k T_k R_f) / G."""
        return math.sqrt(4.0 * BOLTZMANN * self.temperature_k * self.feedback_resistance) / self.amplifier_gain


@dataclass(frozen=True)
class RepRateScenario:
    """Maps a repetition rate onto receiver bandwidth, pulse width and gain.

    The amplifier is assumed to have a constant gain-bandwidth product,
    anchored at ``gain_at_reference`` for ``reference_bandwidth``.
    """

    repetition_rate: float
    duty_cycle: float = 0.1
    bandwidth_multiple: float = 3.0
    gain_at_reference: float = 4000.0
    reference_bandwidth: float = 3e6

    def __post_init__(self) -> None:
        _require_positive("repetition_rate", self.repetition_rate)
        if not (0.0 < self.duty_cycle <= 1.0):
            raise DomainError(f"duty_cycle must lie in (0, 1], got {self.duty_cycle!r}")
        _require_positive("bandwidth_multiple", self.bandwidth_multiple)
        _require_positive("gain_at_reference", self.gain_at_reference)
        _require_positive("reference_bandwidth", self.reference_bandwidth)


@dataclass(frozen=True)
class CalibrationResult:
    slope: float
    intercept: float
    v_ele_snu: float
    fit_residual: float
    reference_power: float
    dark_variance: float


def electronic_noise_snu(det: DetectorParams) -> float:
    """Electronic noise variance of the receiver in shot-noise units."""
    # DetectorParams validates on construction; re-check in case of object.__setattr__ tricks
    for f in fields(det):
        _require_positive(f.name, getattr(det, f.name))
    thermal = 4.0 * BOLTZMANN * det.temperature_k * det.feedback_resistance / det.amplifier_gain**2
    return thermal * det.bandwidth * det.pulse_width * det.wavelength / (PLANCK * SPEED_OF_LIGHT * det.lo_power)


def detector_from_scenario(s: RepRateScenario, base: DetectorParams | None = None) -> DetectorParams:
    """Derive the receiver operating at the scenario's repetition rate.

    Temperature, feedback resistance, wavelength and LO power come from
    ``base``; bandwidth, pulse width and gain are set by the scenario.
    """
    base = DetectorParams() if base is None else base
    bandwidth = s.bandwidth_multiple * s.repetition_rate
    return replace(
        base,
        bandwidth=bandwidth,
        pulse_width=s.duty_cycle / s.repetition_rate,
        amplifier_gain=s.gain_at_reference * s.reference_bandwidth / bandwidth,
    )


def lo_photons_per_pulse(power: float, width: float, wavelength: float) -> float:
    """Mean photon number of an LO pulse of peak ``power`` and duration ``width``."""
    _require_positive("power", power)
    _require_positive("width", width)
    _require_positive("wavelength", wavelength)
    return power * width * wavelength / (PLANCK * SPEED_OF_LIGHT)


def calibrate_from_variance_samples(
    samples: Iterable[tuple[float, float]],
    dark_variance: float,
    reference_power: float,
) -> CalibrationResult:
    """Fit homodyne output variance against LO power.

    An ordinary least-squares line ``variance = slope * P + intercept`` is
    fitted to the samples. The slope is the shot-noise variance per watt, so
    the electronic noise in shot-noise units at ``reference_power`` is
    ``dark_variance / (slope * reference_power)``. The intercept and the RMS
    residual are returned for linearity diagnostics only.

    Raises
    ------
    FitError
        Fewer than two distinct LO powers.
    CalibrationError
        The fitted slope is not positive.
    """
    data = np.asarray(list(samples), dtype=float)
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != 2:
        raise FitError("at least two (lo_power, variance) samples are required")
    if dark_variance < 0 or not math.isfinite(dark_variance):
        raise DomainError(f"dark_variance must be non-negative, got {dark_variance!r}")
    _require_positive("reference_power", reference_power)

    power, variance = data[:, 0], data[:, 1]
    p_mean = power.mean()
    sxx = np.sum((power - p_mean) ** 2)
    if sxx == 0.0 or np.unique(power).size < 2:
        raise FitError("all LO powers are equal; slope is undetermined")
    slope = float(np.sum((power - p_mean) * (variance - variance.mean())) / sxx)
    intercept = float(variance.mean() - slope * p_mean)
    if not slope > 0:
        raise CalibrationError(f"fitted slope {slope:.6g} is not positive")
    resid = variance - (slope * power + intercept)
    return CalibrationResult(
        slope=slope,
        intercept=intercept,
        v_ele_snu=dark_variance / (slope * reference_power),
        fit_residual=float(np.sqrt(np.mean(resid**2))),
        reference_power=float(reference_power),
        dark_variance=float(dark_variance),
    )


CALIBRATION_CSV_HEADER = ("slope", "intercept", "v_ele_snu", "fit_residual", "reference_power", "dark_variance")


def read_calibration_csv(source: str | PathLike[str] | io.TextIOBase) -> list[tuple[float, float]]:
    """Read ``lo_power_w,variance`` samples from a path or open text stream."""
    if isinstance(source, (str, PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_calibration_csv(fh)
    reader = csv.reader(line for line in source if line.strip() and not line.lstrip().startswith("#"))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["lo_power_w", "variance"]:
        raise FitError(f"expected header 'lo_power_w,variance', got {header!r}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 2:
            raise FitError(f"line {lineno}: expected 2 columns, got {len(row)}")
        out.append((float(row[0]), float(row[1])))
    return out


def format_calibration(result: CalibrationResult) -> str:
    """Flat ``key=value`` text block, one field per line."""
    return "".join(f"{name}={getattr(result, name)!r}\n" for name in CALIBRATION_CSV_HEADER)


def calibration_csv_row(result: CalibrationResult, header: bool = False) -> str:
    row = ",".join(repr(getattr(result, name)) for name in CALIBRATION_CSV_HEADER) + "\n"
    return (",".join(CALIBRATION_CSV_HEADER) + "\n" + row) if header else row


def fig1_rep_rate_family(
    rates: Sequence[float], base: DetectorParams | None = None, **scenario_kw: float
) -> np.ndarray:
    """Electronic noise (snu) over a list of repetition rates."""
    base = DetectorParams() if base is None else base
    return np.array([electronic_noise_snu(detector_from_scenario(RepRateScenario(r, **scenario_kw), base)) for r in rates])
