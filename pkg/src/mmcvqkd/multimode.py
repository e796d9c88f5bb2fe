"""Multi-mode Gaussian-modulated CV-QKD with joint homodyne detection.

Alice modulates ``m`` mutually incoherent modes independently; Bob measures
all of them at once with one homodyne detector and ``m`` mode-matched LO
pulses. Summing Alice's quadratures gives a virtual state whose statistics,
after normalising by the joint shot noise ``m N0``, match a single-mode
protocol with the detector's electronic noise divided by ``m``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .errors import ClampedEstimateWarning, DomainError, EstimationError, GainUndefinedError
from .security import ChannelParams, KeyRateReport, ProtocolParams, key_rate, noise_budget

__all__ = [
    "ModeEnsemble",
    "VirtualState",
    "effective_single_mode",
    "joint_variance",
    "estimate_params_multimode",
    "snr_ratio",
    "snr_ratio_first_principles",
    "key_rate_multimode",
    "key_gain",
    "TRANSMITTANCE_TOLERANCE",
]

#: Estimated transmittances up to 1 + TRANSMITTANCE_TOLERANCE are accepted (and clamped to 1).
TRANSMITTANCE_TOLERANCE = 1e-9


def _check_modes(m: int) -> int:
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise DomainError(f"mode count must be an integer >= 1, got {m!r}")
    return int(m)


@dataclass(frozen=True)
class ModeEnsemble:
    """``mode_count`` identical modes, each modulated with the same variance."""

    mode_count: int
    per_mode_modulation_variance: float
    per_mode_shot_noise: float = 1.0

    def __post_init__(self) -> None:
        _check_modes(self.mode_count)
        if self.per_mode_modulation_variance < 0:
            raise DomainError("per_mode_modulation_variance must be non-negative")
        if self.per_mode_shot_noise <= 0:
            raise DomainError("per_mode_shot_noise must be positive")

    def virtual_state(self) -> "VirtualState":
        m = self.mode_count
        return VirtualState(
            x_quadrature=m * self.per_mode_modulation_variance,
            p_quadrature=m * self.per_mode_modulation_variance,
            normalization=m * self.per_mode_shot_noise,
        )


@dataclass(frozen=True)
class VirtualState:
    """Quadrature variances of Alice's summed (virtual) state.

    Before normalisation each quadrature has variance ``m V_A`` measured
    against a joint shot noise of ``m N0``.
    """

    x_quadrature: float
    p_quadrature: float
    normalization: float

    def normalized(self) -> "VirtualState":
        n = self.normalization
        return VirtualState(self.x_quadrature / n, self.p_quadrature / n, 1.0)


def effective_single_mode(p: ProtocolParams, m: int) -> ProtocolParams:
    """Protocol parameters of the normalised virtual state (v_ele -> v_ele/m)."""
    m = _check_modes(m)
    if m == 1:
        return p
    return replace(p, electronic_noise=p.electronic_noise / m)


def joint_variance(m: int, p: ProtocolParams, ch: ChannelParams) -> float:
    """Variance of Bob's joint homodyne outcome, in single-mode snu.

    ``eta T m V_A + m + eta T m xi + v_ele``.
    """
    m = _check_modes(m)
    et = p.detector_efficiency * ch.transmittance
    return et * m * p.modulation_variance + m + et * m * ch.excess_noise + p.electronic_noise


def estimate_params_multimode(
    covariance: float,
    joint_variance_norm: float,
    m: int,
    p: ProtocolParams,
    *,
    alice_variance: float | None = None,
    xi_tolerance: float = 0.0,
) -> ChannelParams:
    """Recover (T, xi) from normalised virtual-state moments.

    Parameters
    ----------
    covariance : float
        <X_A^m' X_B^m'>, Alice/Bob covariance after dividing both joint
        quadratures by sqrt(m).
    joint_variance_norm : float
        Bob's joint variance divided by m.
    m : int
        Number of modes.
    p : ProtocolParams
    alice_variance : float, optional
        Normalised variance of Alice's virtual quadrature. Defaults to the
        nominal ``p.modulation_variance``; pass a sample estimate when
        working from data.
    xi_tolerance : float
        Negative excess-noise estimates no smaller than ``-xi_tolerance`` are
        clamped to zero with a :class:`ClampedEstimateWarning`.

    Notes
    -----
    The excess noise is obtained by inverting the joint-variance model::

        xi = (V_B' - eta T V_A' - 1 - v_ele/m) / (eta T)

    The sign convention of the published closed form for this inverse is
    inconsistent with the forward model; the forward model is taken as
    authoritative.
    """
    m = _check_modes(m)
    va = p.modulation_variance if alice_variance is None else alice_variance
    eta = p.detector_efficiency
    if not va > 0:
        raise EstimationError("Alice's variance must be positive")
    t = covariance**2 / (eta * va**2)
    if not (0.0 < t <= 1.0 + TRANSMITTANCE_TOLERANCE):
        raise EstimationError(f"estimated transmittance {t!r} outside (0, 1]")
    t = min(t, 1.0)
    xi = (joint_variance_norm - eta * t * va - 1.0 - p.electronic_noise / m) / (eta * t)
    if xi < 0.0:
        if xi < -xi_tolerance:
            raise EstimationError(f"estimated excess noise {xi!r} is negative beyond tolerance")
        warnings.warn(f"excess noise estimate {xi:.3e} clamped to 0", ClampedEstimateWarning, stacklevel=2)
        xi = 0.0
    return ChannelParams(t, xi)


def snr_ratio(m: int, p: ProtocolParams, ch: ChannelParams) -> float:
    """SNR of the m-mode scheme relative to single mode.

    ``(1 + chi_tot) / (1 + chi_tot/m + xi (m-1)/m)``
    """
    m = _check_modes(m)
    nb = noise_budget(ch, p)
    xi = ch.excess_noise
    return (1.0 + nb.chi_tot) / (1.0 + nb.chi_tot / m + xi * (m - 1) / m)


def snr_ratio_first_principles(m: int, p: ProtocolParams, ch: ChannelParams) -> float:
    """Diagnostic SNR ratio obtained by dividing only v_ele by m.

    Differs from :func:`snr_ratio`, which also scales the line and
    detection-efficiency noise. Kept for comparison; not used in key rates.
    """
    m = _check_modes(m)
    single = noise_budget(ch, p).chi_tot
    multi = noise_budget(ch, effective_single_mode(p, m)).chi_tot
    return (1.0 + single) / (1.0 + multi)


def key_rate_multimode(m: int, p: ProtocolParams, ch: ChannelParams) -> KeyRateReport:
    """Key rate per channel use of the normalised virtual state."""
    return key_rate(effective_single_mode(p, m), ch)


def key_gain(m: int, p: ProtocolParams, ch: ChannelParams) -> float:
    """K_multi / K_single per channel use.

    Raises
    ------
    GainUndefinedError
        If the single-mode raw key rate is not positive.
    """
    single = key_rate(p, ch).key_rate_raw
    if not single > 0.0 or math.isnan(single):
        raise GainUndefinedError(f"single-mode key rate {single!r} is not positive")
    if _check_modes(m) == 1:
        return 1.0
    return key_rate_multimode(m, p, ch).key_rate_raw / single
