"""Asymptotic key rate of single-mode Gaussian-modulated CV-QKD.

Reverse reconciliation under collective attack, homodyne detection with
trusted (calibrated) detector efficiency and electronic noise. All variances
are in shot-noise units (N0 = 1).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .errors import DomainError, NumericalDomainError

__all__ = [
    "ChannelParams",
    "ProtocolParams",
    "NoiseBudget",
    "HolevoIntermediates",
    "KeyRateReport",
    "noise_budget",
    "snr",
    "mutual_information",
    "g_function",
    "holevo_bound",
    "key_rate",
    "transmittance_from_distance",
    "DISCRIMINANT_RTOL",
]

log = logging.getLogger(__name__)

#: Negative discriminants down to -DISCRIMINANT_RTOL * max(X**2, 1) are treated as rounding noise.
DISCRIMINANT_RTOL = 1e-9
_EIGENVALUE_ATOL = 1e-9


def _finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class ChannelParams:
    """Quantum channel: transmittance T in (0, 1] and excess noise xi >= 0.

    ``excess_noise`` is referred to the channel input.
    """

    transmittance: float
    excess_noise: float = 0.0

    def __post_init__(self) -> None:
        _finite("transmittance", self.transmittance)
        _finite("excess_noise", self.excess_noise)
        if not (0.0 < self.transmittance <= 1.0):
            raise DomainError(f"transmittance must lie in (0, 1], got {self.transmittance!r}")
        if self.excess_noise < 0.0:
            raise DomainError(f"excess_noise must be non-negative, got {self.excess_noise!r}")

    @classmethod
    def from_bob_excess_noise(cls, transmittance: float, bob_excess_noise: float, detector_efficiency: float) -> "ChannelParams":
        """Build from excess noise quoted at Bob's detector (eta*T*xi)."""
        if not (0.0 < detector_efficiency <= 1.0):
            raise DomainError(f"detector_efficiency must lie in (0, 1], got {detector_efficiency!r}")
        if not (0.0 < transmittance <= 1.0):
            raise DomainError(f"transmittance must lie in (0, 1], got {transmittance!r}")
        xi = bob_excess_noise / (detector_efficiency * transmittance)
        log.debug("excess noise at Bob %.6g -> xi=%.6g at channel input (T=%.6g, eta=%.6g)",
                  bob_excess_noise, xi, transmittance, detector_efficiency)
        return cls(transmittance, xi)


@dataclass(frozen=True)
class ProtocolParams:
    """Alice/Bob protocol constants.

    Attributes
    ----------
    modulation_variance : float
        Alice's Gaussian modulation variance V_A (snu). Zero (vacuum
        input) is accepted for simulation checks.
    reconciliation_efficiency : float
        beta in (0, 1]. Zero is accepted to model a protocol without
        reconciliation.
    detector_efficiency : float
        eta in (0, 1].
    electronic_noise : float
        v_ele (snu), >= 0.
    key_fraction : float
        gamma, the fraction of measured quadratures that go into the key.
    """

    modulation_variance: float = 2.5
    reconciliation_efficiency: float = 0.95
    detector_efficiency: float = 0.6
    electronic_noise: float = 0.0
    key_fraction: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        for name in ("modulation_variance", "reconciliation_efficiency", "detector_efficiency",
                     "electronic_noise", "key_fraction"):
            _finite(name, getattr(self, name))
        if self.modulation_variance < 0.0:
            raise DomainError(f"modulation_variance must be non-negative, got {self.modulation_variance!r}")
        if not (0.0 <= self.reconciliation_efficiency <= 1.0):
            raise DomainError(f"reconciliation_efficiency must lie in [0, 1], got {self.reconciliation_efficiency!r}")
        if not (0.0 < self.detector_efficiency <= 1.0):
            raise DomainError(f"detector_efficiency must lie in (0, 1], got {self.detector_efficiency!r}")
        if self.electronic_noise < 0.0:
            raise DomainError(f"electronic_noise must be non-negative, got {self.electronic_noise!r}")
        if not (0.0 < self.key_fraction <= 1.0):
            raise DomainError(f"key_fraction must lie in (0, 1], got {self.key_fraction!r}")


@dataclass(frozen=True)
class NoiseBudget:
    """Channel, detection and total noise referred to the channel input."""

    chi_line: float
    chi_hom: float
    chi_tot: float


@dataclass(frozen=True)
class HolevoIntermediates:
    a_term: float
    b_term: float
    c_term: float
    d_term: float
    eigenvalues: tuple[float, float, float, float, float]


@dataclass(frozen=True)
class KeyRateReport:
    """Result of a key-rate evaluation; rates are in bits per channel use."""

    snr: float
    mutual_information: float
    holevo_bound: float
    key_rate_raw: float
    intermediates: HolevoIntermediates = field(repr=False)

    @property
    def key_rate_clamped(self) -> float:
        return max(0.0, self.key_rate_raw)

    # Column order of the flat CSV serialization.
    CSV_COLUMNS = (
        "snr", "mutual_information", "holevo_bound", "key_rate_raw", "key_rate_clamped",
        "lambda1", "lambda2", "lambda3", "lambda4", "lambda5",
        "a_term", "b_term", "c_term", "d_term",
    )

    def as_row(self) -> tuple[float, ...]:
        im = self.intermediates
        return (self.snr, self.mutual_information, self.holevo_bound, self.key_rate_raw,
                self.key_rate_clamped, *im.eigenvalues, im.a_term, im.b_term, im.c_term, im.d_term)

    def csv_row(self) -> str:
        return ",".join(repr(float(v)) for v in self.as_row())


def noise_budget(ch: ChannelParams, p: ProtocolParams) -> NoiseBudget:
    t = ch.transmittance
    if not t > 0.0:
        raise DomainError("transmittance must be positive; the line noise diverges at T=0")
    chi_line = (1.0 - t) / t + ch.excess_noise
    eta = p.detector_efficiency
    chi_hom = (1.0 - eta + p.electronic_noise) / eta
    return NoiseBudget(chi_line, chi_hom, chi_line + chi_hom / t)


def snr(p: ProtocolParams, nb: NoiseBudget) -> float:
    """Signal-to-noise ratio V_A / (1 + chi_tot)."""
    if nb.chi_tot < 0.0:
        raise DomainError(f"chi_tot must be non-negative, got {nb.chi_tot!r}")
    return p.modulation_variance / (1.0 + nb.chi_tot)


def mutual_information(snr: float) -> float:
    """Shannon capacity of the Gaussian channel, 0.5*log2(1 + snr), in bits."""
    if snr < 0.0 or math.isnan(snr):
        raise DomainError(f"snr must be non-negative, got {snr!r}")
    return 0.5 * math.log2(1.0 + snr)


def g_function(x: float) -> float:
    """Von Neumann entropy of a thermal state with mean photon number ``x``.

    G(x) = (x+1) log2(x+1) - x log2 x, with G(0) = 0.
    """
    if x < 0.0 or math.isnan(x):
        raise DomainError(f"g_function needs x >= 0, got {x!r}")
    if x == 0.0:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def _checked_discriminant(name: str, x: float, y: float) -> float:
    disc = x * x - 4.0 * y
    if disc < 0.0:
        if disc < -DISCRIMINANT_RTOL * max(x * x, 1.0):
            raise NumericalDomainError(f"{name} discriminant is negative ({disc:.3e})")
        return 0.0
    return disc


def _sqrt(name: str, x: float) -> float:
    if not x >= 0.0:
        raise NumericalDomainError(f"{name} is negative ({x!r})")
    return math.sqrt(x)


def _pair_from_sum_and_gap(total: float, gap: float) -> tuple[float, float]:
    # total = l1 + l2, gap = l1 - l2
    return 0.5 * (total + gap), 0.5 * (total - gap)


def _entropy_term(lam: float, label: str) -> float:
    x = 0.5 * (lam - 1.0)
    if x < 0.0:
        if x < -_EIGENVALUE_ATOL:
            raise NumericalDomainError(f"symplectic eigenvalue {label}={lam!r} is below 1")
        x = 0.0
    return g_function(x)


def _conditional_gap(t: float, v: float, x: float, h: float, t_xi: float, u: float) -> float:
    # sqrt((C^2 - 4D) * (T (V + chi_tot))^2) from non-negative pieces; x = chi_line, h = chi_hom
    q = (v * (1.0 - t)) ** 2 + 2.0 * t * v * x * (1.0 + t) + (t * x) ** 2 + 4.0 * t
    sqrt_q = _sqrt("Q", q)
    m = x * sqrt_q + v * x * (1.0 - t) + t * x * x + 2.0 * (1.0 - t)  # x sqrt(Q) - R
    k = (v * x + 1.0) * (2.0 * (1.0 - t) + t_xi) * t_xi
    s = u * 4.0 * k / m if u > 0.0 else -u * m
    w = t * x * (v * v - 1.0)
    return _sqrt("C^2-4D", (abs(u) * sqrt_q * h - w) ** 2 + 2.0 * t * (v * v - 1.0) * h * s)


def holevo_bound(p: ProtocolParams, ch: ChannelParams, nb: NoiseBudget | None = None) -> tuple[float, HolevoIntermediates]:
    """Upper bound on Eve's information about Bob's outcomes (bits/use).

    The symplectic eigenvalues come from the usual pair of quadratics
    ``l**2 = (X +- sqrt(X**2 - 4Y)) / 2``. They are evaluated through
    ``l1 + l2 = sqrt(X + 2 sqrt(Y))`` and ``l1 - l2 = sqrt(X - 2 sqrt(Y))``,
    which is algebraically identical but keeps the degenerate point (lossless,
    noiseless channel) exact. The differences ``X - 2 sqrt(Y)`` are never
    formed directly. With ``u = T chi_line - V (1 - T)``::

        A - 2 sqrt(B)             = u**2
        (C**2 - 4D) (T (V + chi_tot))**2
            = (|u| sqrt(Q) chi_hom - w)**2 + 2 T (V**2 - 1) chi_hom S

    where ``Q``, ``w`` and ``S >= 0`` are sums of non-negative terms (see
    ``_conditional_gap``). Near-degenerate eigenvalues keep full precision.

    Returns
    -------
    chi_eb : float
    intermediates : HolevoIntermediates
    """
    own_budget = nb is None
    nb = noise_budget(ch, p) if nb is None else nb
    t = ch.transmittance
    v = p.modulation_variance + 1.0
    chi_line, chi_hom, chi_tot = nb.chi_line, nb.chi_hom, nb.chi_tot

    # V^2 (1 - 2T) + 2T + T^2 (V + chi_line)^2, regrouped into non-negative terms
    a = (v * (1.0 - t)) ** 2 + 2.0 * t + t * t * chi_line * (2.0 * v + chi_line)
    sqrt_b = t * (v * chi_line + 1.0)
    b = sqrt_b * sqrt_b
    denom = t * (v + chi_tot)
    c = (v * sqrt_b + t * (v + chi_line) + a * chi_hom) / denom
    d = sqrt_b * (v + sqrt_b * chi_hom) / denom

    _checked_discriminant("A^2-4B", a, b)
    _checked_discriminant("C^2-4D", c, d)

    # T chi_line - (1 - T) = T xi; taken from the channel when the budget is ours
    t_xi = t * ch.excess_noise if own_budget else t * chi_line - (1.0 - t)
    u = t_xi - p.modulation_variance * (1.0 - t)
    l1, l2 = _pair_from_sum_and_gap(_sqrt("A+2sqrt(B)", a + 2.0 * sqrt_b), abs(u))
    sum_cd = _sqrt("C+2sqrt(D)", c + 2.0 * _sqrt("D", d))
    gap_cd = _conditional_gap(t, v, chi_line, chi_hom, t_xi, u) / (denom * sum_cd)
    l3, l4 = _pair_from_sum_and_gap(sum_cd, gap_cd)
    l5 = 1.0

    chi_eb = (_entropy_term(l1, "lambda1") + _entropy_term(l2, "lambda2")
              - _entropy_term(l3, "lambda3") - _entropy_term(l4, "lambda4") - g_function(0.0))
    lam = tuple(max(x, 1.0) if x > 1.0 - _EIGENVALUE_ATOL else x for x in (l1, l2, l3, l4, l5))
    return chi_eb, HolevoIntermediates(a, b, c, d, lam)  # type: ignore[arg-type]


def key_rate(p: ProtocolParams, ch: ChannelParams) -> KeyRateReport:
    """Asymptotic secure key rate with reverse reconciliation.

    ``K = gamma * (beta * I_AB - chi_EB)``. The raw value may be negative
    (no key); ``KeyRateReport.key_rate_clamped`` floors it at zero.
    """
    nb = noise_budget(ch, p)
    s = snr(p, nb)
    i_ab = mutual_information(s)
    chi_eb, im = holevo_bound(p, ch, nb)
    k = p.key_fraction * (p.reconciliation_efficiency * i_ab - chi_eb)
    return KeyRateReport(s, i_ab, chi_eb, k, im)


def transmittance_from_distance(length: float, loss: float = 0.2) -> float:
    """Fibre transmittance 10**(-loss*length/10) for ``length`` km at ``loss`` dB/km."""
    if length < 0.0 or loss < 0.0:
        raise DomainError("length and loss must be non-negative")
    return 10.0 ** (-loss * length / 10.0)
