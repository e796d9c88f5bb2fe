"""Scenario files.

A scenario is an INI file (``#`` and ``;`` start comments, also inline).
Recognised sections and keys::

    [scenario]        name
    [protocol]        modulation_variance, reconciliation_efficiency,
                      detector_efficiency, electronic_noise, key_fraction
    [channel]         transmittance | distance_km (+ loss_db_per_km),
                      excess_noise | bob_excess_noise
    [distance_sweep]  start_km, stop_km, step_km, loss_db_per_km,
                      excess_noise | bob_excess_noise
    [modes]           counts, electronic_noise_levels
    [detector]        DetectorParams fields
    [rep_rate]        rate_min, rate_max, points, duty_cycle,
                      bandwidth_multiple, gain_at_reference,
                      reference_bandwidth, lo_power_min, lo_power_max,
                      lo_points, lo_sweep_repetition_rate
    [montecarlo]      sample_counts, seed, policy

``bob_excess_noise`` is the excess noise referred to Bob's detector
(eta*T*xi); it is converted to channel-input excess noise point by point.
Numeric values may be written as fractions (``1/3``). Lists are comma
separated.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import logging
from dataclasses import dataclass, field, fields
from fractions import Fraction
from importlib import resources
from os import PathLike
from typing import Any

import numpy as np

from ..detector import DetectorParams
from ..errors import ConfigError, CVQKDError
from ..montecarlo import BasisPolicy
from ..security import ChannelParams, ProtocolParams, transmittance_from_distance

__all__ = [
    "ChannelSpec",
    "DistanceSweep",
    "RepRateSweep",
    "MonteCarloSpec",
    "Scenario",
    "parse_scenario",
    "load_scenario",
    "load_builtin",
    "serialize_scenario",
    "scenario_hash",
]

log = logging.getLogger(__name__)


def _excess(transmittance: float, eta: float, excess_noise: float | None, bob_excess_noise: float | None) -> ChannelParams:
    if bob_excess_noise is not None:
        ch = ChannelParams.from_bob_excess_noise(transmittance, bob_excess_noise, eta)
        log.info("T=%.6g: eta*T*xi=%.6g -> xi=%.6g", transmittance, bob_excess_noise, ch.excess_noise)
        return ch
    return ChannelParams(transmittance, excess_noise or 0.0)


@dataclass(frozen=True)
class ChannelSpec:
    """A fixed channel, given either by T or by a fibre length."""

    transmittance: float | None = None
    distance_km: float | None = None
    loss_db_per_km: float | None = None
    excess_noise: float | None = None
    bob_excess_noise: float | None = None

    def __post_init__(self) -> None:
        if (self.transmittance is None) == (self.distance_km is None):
            raise ConfigError("[channel] needs exactly one of transmittance, distance_km")
        if self.excess_noise is not None and self.bob_excess_noise is not None:
            raise ConfigError("[channel] takes excess_noise or bob_excess_noise, not both")

    def resolve(self, eta: float) -> ChannelParams:
        if self.transmittance is not None:
            t = self.transmittance
        else:
            loss = 0.2 if self.loss_db_per_km is None else self.loss_db_per_km
            t = transmittance_from_distance(self.distance_km, loss)
        return _excess(t, eta, self.excess_noise, self.bob_excess_noise)


@dataclass(frozen=True)
class DistanceSweep:
    start_km: float = 0.0
    stop_km: float = 100.0
    step_km: float = 1.0
    loss_db_per_km: float = 0.2
    excess_noise: float | None = None
    bob_excess_noise: float | None = None

    def __post_init__(self) -> None:
        if self.step_km <= 0 or self.stop_km < self.start_km or self.start_km < 0:
            raise ConfigError("[distance_sweep] needs 0 <= start_km <= stop_km and step_km > 0")
        if self.excess_noise is not None and self.bob_excess_noise is not None:
            raise ConfigError("[distance_sweep] takes excess_noise or bob_excess_noise, not both")

    def distances(self) -> np.ndarray:
        n = int(np.floor((self.stop_km - self.start_km) / self.step_km + 1e-9)) + 1
        return self.start_km + self.step_km * np.arange(n)

    def channel_at(self, distance_km: float, eta: float) -> ChannelParams:
        t = transmittance_from_distance(float(distance_km), self.loss_db_per_km)
        return _excess(t, eta, self.excess_noise, self.bob_excess_noise)


@dataclass(frozen=True)
class RepRateSweep:
    """Log-spaced repetition-rate and LO-power grids for the detector noise sweep."""

    rate_min: float = 1e6
    rate_max: float = 3e9
    points: int = 50
    duty_cycle: float = 0.1
    bandwidth_multiple: float = 3.0
    gain_at_reference: float = 4000.0
    reference_bandwidth: float = 3e6
    lo_power_min: float = 1e-4
    lo_power_max: float = 1e-1
    lo_points: int = 0
    lo_sweep_repetition_rate: float = 1e9

    def __post_init__(self) -> None:
        if self.points < 1 or self.lo_points < 0:
            raise ConfigError("[rep_rate] points must be >= 1 and lo_points >= 0")
        if not (0 < self.rate_min <= self.rate_max) or not (0 < self.lo_power_min <= self.lo_power_max):
            raise ConfigError("[rep_rate] ranges must be positive and ordered")

    @staticmethod
    def _grid(lo: float, hi: float, n: int) -> np.ndarray:
        return np.array([lo]) if n == 1 else np.geomspace(lo, hi, n)

    def rates(self) -> np.ndarray:
        return self._grid(self.rate_min, self.rate_max, self.points)

    def lo_powers(self) -> np.ndarray:
        return self._grid(self.lo_power_min, self.lo_power_max, self.lo_points) if self.lo_points else np.empty(0)


@dataclass(frozen=True)
class MonteCarloSpec:
    sample_counts: tuple[int, ...] = (1_000_000,)
    seed: int = 0
    policy: str = BasisPolicy.X_ONLY.value

    def __post_init__(self) -> None:
        if not self.sample_counts or any(n < 1 for n in self.sample_counts):
            raise ConfigError("[montecarlo] sample_counts must be non-empty positive integers")
        try:
            BasisPolicy(self.policy)
        except ValueError as exc:
            raise ConfigError(f"[montecarlo] unknown policy {self.policy!r}") from exc


@dataclass(frozen=True)
class Scenario:
    name: str
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    channel: ChannelSpec | None = None
    distance_sweep: DistanceSweep | None = None
    mode_counts: tuple[int, ...] = (1,)
    electronic_noise_levels: tuple[float, ...] = ()
    detector: DetectorParams | None = None
    rep_rate: RepRateSweep | None = None
    montecarlo: MonteCarloSpec | None = None

    def __post_init__(self) -> None:
        if self.channel is not None and self.distance_sweep is not None:
            raise ConfigError("a scenario has either [channel] or [distance_sweep], not both")
        if any(int(m) != m or m < 1 for m in self.mode_counts):
            raise ConfigError("[modes] counts must be integers >= 1")

    @property
    def noise_levels(self) -> tuple[float, ...]:
        """Electronic-noise levels to sweep; defaults to the protocol's own value."""
        return self.electronic_noise_levels or (self.protocol.electronic_noise,)


_SECTIONS: dict[str, type] = {
    "protocol": ProtocolParams,
    "channel": ChannelSpec,
    "distance_sweep": DistanceSweep,
    "detector": DetectorParams,
    "rep_rate": RepRateSweep,
    "montecarlo": MonteCarloSpec,
}
_INT_KEYS = {"points", "lo_points", "seed"}


def _number(text: str) -> float:
    text = text.strip()
    return float(Fraction(text)) if "/" in text else float(text)


def _convert(section: str, key: str, text: str) -> Any:
    if key in _INT_KEYS:
        return int(text)
    if key == "sample_counts":
        return tuple(int(float(v)) for v in text.split(",") if v.strip())
    if key == "policy":
        return text.strip()
    return _number(text)


def _build(section: str, cls: type, items: dict[str, str]) -> Any:
    known = {f.name for f in fields(cls)}
    unknown = set(items) - known
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {', '.join(sorted(unknown))}")
    kwargs = {}
    for key, text in items.items():
        try:
            kwargs[key] = _convert(section, key, text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"[{section}] {key}: cannot parse {text!r}") from exc
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (CVQKDError, TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def parse_scenario(text: str) -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    allowed = set(_SECTIONS) | {"scenario", "modes"}
    extra = set(cp.sections()) - allowed
    if extra:
        raise ConfigError(f"unknown sections: {', '.join(sorted(extra))}")
    if not cp.has_option("scenario", "name"):
        raise ConfigError("[scenario] name is required")
    kwargs: dict[str, Any] = {"name": cp.get("scenario", "name").strip()}
    for section, cls in _SECTIONS.items():
        if cp.has_section(section):
            key = section
            kwargs[key] = _build(section, cls, dict(cp.items(section)))
    if cp.has_section("modes"):
        items = dict(cp.items("modes"))
        unknown = set(items) - {"counts", "electronic_noise_levels"}
        if unknown:
            raise ConfigError(f"[modes] unknown keys: {', '.join(sorted(unknown))}")
        try:
            if "counts" in items:
                kwargs["mode_counts"] = tuple(int(v) for v in items["counts"].split(",") if v.strip())
            if "electronic_noise_levels" in items:
                kwargs["electronic_noise_levels"] = tuple(
                    _number(v) for v in items["electronic_noise_levels"].split(",") if v.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"[modes] {exc}") from exc
    return Scenario(**kwargs)


def load_scenario(path: str | PathLike[str]) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_scenario(text)


def load_builtin(name: str) -> Scenario:
    """Load one of the bundled scenarios (``fig1``, ``fig3``, ``fig5``)."""
    try:
        text = resources.files(__package__).joinpath("configs", f"{name}.cfg").read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"no built-in scenario {name!r}") from exc
    return parse_scenario(text)


def _fmt(value: Any) -> str:
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_scenario(s: Scenario) -> str:
    """Canonical text form; ``parse_scenario(serialize_scenario(s)) == s``."""
    out = io.StringIO()
    out.write(f"[scenario]\nname = {s.name}\n")
    for section in _SECTIONS:
        obj = getattr(s, section)
        if obj is None:
            continue
        out.write(f"\n[{section}]\n")
        for f in fields(obj):
            value = getattr(obj, f.name)
            if value is not None:
                out.write(f"{f.name} = {_fmt(value)}\n")
    out.write("\n[modes]\n")
    out.write(f"counts = {_fmt(s.mode_counts)}\n")
    if s.electronic_noise_levels:
        out.write(f"electronic_noise_levels = {_fmt(s.electronic_noise_levels)}\n")
    return out.getvalue()


def scenario_hash(s: Scenario) -> str:
    return hashlib.sha256(serialize_scenario(s).encode("utf-8")).hexdigest()
