"""Parameter sweeps reproducing the detector-noise, SNR-ratio and key-gain curves."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from os import PathLike
from typing import Any, Callable, Iterable, Sequence

from .. import __version__
from ..detector import DetectorParams, RepRateScenario, detector_from_scenario, electronic_noise_snu
from ..errors import ConfigError, CVQKDError, GainUndefinedError
from ..montecarlo import (
    SimulationConfig,
    empirical_key_rate,
    key_rate_standard_error,
    simulate_session,
)
from ..multimode import key_gain, key_rate_multimode, snr_ratio, snr_ratio_first_principles
from ..security import key_rate, noise_budget
from .config import Scenario, scenario_hash

__all__ = [
    "SweepResult",
    "run_fig1_sweep",
    "run_fig3_sweep",
    "run_fig5_sweep",
    "run_montecarlo_check",
    "FIG1_COLUMNS",
    "FIG3_COLUMNS",
    "FIG5_COLUMNS",
    "MC_COLUMNS",
]

FIG1_COLUMNS = ("family", "repetition_rate", "lo_power", "v_ele_snu")
FIG3_COLUMNS = ("m", "v_ele", "R_SNR", "R_SNR_first_principles", "R_SNR_limit", "transmittance", "excess_noise")
FIG5_COLUMNS = ("distance_km", "m", "v_ele", "K_single", "K_multi", "gain", "gain_defined")
MC_COLUMNS = ("m", "N", "analytic_K", "empirical_K", "K_se", "t_hat", "t_se", "xi_hat", "xi_se", "se_usable")


@dataclass
class SweepResult:
    """Tabular sweep output plus provenance metadata."""

    kind: str
    columns: tuple[str, ...]
    rows: list[tuple[Any, ...]]
    metadata: dict[str, str] = field(default_factory=dict)

    def column(self, name: str) -> list[Any]:
        try:
            i = self.columns.index(name)
        except ValueError:
            raise KeyError(f"unknown column {name!r}; available: {', '.join(self.columns)}") from None
        return [row[i] for row in self.rows]

    def to_csv(self) -> str:
        lines = [f"# {k}: {v}" for k, v in self.metadata.items()]
        lines.append(",".join(self.columns))
        lines.extend(",".join(_fmt(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | PathLike[str]) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "SweepResult":
        meta: dict[str, str] = {}
        body = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            elif line.strip():
                body.append(line)
        if not body:
            raise ValueError("no header row")
        columns = tuple(body[0].split(","))
        rows = [tuple(_parse(v) for v in line.split(",")) for line in body[1:]]
        return cls(meta.get("kind", ""), columns, rows, meta)

    @classmethod
    def read_csv(cls, path: str | PathLike[str]) -> "SweepResult":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv(fh.read())


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(text: str) -> Any:
    if text in ("true", "false"):
        return text == "true"
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _metadata(kind: str, s: Scenario, seed: int | None = None) -> dict[str, str]:
    meta = {"kind": kind, "scenario": s.name, "scenario_hash": scenario_hash(s), "tool_version": __version__}
    if seed is not None:
        meta["seed"] = str(seed)
    return meta


def _pmap(fn: Callable[[Any], Any], items: Sequence[Any], workers: int) -> list[Any]:
    # map() preserves input order, so results are emitted in grid order
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def run_fig1_sweep(s: Scenario, workers: int = 1) -> SweepResult:
    """Electronic noise versus repetition rate (and versus LO power at a fixed rate)."""
    if s.rep_rate is None:
        raise ConfigError("fig1 sweep needs a [rep_rate] section")
    rr = s.rep_rate
    base = s.detector if s.detector is not None else DetectorParams()
    scen_kw = dict(duty_cycle=rr.duty_cycle, bandwidth_multiple=rr.bandwidth_multiple,
                   gain_at_reference=rr.gain_at_reference, reference_bandwidth=rr.reference_bandwidth)

    def rate_row(rate: float) -> tuple:
        det = detector_from_scenario(RepRateScenario(float(rate), **scen_kw), base)
        return ("rep_rate", float(rate), base.lo_power, electronic_noise_snu(det))

    fixed = detector_from_scenario(RepRateScenario(rr.lo_sweep_repetition_rate, **scen_kw), base)

    def power_row(power: float) -> tuple:
        det = replace(fixed, lo_power=float(power))
        return ("lo_power", rr.lo_sweep_repetition_rate, float(power), electronic_noise_snu(det))

    rows = _pmap(rate_row, list(rr.rates()), workers) + _pmap(power_row, list(rr.lo_powers()), workers)
    return SweepResult("fig1", FIG1_COLUMNS, rows, _metadata("fig1", s))


def _fixed_channel(s: Scenario):
    if s.channel is None:
        raise ConfigError(f"{s.name}: this sweep needs a fixed [channel] section")
    return s.channel


def run_fig3_sweep(s: Scenario, workers: int = 1) -> SweepResult:
    """SNR ratio of m-mode to single-mode detection for each electronic-noise level."""
    if not s.mode_counts:
        raise ConfigError("fig3 sweep needs [modes] counts")
    chspec = _fixed_channel(s)
    grid = [(v, m) for v in s.noise_levels for m in s.mode_counts]

    def row(point: tuple[float, int]) -> tuple:
        v, m = point
        p = replace(s.protocol, electronic_noise=v)
        ch = chspec.resolve(p.detector_efficiency)
        limit = (1.0 + noise_budget(ch, p).chi_tot) / (1.0 + ch.excess_noise)
        return (m, v, snr_ratio(m, p, ch), snr_ratio_first_principles(m, p, ch), limit,
                ch.transmittance, ch.excess_noise)

    return SweepResult("fig3", FIG3_COLUMNS, _pmap(row, grid, workers), _metadata("fig3", s))


def run_fig5_sweep(s: Scenario, workers: int = 1) -> SweepResult:
    """Key rates and gain K_multi/K_single over distance, mode count and v_ele.

    Points where the single-mode key rate is not positive keep their raw key
    rates, get ``gain = nan`` and ``gain_defined = false``.
    """
    if s.distance_sweep is None:
        raise ConfigError("fig5 sweep needs a [distance_sweep] section")
    ds = s.distance_sweep
    grid = [(float(d), m, v) for v in s.noise_levels for d in ds.distances() for m in s.mode_counts]

    def row(point: tuple[float, int, float]) -> tuple:
        d, m, v = point
        p = replace(s.protocol, electronic_noise=v)
        ch = ds.channel_at(d, p.detector_efficiency)
        k1 = key_rate(p, ch).key_rate_raw
        km = key_rate_multimode(m, p, ch).key_rate_raw
        try:
            g, ok = key_gain(m, p, ch), True
        except GainUndefinedError:
            g, ok = math.nan, False
        return (d, m, v, k1, km, g, ok)

    return SweepResult("fig5", FIG5_COLUMNS, _pmap(row, grid, workers), _metadata("fig5", s))


def run_montecarlo_check(s: Scenario, seed: int | None = None, workers: int = 1,
                         on_batch: Callable[[int, int, Any], None] | None = None) -> SweepResult:
    """Compare empirical and analytic key rates for each (m, N) in the scenario.

    ``on_batch(m, n, batch)`` is called with every simulated batch (used by the
    CLI to export raw data). Batches too small to split or estimate yield a
    row of NaNs with ``se_usable = false``.
    """
    if s.montecarlo is None:
        raise ConfigError("mc-check needs a [montecarlo] section")
    mc = s.montecarlo
    seed = mc.seed if seed is None else seed
    chspec = _fixed_channel(s)
    p = s.protocol
    ch = chspec.resolve(p.detector_efficiency)
    rows = []
    for m in s.mode_counts:
        analytic = key_rate_multimode(m, p, ch).key_rate_raw
        for n in mc.sample_counts:
            cfg = SimulationConfig(n, seed, m, mc.policy)
            batch = simulate_session(cfg, p, ch, workers=workers)
            if on_batch is not None:
                on_batch(m, n, batch)
            try:
                report, est = empirical_key_rate(batch, p, m)
            except CVQKDError:
                rows.append((m, n, analytic, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, False))
                continue
            k_se = key_rate_standard_error(est, p, m)
            rows.append((m, n, analytic, report.key_rate_raw, k_se, est.t_hat, est.t_se,
                         est.xi_hat, est.xi_se, est.se_usable))
    return SweepResult("mc-check", MC_COLUMNS, rows, _metadata("mc-check", s, seed))


def gain_defined_anywhere(result: SweepResult) -> bool:
    return any(result.column("gain_defined"))


def iter_series(result: SweepResult, x: str, y: str, series: str | None) -> Iterable[tuple[Any, list, list]]:
    xs, ys = result.column(x), result.column(y)
    keys = result.column(series) if series else [None] * len(xs)
    for key in dict.fromkeys(keys):
        pts = [(a, b) for a, b, k in zip(xs, ys, keys) if k == key]
        yield key, [a for a, _ in pts], [b for _, b in pts]
