"""Monte Carlo simulation of joint homodyne measurement and parameter estimation.

Random numbers
--------------
Every (source, mode) pair owns an independent PCG64 stream derived from
``SeedSequence(seed, spawn_key=(source, mode))``. Shot ``i`` of a stream
consumes exactly the ``i``-th 64-bit output, mapped to an open-interval
uniform ``((raw >> 11) + 0.5) / 2**53`` and turned into a standard normal by
the inverse normal CDF. Consequently:

* adding modes never changes the draws of existing modes,
* any index range can be generated independently (``PCG64.advance``), so
  output does not depend on how the work is sharded or chunked,
* the stream depends only on NumPy's PCG64 and SeedSequence algorithms,
  which are fixed and platform independent.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtri

from .errors import DomainError, EstimationError
from .multimode import effective_single_mode, key_rate_multimode
from .security import ChannelParams, KeyRateReport, ProtocolParams

__all__ = [
    "BasisPolicy",
    "SimulationConfig",
    "QuadratureBatch",
    "DataSplit",
    "EstimationResult",
    "standard_normals",
    "simulate_session",
    "split_data",
    "estimate_channel",
    "empirical_key_rate",
    "key_rate_standard_error",
    "null_key_threshold",
]

_CHUNK = 1 << 18


class _Source(enum.IntEnum):
    ALICE = 0
    SHOT = 1
    EXCESS = 2
    ELECTRONIC = 3
    ALICE_BASIS = 4
    BOB_BASIS = 5
    SPLIT = 6


class BasisPolicy(str, enum.Enum):
    X_ONLY = "x-only"
    RANDOM = "random-basis"


@dataclass(frozen=True)
class SimulationConfig:
    """Parameters of one simulated session.

    ``noiseless`` is a diagnostic switch that zeroes all noise draws (shot,
    excess, electronic); estimation then inverts a noise-free model.
    """

    sample_count: int
    seed: int = 0
    mode_count: int = 1
    quadrature_choice_policy: BasisPolicy = BasisPolicy.X_ONLY
    keep_per_mode: bool = False
    noiseless: bool = False

    def __post_init__(self) -> None:
        if int(self.sample_count) != self.sample_count or self.sample_count < 1:
            raise DomainError(f"sample_count must be an integer >= 1, got {self.sample_count!r}")
        if int(self.mode_count) != self.mode_count or self.mode_count < 1:
            raise DomainError(f"mode_count must be an integer >= 1, got {self.mode_count!r}")
        if not (0 <= self.seed < 2**64):
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "quadrature_choice_policy", BasisPolicy(self.quadrature_choice_policy))


@dataclass
class QuadratureBatch:
    """Simulated or imported Alice/Bob quadrature data.

    ``alice_virtual[k]`` is the sum over modes of Alice's quadratures for shot
    ``k``; ``bob_joint[k]`` is Bob's joint homodyne outcome.
    """

    alice_virtual: np.ndarray
    bob_joint: np.ndarray
    mode_count: int = 1
    seed: int | None = None
    per_mode_alice: np.ndarray | None = field(default=None, repr=False)
    noiseless: bool = False

    def __post_init__(self) -> None:
        self.alice_virtual = np.asarray(self.alice_virtual, dtype=np.float64)
        self.bob_joint = np.asarray(self.bob_joint, dtype=np.float64)
        if self.alice_virtual.shape != self.bob_joint.shape or self.alice_virtual.ndim != 1:
            raise DomainError("alice_virtual and bob_joint must be 1-D arrays of equal length")

    def __len__(self) -> int:
        return self.alice_virtual.size


@dataclass(frozen=True)
class DataSplit:
    """Disjoint index sets for key generation, estimation and shot-noise monitoring."""

    key: np.ndarray
    estimation: np.ndarray
    shot_noise: np.ndarray

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (self.key.size, self.estimation.size, self.shot_noise.size)


@dataclass(frozen=True)
class EstimationResult:
    t_hat: float
    xi_hat: float
    t_se: float
    xi_se: float
    sample_counts: dict[str, int]
    se_usable: bool = True

    @property
    def standard_errors(self) -> dict[str, float]:
        return {"t_hat": self.t_se, "xi_hat": self.xi_se}


def _stream(seed: int, source: int, mode: int) -> np.random.PCG64:
    return np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(int(source), int(mode))))


def _raw(seed: int, source: int, mode: int, start: int, count: int) -> np.ndarray:
    bg = _stream(seed, source, mode)
    if start:
        bg.advance(start)
    return bg.random_raw(count)


def standard_normals(seed: int, source: int, mode: int, start: int, count: int) -> np.ndarray:
    """Standard normal draws ``start .. start+count-1`` of one substream."""
    u = ((_raw(seed, source, mode, start, count) >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def _bits(seed: int, source: int, start: int, count: int) -> np.ndarray:
    return (_raw(seed, source, 0, start, count) >> np.uint64(63)).astype(bool)


def _simulate_range(cfg: SimulationConfig, p: ProtocolParams, ch: ChannelParams, start: int, stop: int):
    n = stop - start
    m = cfg.mode_count
    seed = cfg.seed
    gain = math.sqrt(p.detector_efficiency * ch.transmittance)
    sd_a = math.sqrt(p.modulation_variance)
    sd_xi = math.sqrt(ch.excess_noise)
    alice = np.zeros(n)
    signal_noise = np.zeros(n)  # sum of X_A + X_xi, scaled by sqrt(eta T) at the end
    shot = np.zeros(n)
    per_mode = np.empty((m, n)) if cfg.keep_per_mode else None
    for i in range(m):
        xa = sd_a * standard_normals(seed, _Source.ALICE, i, start, n)
        alice += xa
        if per_mode is not None:
            per_mode[i] = xa
        signal_noise += xa
        if not cfg.noiseless:
            if sd_xi > 0.0:
                signal_noise += sd_xi * standard_normals(seed, _Source.EXCESS, i, start, n)
            shot += standard_normals(seed, _Source.SHOT, i, start, n)
    bob = gain * signal_noise + shot
    if not cfg.noiseless and p.electronic_noise > 0.0:
        bob += math.sqrt(p.electronic_noise) * standard_normals(seed, _Source.ELECTRONIC, 0, start, n)
    if cfg.quadrature_choice_policy is BasisPolicy.RANDOM:
        keep = _bits(seed, _Source.ALICE_BASIS, start, n) == _bits(seed, _Source.BOB_BASIS, start, n)
        alice, bob = alice[keep], bob[keep]
        if per_mode is not None:
            per_mode = per_mode[:, keep]
    return alice, bob, per_mode


def simulate_session(
    cfg: SimulationConfig,
    p: ProtocolParams,
    ch: ChannelParams,
    *,
    workers: int = 1,
) -> QuadratureBatch:
    """Simulate ``cfg.sample_count`` joint measurements.

    Per shot and per mode Alice draws ``X_A ~ N(0, V_A)``; the channel adds
    ``X_xi ~ N(0, xi)`` at its input and the homodyne detector adds vacuum
    noise ``X_0 ~ N(0, 1)``. One electronic-noise draw ``X_ele ~ N(0, v_ele)``
    is added per shot::

        X_B = sqrt(eta T) * sum(X_A + X_xi) + sum(X_0) + X_ele

    The output is a deterministic function of ``(cfg, p, ch)`` and does not
    depend on ``workers``.
    """
    n = int(cfg.sample_count)
    bounds = [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _simulate_range(cfg, p, ch, *b), bounds))
    else:
        parts = [_simulate_range(cfg, p, ch, *b) for b in bounds]
    alice = np.concatenate([a for a, _, _ in parts])
    bob = np.concatenate([b for _, b, _ in parts])
    per_mode = np.concatenate([pm for _, _, pm in parts], axis=1) if cfg.keep_per_mode else None
    return QuadratureBatch(alice, bob, cfg.mode_count, cfg.seed, per_mode, cfg.noiseless)


def split_data(batch: QuadratureBatch, gamma: float = 1.0 / 3.0, seed: int | None = None) -> DataSplit:
    """Randomly partition shot indices into key / estimation / shot-noise sets.

    The key set receives ``floor(gamma * N)`` shots. The remainder is split
    between estimation and shot-noise monitoring; when it is odd the extra
    shot goes to estimation (N=10, gamma=1/3 gives sizes 3, 4, 3). The
    permutation sorts raw draws of a dedicated substream of ``seed`` (default: the
    batch seed, or 0 for imported data). Index arrays are returned sorted.
    """
    if not (0.0 < gamma < 1.0):
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    n = len(batch)
    n_key = int(math.floor(gamma * n + 1e-9))
    rest = n - n_key
    n_est = (rest + 1) // 2
    n_shot = rest - n_est
    if min(n_key, n_est, n_shot) < 1:
        raise DomainError(f"{n} samples cannot populate three partitions with gamma={gamma}")
    if seed is None:
        seed = batch.seed if batch.seed is not None else 0
    perm = np.argsort(_raw(seed, _Source.SPLIT, 0, 0, n), kind="stable")
    return DataSplit(
        np.sort(perm[:n_key]),
        np.sort(perm[n_key:n_key + n_est]),
        np.sort(perm[n_key + n_est:]),
    )


def estimate_channel(
    batch: QuadratureBatch,
    p: ProtocolParams,
    m: int | None = None,
    split: DataSplit | None = None,
) -> EstimationResult:
    """Estimate (T, xi) from Alice/Bob correlations.

    Both joint quadratures are divided by sqrt(m). With sample variance
    ``Va``, covariance ``c`` and Bob variance ``Vb`` (ddof=1)::

        b = c / Va                 # regression slope, sqrt(eta T)
        T = b**2 / eta             # = c**2 / (eta Va**2)
        s2 = Vb - b c              # residual variance
        xi = (s2 - 1 - v_ele/m) / (eta T)

    Standard errors: SE(b) = sqrt(s2 / ((N-1) Va)), SE(T) = 2|b| SE(b)/eta,
    SE(s2) = s2 sqrt(2/(N-1)) and, by the delta method,
    SE(xi) = sqrt((SE(s2)/(eta T))**2 + (2 xi SE(b)/b)**2).

    If ``split`` is given only its estimation indices are used. The excess
    noise estimate is reported unclamped and may be slightly negative.
    """
    m = batch.mode_count if m is None else m
    if split is not None:
        idx = split.estimation
        counts = dict(zip(("key", "estimation", "shot_noise"), split.sizes))
    else:
        idx = slice(None)
        counts = {"estimation": len(batch)}
    scale = 1.0 / math.sqrt(m)
    a = batch.alice_virtual[idx] * scale
    b_out = batch.bob_joint[idx] * scale
    n = a.size
    if n < 2:
        raise EstimationError(f"need at least 2 samples to estimate, got {n}")
    a_c = a - a.mean()
    b_c = b_out - b_out.mean()
    var_a = float(a_c @ a_c) / (n - 1)
    if not var_a > 0.0:
        raise EstimationError("Alice's data has zero variance")
    cov = float(a_c @ b_c) / (n - 1)
    var_b = float(b_c @ b_c) / (n - 1)

    eta = p.detector_efficiency
    slope = cov / var_a
    t_hat = slope * slope / eta
    if not t_hat > 0.0:
        raise EstimationError("no correlation between Alice and Bob; transmittance estimate is zero")
    resid = max(var_b - slope * cov, 0.0)
    vacuum = 0.0 if batch.noiseless else 1.0 + p.electronic_noise / m
    xi_hat = (resid - vacuum) / (eta * t_hat)

    usable = n > 2
    if usable:
        se_slope = math.sqrt(resid / ((n - 1) * var_a))
        t_se = 2.0 * abs(slope) * se_slope / eta
        se_resid = resid * math.sqrt(2.0 / (n - 1))
        xi_se = math.hypot(se_resid / (eta * t_hat), 2.0 * xi_hat * se_slope / slope)
    else:
        t_se = xi_se = math.nan
    return EstimationResult(t_hat, xi_hat, t_se, xi_se, counts, usable)


def _channel_from_estimate(est: EstimationResult) -> ChannelParams:
    return ChannelParams(min(est.t_hat, 1.0), max(est.xi_hat, 0.0))


def empirical_key_rate(
    batch: QuadratureBatch,
    p: ProtocolParams,
    m: int | None = None,
    *,
    split: DataSplit | None = None,
) -> tuple[KeyRateReport, EstimationResult]:
    """Key rate computed from parameters estimated on the data.

    The batch is split with ``gamma = p.key_fraction``; (T, xi) are estimated
    on the estimation partition (T clamped to 1, xi to 0) and the key rate is
    evaluated for the virtual state with the realised key fraction.
    """
    m = batch.mode_count if m is None else m
    split = split_data(batch, p.key_fraction) if split is None else split
    est = estimate_channel(batch, p, m, split)
    gamma = split.key.size / len(batch)
    report = key_rate_multimode(m, replace(p, key_fraction=gamma), _channel_from_estimate(est))
    return report, est


def key_rate_standard_error(est: EstimationResult, p: ProtocolParams, m: int = 1, rel_step: float = 1e-6) -> float:
    """Delta-method standard error of the key rate from SE(T) and SE(xi).

    T and xi estimates are treated as independent; derivatives are central
    finite differences.
    """
    if not est.se_usable:
        return math.nan
    eff = effective_single_mode(p, m)
    ch = _channel_from_estimate(est)

    def k(t: float, xi: float) -> float:
        return key_rate_multimode(1, eff, ChannelParams(t, xi)).key_rate_raw

    ht = rel_step * ch.transmittance
    t_lo, t_hi = ch.transmittance - ht, min(ch.transmittance + ht, 1.0)
    dk_dt = (k(t_hi, ch.excess_noise) - k(t_lo, ch.excess_noise)) / (t_hi - t_lo)
    hx = rel_step * max(ch.excess_noise, 1e-3)
    x_lo = max(ch.excess_noise - hx, 0.0)
    x_hi = ch.excess_noise + hx
    dk_dx = (k(ch.transmittance, x_hi) - k(ch.transmittance, x_lo)) / (x_hi - x_lo)
    return math.hypot(dk_dt * est.t_se, dk_dx * est.xi_se)


def null_key_threshold(p: ProtocolParams, transmittance: float, m: int = 1, *, hi: float = 10.0, tol: float = 1e-12) -> float:
    """Excess noise at which the analytic key rate crosses zero (bisection)."""

    def k(xi: float) -> float:
        return key_rate_multimode(m, p, ChannelParams(transmittance, xi)).key_rate_raw

    lo = 0.0
    if k(lo) <= 0.0:
        return 0.0
    if k(hi) > 0.0:
        raise DomainError(f"key rate still positive at xi={hi}")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if k(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
