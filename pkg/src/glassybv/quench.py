"""Disorder averaging of the BV success probability.

Every batch of realizations draws from its own generator, seeded by
``SeedSequence(seed, spawn_key=stream + (batch_index,))``. A batch's
numbers therefore never depend on which worker ran it, and batches are
merged strictly in index order, so the estimate is the same for any
worker count.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .disorder import (
    ClassicalKind,
    QuantumDisorder,
    QuantumKind,
    classical_param_for_strength,
    quantum_param_for_strength,
    sample_world_cartesian,
)
from .engine import SecretString, bit_factors_cartesian, classical_success
from .errors import AllZero, InvalidParameter

MIN_MAX_SAMPLES = 10_000
DEFAULT_MAX_SAMPLES = 10_000_000


@dataclass(frozen=True)
class StoppingRule:
    """Stop once ``z * std_error < half_width``."""

    half_width: float = 5e-4
    z: float = 1.96
    batch_size: int | None = None  # None: 2**20 // n, clamped to [1024, 65536]

    def batch_for(self, n: int) -> int:
        if self.batch_size is not None:
            return int(self.batch_size)
        return max(1024, min(65536, (1 << 20) // n))


@dataclass(frozen=True)
class QuenchEstimate:
    q_mean: float
    std_error: float
    n_samples: int
    converged: bool
    seed: int


@dataclass(frozen=True)
class LnPStats:
    mean_lnP: float
    std_lnP: float
    skewness: float
    excess_kurtosis: float
    predicted_mean_P: float
    predicted_stderr: float
    mc_mean_P: float
    mc_stderr_P: float
    n_samples: int
    discarded_fraction: float
    heavy_tailed: bool = False


@dataclass(frozen=True)
class AdvantageRow:
    n: int
    q: float
    q_stderr: float
    c: float
    diff: float
    converged: bool


def batch_rng(seed: int, stream: Sequence[int], index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(*stream, index)))


def sample_factors(model: QuantumDisorder, bits: np.ndarray, rng: np.random.Generator, size: int):
    """Per-bit success factors, shape (size, n), for ``size`` fresh realizations."""
    n = bits.shape[0]
    pre = tuple(a.reshape(size, n) for a in sample_world_cartesian(model, rng, size * n))
    post = tuple(a.reshape(size, n) for a in sample_world_cartesian(model, rng, size * n))
    return np.clip(bit_factors_cartesian(bits, pre, post), 0.0, 1.0)


def _batch_moments(args):
    model, bits, seed, stream, index, size = args
    rng = batch_rng(seed, stream, index)
    p = np.prod(sample_factors(model, bits, rng, size), axis=1)
    mean = float(p.mean())
    return size, mean, float(((p - mean) ** 2).sum())


def _pool(acc, part):
    """Merge (count, mean, M2) summaries."""
    n_a, mean_a, m2_a = acc
    n_b, mean_b, m2_b = part
    n = n_a + n_b
    delta = mean_b - mean_a
    return n, mean_a + delta * n_b / n, m2_a + m2_b + delta * delta * n_a * n_b / n


def _stderr(acc):
    n, _, m2 = acc
    return math.sqrt(m2 / (n - 1) / n) if n > 1 else math.inf


def quenched_average(
    model: QuantumDisorder,
    s: SecretString,
    seed: int,
    max_samples: int = DEFAULT_MAX_SAMPLES,
    rule: StoppingRule = StoppingRule(),
    *,
    stream: Sequence[int] = (),
    workers: int = 1,
) -> QuenchEstimate:
    """Monte Carlo mean of the success probability over frozen disorder.

    All 2n gates of a realization are independent draws from ``model``.
    Batches are added until the ``rule`` half-width is met or
    ``max_samples`` realizations are used.
    """
    if max_samples < MIN_MAX_SAMPLES:
        raise InvalidParameter(f"max_samples must be >= {MIN_MAX_SAMPLES}")
    bits = s.as_array()
    size = rule.batch_for(s.n)
    stream = tuple(int(k) for k in stream)

    def jobs():
        index, used = 0, 0
        while used < max_samples:
            take = min(size, max_samples - used)
            yield (model, bits, seed, stream, index, take)
            index += 1
            used += take

    acc = (0, 0.0, 0.0)
    converged = False
    if workers <= 1:
        results: Iterable = map(_batch_moments, jobs())
        for part in results:
            acc = _pool(acc, part)
            if rule.z * _stderr(acc) < rule.half_width:
                converged = True
                break
    else:
        pending = jobs()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = False
            while not done:
                round_jobs = [j for _, j in zip(range(workers), pending)]
                if not round_jobs:
                    break
                for part in pool.map(_batch_moments, round_jobs):
                    acc = _pool(acc, part)
                    if rule.z * _stderr(acc) < rule.half_width:
                        converged = done = True
                        break
    return QuenchEstimate(acc[1], _stderr(acc), acc[0], converged, int(seed))


def analytic_uniform_special(case: str, n: int) -> float:
    """Closed-form disorder average for the full-sphere and half-sphere caps."""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    key = case.lower().replace("_", "").replace("-", "")
    if key == "fullsphere":
        return 0.5**n
    if key == "halfsphere":
        return (0.5 + math.pi / 16.0) ** n
    raise InvalidParameter(f"unknown case {case!r}")


def lnP_statistics(
    model: QuantumDisorder,
    n: int,
    samples: int,
    seed: int,
    *,
    s: SecretString | None = None,
    stream: Sequence[int] = (),
) -> LnPStats:
    """Moments of ln P and the log-normal prediction exp(mean + var / 2).

    Exact zeros of P are dropped from the log moments (their fraction is
    reported) but kept in the direct Monte Carlo mean.
    """
    s = s or SecretString.zeros(n)
    if s.n != n:
        raise InvalidParameter(f"secret length {s.n} != n={n}")
    heavy = model.kind is QuantumKind.CAUCHY
    if heavy:
        warnings.warn("Cauchy disorder has no finite moments; log-normal limit not expected",
                      stacklevel=2)
    bits = s.as_array()
    size = StoppingRule().batch_for(n)
    logs, probs = [], []
    index, used = 0, 0
    while used < samples:
        take = min(size, samples - used)
        f = sample_factors(model, bits, batch_rng(seed, tuple(stream), index), take)
        with np.errstate(divide="ignore"):
            logp = np.log(f).sum(axis=1)
        logs.append(logp)
        probs.append(np.exp(logp))
        index += 1
        used += take
    logp = np.concatenate(logs)
    p = np.concatenate(probs)
    finite = np.isfinite(logp)
    if not finite.any():
        raise AllZero(f"all {samples} sampled success probabilities are zero")
    lp = logp[finite]
    m = len(lp)
    mean = float(lp.mean())
    std = float(lp.std(ddof=1)) if m > 1 else 0.0
    if std > 0.0:
        skew = float(stats.skew(lp))
        kurt = float(stats.kurtosis(lp))
    else:
        skew = kurt = 0.0
    predicted = math.exp(mean + 0.5 * std * std)
    var_pred = std**2 / m + std**4 / (2.0 * max(m - 1, 1))
    return LnPStats(
        mean_lnP=mean,
        std_lnP=std,
        skewness=skew,
        excess_kurtosis=kurt,
        predicted_mean_P=predicted,
        predicted_stderr=predicted * math.sqrt(var_pred),
        mc_mean_P=float(p.mean()),
        mc_stderr_P=float(p.std(ddof=1) / math.sqrt(len(p))) if len(p) > 1 else 0.0,
        n_samples=len(p),
        discarded_fraction=1.0 - m / len(p),
        heavy_tailed=heavy,
    )


def advantage_curve(
    quantum_kind,
    classical_kind,
    sigma_bar: float,
    n_range: Iterable[int],
    seed: int,
    max_samples: int = DEFAULT_MAX_SAMPLES,
    rule: StoppingRule = StoppingRule(),
    *,
    stream: Sequence[int] = (),
) -> list[AdvantageRow]:
    """Q - C versus string length at one matched scaled strength.

    Each side is calibrated against its own family maximum. Q uses the
    all-zeros secret; for reflection-symmetric disorder the average does
    not depend on the string.
    """
    qmodel = quantum_param_for_strength(QuantumKind(quantum_kind), sigma_bar)
    cmodel = classical_param_for_strength(ClassicalKind(classical_kind), sigma_bar)
    rows = []
    for n in n_range:
        est = quenched_average(qmodel, SecretString.zeros(n), seed, max_samples, rule,
                               stream=(*stream, n))
        c = classical_success(cmodel, n)
        rows.append(AdvantageRow(n, est.q_mean, est.std_error, c, est.q_mean - c, est.converged))
    return rows
