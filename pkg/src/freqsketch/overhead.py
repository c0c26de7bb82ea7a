"""Overhead calculus for emulating one weighted sample with another.

Sampling by probabilities q emulates sampling by target pps probabilities p
with overhead h(p, q) = max_x p_x / q_x: inflating the sample size by h
recovers the benchmark variance bounds of the target.  For estimating full
f-statistics only, the expected ratio E_{x~p}[p_x/q_x] suffices.  This module
computes those factors together with the closed-form moment-to-moment bound,
heavy-hitter and (sub-)Zipf bounds, universal (all monotone f) overheads,
multi-objective concave-sublinear base probabilities, and a combined report.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import FreqFn, FrequencyVector, as_freqfn
from .samplers import WeightedSample


def pps_probs(f: FreqFn, w: FrequencyVector) -> np.ndarray:
    """pps probabilities f(w_x)/||f(w)||_1 in descending-frequency rank order."""
    values = np.atleast_1d(np.asarray(f(w.ranked_weights), dtype=np.float64))
    norm = values.sum()
    if norm <= 0:
        raise ValueError("zero norm: cannot normalize pps probabilities")
    return values / norm


def max_overhead(p: np.ndarray, q: np.ndarray) -> float:
    """max_x p_x / q_x; +inf when some q_x = 0 with p_x > 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("probability vectors must be aligned")
    mask = p > 0
    if np.any(q[mask] == 0):
        return math.inf
    return float(np.max(p[mask] / q[mask]))


def expected_overhead(p: np.ndarray, q: np.ndarray) -> float:
    """E_{x~p}[p_x/q_x] = sum_x p_x**2 / q_x; +inf on unsupported keys."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("probability vectors must be aligned")
    mask = p > 0
    if np.any(q[mask] == 0):
        return math.inf
    return float(np.sum(p[mask] ** 2 / q[mask]))


def lq_lp_overhead(w: FrequencyVector, p: float, q: float) -> float:
    """Closed-form overhead ||w/w1||_q^q / ||w/w1||_p^p of emulating moment-p
    sampling by moment-q sampling; equals max_overhead of the pps vectors."""
    if q <= 0:
        raise ValueError("q must be positive")
    if p < q:
        raise ValueError("emulation requires p >= q")
    weights = w.ranked_weights
    if len(weights) == 0:
        raise ValueError("empty frequency vector")
    scaled = weights / weights[0]
    return float(np.sum(scaled**q) / np.sum(scaled**p))


def heavy_hitter_phi(w: FrequencyVector, q: float) -> float:
    """phi = w_1**q / ||w||_q^q, the top key's share of the q-th power mass.

    1/phi bounds the overhead of emulating any moment-p sample (p >= q)."""
    if q <= 0:
        raise ValueError("q must be positive")
    weights = w.ranked_weights
    if len(weights) == 0:
        raise ValueError("empty frequency vector")
    return float(weights[0] ** q / np.sum(weights**q))


def certify_emulation(
    sample: WeightedSample, norm_q: float, k: int
) -> tuple[float, str]:
    """Post-hoc certificate from an l_q sample: the sample emulates moment-p
    samples (p > q) of size k*r where r = max_{x in S} w_x**q / ||w||_q^q.

    Returns (k*r, witnessing key).  norm_q is the exact ||w||_q^q.
    """
    if len(sample.records) == 0:
        raise ValueError("empty sample cannot certify emulation")
    if norm_q <= 0:
        raise ValueError("norm must be positive")
    q = sample.q
    best = max(sample.records, key=lambda rec: (rec.weight**q, rec.key))
    r = best.weight**q / norm_q
    return k * r, best.key


def harmonic_number(n: int, beta: float = 1.0) -> float:
    """Generalized harmonic number H_{n,beta} = sum_{i=1..n} i**(-beta)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 0.0
    return float(np.sum(np.arange(1, n + 1, dtype=np.float64) ** (-beta)))


_ZETA_CUTOFF_N = 10**6


def zeta_bound(beta: float) -> float:
    """Riemann zeta(beta) for beta > 1.1 via a partial sum plus an
    Euler-Maclaurin tail correction; accuracy well under 1e-9."""
    if beta <= 1.1:
        raise ValueError("zeta_bound requires beta > 1.1; use harmonic_number")
    n = _ZETA_CUTOFF_N
    partial = harmonic_number(n, beta)
    tail = n ** (1.0 - beta) / (beta - 1.0) - 0.5 * n ** (-beta) + beta / 12.0 * n ** (
        -beta - 1.0
    )
    return partial + tail


@dataclass(frozen=True)
class SubZipfBound:
    """Overhead bounds for subZipf[alpha, c, n] frequencies under l_q."""

    harmonic: float  # c**q * H_{n, q*alpha}
    asymptotic: float | None  # min(1 + ln n, zeta(q*alpha)) * c**q when q*alpha > 1


def subzipf_bound(alpha: float, c: float, n: int, q: float) -> SubZipfBound:
    """Bound ||w/w1||_q^q <= c**q H_{n, q*alpha} for sub-Zipf frequencies."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if c < 1:
        raise ValueError("c must be >= 1")
    beta = q * alpha
    factor = c**q
    harmonic = factor * harmonic_number(n, beta)
    asymptotic = None
    if beta > 1:
        log_cap = 1.0 + math.log(n)
        zeta_cap = zeta_bound(beta) if beta > 1.1 else math.inf
        asymptotic = factor * min(log_cap, zeta_cap)
    return SubZipfBound(harmonic=harmonic, asymptotic=asymptotic)


def universal_emulation_overhead(q: np.ndarray) -> float:
    """max_i 1/(i q_i) over rank-aligned probabilities; >= H_n always,
    with equality at q_i = 1/(i H_n)."""
    q = np.asarray(q, dtype=np.float64)
    if len(q) == 0:
        raise ValueError("empty probability vector")
    if np.any(q <= 0):
        return math.inf
    ranks = np.arange(1, len(q) + 1, dtype=np.float64)
    return float(np.max(1.0 / (ranks * q)))


def universal_estimation_overhead(q: np.ndarray) -> float:
    """max_i (1/i**2) sum_{j<=i} 1/q_j, the overhead sufficient for estimating
    every monotone f-statistics (maximized by threshold functions)."""
    q = np.asarray(q, dtype=np.float64)
    if len(q) == 0:
        raise ValueError("empty probability vector")
    if np.any(q <= 0):
        return math.inf
    ranks = np.arange(1, len(q) + 1, dtype=np.float64)
    return float(np.max(np.cumsum(1.0 / q) / ranks**2))


def concave_sublinear_probs(w: FrequencyVector) -> tuple[np.ndarray, float]:
    """Base probabilities of the multi-objective concave-sublinear sample.

    q'_i = w_i / (i w_i + sum_{j>i} w_j); returns (q'/||q'||_1, ||q'||_1).
    The sample emulates every concave-sublinear f with overhead ||q'||_1.
    """
    weights = w.ranked_weights
    if len(weights) == 0:
        raise ValueError("empty frequency vector")
    ranks = np.arange(1, len(weights) + 1, dtype=np.float64)
    tails = np.concatenate([np.cumsum(weights[::-1])[::-1][1:], [0.0]])
    q_prime = weights / (ranks * weights + tails)
    factor = float(q_prime.sum())
    return q_prime / factor, factor


def concave_universal_condition(w: FrequencyVector) -> tuple[float, float]:
    """c = min_{i<n} i*w_i / sum_{j>i} w_j and the implied universal factor
    (1 + 1/c) * H_n for a concave-sublinear multi-objective sample."""
    weights = w.ranked_weights
    n = len(weights)
    h_n = harmonic_number(n)
    if n < 2:
        return math.inf, h_n
    ranks = np.arange(1, n, dtype=np.float64)
    tails = np.cumsum(weights[::-1])[::-1][1:]
    c = float(np.min(ranks * weights[:-1] / tails))
    return c, (1.0 + 1.0 / c) * h_n


def worst_case_bound(n: int, p: float) -> float:
    """n**(1 - 2/p): the worst-case overhead of emulating moment-p sampling
    with an l_2 sample over any support-n frequency vector."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if p < 2:
        raise ValueError("p must be >= 2")
    return float(n ** (1.0 - 2.0 / p))


def near_uniform_bound(w: FrequencyVector, p: float) -> float:
    """(w_1/w_n)**p: overhead bound for emulating moment-p sampling with an
    l_1 (or l_0) sample; tight for near-uniform frequencies."""
    weights = w.ranked_weights
    if len(weights) == 0:
        raise ValueError("empty frequency vector")
    return float((weights[0] / weights[-1]) ** p)


@dataclass
class SchemeOverheads:
    """Overheads of one base sampling scheme against the target moments."""

    max_overhead: dict[str, float] = field(default_factory=dict)
    expected_overhead: dict[str, float] = field(default_factory=dict)
    universal_emulation: float = math.inf
    universal_estimation: float = math.inf


@dataclass
class OverheadReport:
    """Per-scheme overheads plus heavy-hitter shares and distribution bounds."""

    n: int
    targets: list[float]
    schemes: dict[str, SchemeOverheads]
    heavy_hitter_phi: dict[str, float]
    concave_factor: float
    worst_case: dict[str, float]
    near_uniform: dict[str, float]
    zipf_alpha_fit: float | None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "targets": self.targets,
            "schemes": {
                name: {
                    "max_overhead": s.max_overhead,
                    "expected_overhead": s.expected_overhead,
                    "universal_emulation": s.universal_emulation,
                    "universal_estimation": s.universal_estimation,
                }
                for name, s in self.schemes.items()
            },
            "heavy_hitter_phi": self.heavy_hitter_phi,
            "concave_emulation_factor": self.concave_factor,
            "worst_case_bound_l2": self.worst_case,
            "near_uniform_bound_l1": self.near_uniform,
            "zipf_alpha_fit": self.zipf_alpha_fit,
        }

    def to_json(self, indent: int | None = 2) -> str:
        def clean(value):
            if isinstance(value, float) and math.isinf(value):
                return "inf"
            if isinstance(value, dict):
                return {k: clean(v) for k, v in value.items()}
            if isinstance(value, list):
                return [clean(v) for v in value]
            return value

        return json.dumps(clean(self.to_dict()), sort_keys=True, indent=indent)


def overhead_report(
    w: FrequencyVector, targets: list[float] | None = None
) -> OverheadReport:
    """Full overhead report for l1, l2, and concave-sublinear base schemes.

    For each target moment p the max and expected emulation overheads are
    reported, together with universal overheads per scheme, heavy-hitter
    shares for q in {1, 2}, and the worst-case / near-uniform bounds.
    """
    if w.n == 0:
        raise ValueError("empty frequency vector")
    targets = [float(p) for p in (targets or [3.0, 10.0])]
    target_probs = {p: pps_probs(FreqFn.moment(p), w) for p in targets}

    base: dict[str, np.ndarray] = {
        "l1": pps_probs(FreqFn.moment(1.0), w),
        "l2": pps_probs(FreqFn.moment(2.0), w),
    }
    concave_q, concave_factor = concave_sublinear_probs(w)
    base["concave"] = concave_q

    schemes = {}
    for name, q_vec in base.items():
        entry = SchemeOverheads(
            universal_emulation=universal_emulation_overhead(q_vec),
            universal_estimation=universal_estimation_overhead(q_vec),
        )
        for p, p_vec in target_probs.items():
            label = f"{p:g}"
            entry.max_overhead[label] = max_overhead(p_vec, q_vec)
            entry.expected_overhead[label] = expected_overhead(p_vec, q_vec)
        schemes[name] = entry

    from .core import zipf_fit

    alpha = zipf_fit(w) if w.n >= 2 else None
    return OverheadReport(
        n=w.n,
        targets=targets,
        schemes=schemes,
        heavy_hitter_phi={"1": heavy_hitter_phi(w, 1.0), "2": heavy_hitter_phi(w, 2.0)},
        concave_factor=concave_factor,
        worst_case={f"{p:g}": worst_case_bound(w.n, p) for p in targets if p >= 2},
        near_uniform={f"{p:g}": near_uniform_bound(w, p) for p in targets},
        zipf_alpha_fit=alpha,
    )
