"""Inverse-probability estimators and error evaluation.

Estimates of sums of the form sum_x L_x f(w_x) are computed from any
WeightedSample by summing f(w_x) / p'_x over sampled keys.  Error reports use
the exact analytic variance for with-replacement samplers, and for the
without-replacement samplers a per-run conditional variance: for every key
(sampled or not) the inclusion probability is computed against the threshold
induced by the other keys' randomization, and (1/p' - 1) f(w)**2 summed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Collection

import numpy as np

from .advice import AdviceMap, AdviceParams
from .core import FreqFn, FrequencyVector, as_freqfn
from .samplers import (
    SamplerConfig,
    WeightedSample,
    exact_wr_variance,
)

DEFAULT_TRIALS = 50


@dataclass(frozen=True)
class DomainQuery:
    """Target statistics sum_{x in H} L_x f(w_x)."""

    fn: FreqFn
    domain: Collection[str] | Callable[[str], bool] | None = None
    coefficients: dict[str, float] | None = None

    def in_domain(self, key: str) -> bool:
        if self.domain is None:
            return True
        if callable(self.domain):
            return bool(self.domain(key))
        return key in self.domain

    def coefficient(self, key: str) -> float:
        if self.coefficients is None:
            return 1.0
        return self.coefficients.get(key, 1.0)


def estimate_query(sample: WeightedSample, query: DomainQuery) -> float:
    """Unbiased estimate sum_{x in S, x in H} L_x f(w_x) / p'_x."""
    total = 0.0
    for record in sample.records:
        if record.probability <= 0:
            raise ValueError(f"record for key {record.key!r} has zero probability")
        if not query.in_domain(record.key):
            continue
        total += (
            query.coefficient(record.key)
            * float(query.fn(record.weight))
            / record.probability
        )
    return total


def exact_query(w: FrequencyVector, query: DomainQuery) -> float:
    """Ground-truth value of a domain query from aggregated data."""
    total = 0.0
    for key, weight in w.items():
        if query.in_domain(key):
            total += query.coefficient(key) * float(query.fn(weight))
    return total


def estimate_rank_distribution(sample: WeightedSample) -> list[tuple[float, float]]:
    """(frequency, estimated rank) for each sampled key, frequency-descending.

    The rank of x counts keys with frequency >= w_x and is estimated with the
    weak-threshold function: rank-hat(x) = sum_{y in S} I[w_y >= w_x] / p'_y.
    """
    pairs = []
    for record in sample.records:
        rank_hat = sum(
            1.0 / other.probability
            for other in sample.records
            if other.weight >= record.weight
        )
        pairs.append((record.weight, rank_hat))
    pairs.sort(key=lambda fr: -fr[0])
    return pairs


def benchmark_bound(
    f: FreqFn,
    w: FrequencyVector,
    k: int,
    domain: Collection[str] | Callable[[str], bool] | None = None,
) -> float:
    """Benchmark variance bound of a size-k pps sample by f.

    Full statistics: ||f(w)||_1**2 / k.  With a domain H, the tighter
    (sum_{x in H} f(w_x)) * ||f(w)||_1 / k.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    values = np.atleast_1d(np.asarray(f(w.ranked_weights), dtype=np.float64))
    norm = float(values.sum())
    if domain is None:
        return norm * norm / k
    query = DomainQuery(f, domain=domain)
    domain_sum = exact_query(w, query)
    return domain_sum * norm / k


def per_key_benchmark_bound(f: FreqFn, w: FrequencyVector, key: str, k: int) -> float:
    """Per-key benchmark variance bound f(w_x) ||f(w)||_1 / k."""
    values = np.atleast_1d(np.asarray(f(w.ranked_weights), dtype=np.float64))
    return float(f(w[key])) * float(values.sum()) / k


@dataclass
class ErrorReport:
    """Variance / NRMSE summary for an estimator of ||f(w)||_1."""

    exact: float
    variance: float
    nrmse: float
    trials: int
    mean_estimate: float | None = None
    per_trial: list[float] | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "exact": self.exact,
                "variance": self.variance,
                "nrmse": self.nrmse,
                "trials": self.trials,
                "mean_estimate": self.mean_estimate,
                "per_trial": self.per_trial,
            },
            sort_keys=True,
        )


# --- sampler specifications for the evaluator --------------------------------


@dataclass(frozen=True)
class WithReplacementSpec:
    """k independent pps draws by f (or by moment q)."""

    f_or_q: object
    k: int


@dataclass(frozen=True)
class BottomKSpec:
    """Bottom-k over w**q seeds (ppswor or priority)."""

    k: int
    q: float = 1.0
    scheme: str = "ppswor"


@dataclass(frozen=True)
class AdviceSpec:
    """Sample-by-advice sketch; sizes and scheme from params."""

    params: AdviceParams
    advice: AdviceMap


def evaluate_nrmse(
    w: FrequencyVector,
    f: FreqFn,
    sampler,
    trials: int = DEFAULT_TRIALS,
    base_seed: int = 0,
    keep_trials: bool = False,
) -> ErrorReport:
    """Error report for estimating ||f(w)||_1 with the given sampler.

    With-replacement samplers get the exact analytic variance (no trials).
    Bottom-k and advice samplers get the conditional variance averaged over
    `trials` hash seeds (base_seed, base_seed+1, ...).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    values = np.atleast_1d(np.asarray(f(w.ranked_weights), dtype=np.float64))
    norm = float(values.sum())
    if norm <= 0:
        raise ValueError("target statistics ||f(w)||_1 is zero")

    if isinstance(sampler, WithReplacementSpec):
        variance = exact_wr_variance(w, f, sampler.f_or_q, sampler.k)
        return ErrorReport(
            exact=norm,
            variance=variance,
            nrmse=math.sqrt(variance) / norm,
            trials=0,
        )
    if isinstance(sampler, BottomKSpec):
        runner = _bottomk_conditional_variance
        args = (w, values, sampler)
    elif isinstance(sampler, AdviceSpec):
        runner = _advice_conditional_variance
        args = (w, values, sampler)
    else:
        raise TypeError(f"unknown sampler spec: {type(sampler).__name__}")

    per_run = [runner(*args, seed=base_seed + t) for t in range(trials)]
    variance = float(np.mean(per_run))
    return ErrorReport(
        exact=norm,
        variance=variance,
        nrmse=math.sqrt(variance) / norm,
        trials=trials,
        per_trial=per_run if keep_trials else None,
    )


def _bottomk_conditional_variance(
    w: FrequencyVector, f_values: np.ndarray, spec: BottomKSpec, seed: int
) -> float:
    """One run of the conditional variance for a bottom-k sample.

    For each key, tau is the k-th smallest seed among the *other* keys: the
    (k+1)-th smallest overall if the key is in the bottom k, the k-th smallest
    otherwise.  The run's variance is sum (1/p' - 1) f(w)**2 with
    p' = Pr[seed < tau].
    """
    n = w.n
    if n <= spec.k:
        return 0.0
    config = SamplerConfig(k=spec.k, q=spec.q, scheme=spec.scheme, seed=seed)
    wq = w.ranked_weights**spec.q
    seeds = config.hash_source().draw_many(w.ranked_keys) / wq
    order = np.sort(seeds)
    s_k, s_k1 = order[spec.k - 1], order[spec.k]
    tau = np.where(seeds <= s_k, s_k1, s_k)
    if spec.scheme == "ppswor":
        p = -np.expm1(-wq * tau)
    else:
        p = np.minimum(wq * tau, 1.0)
    return float(np.sum((1.0 / p - 1.0) * f_values**2))


def _advice_conditional_variance(
    w: FrequencyVector, f_values: np.ndarray, spec: AdviceSpec, seed: int
) -> float:
    """One run of the conditional variance for the sample-by-advice sketch.

    Heavy-component keys contribute 0.  For every other key the two component
    thresholds are taken over all remaining keys (the evaluator sees the full
    data, so thresholds use population order statistics), mirroring the
    retained-key estimator applied to all keys.
    """
    params = spec.params
    hashed = AdviceParams(
        k_h=params.k_h,
        k_p=params.k_p,
        k_u=params.k_u,
        fn=params.fn,
        scheme=params.scheme,
        seed=seed,
    )
    keys = w.ranked_keys
    n = len(keys)
    order = sorted(range(n), key=lambda i: (-spec.advice.get(keys[i]), keys[i]))
    pool_idx = np.array(order[params.k_h :], dtype=np.intp)
    if len(pool_idx) == 0:
        return 0.0
    fn = params.fn
    hs = hashed.hash_source()
    pool_keys = [keys[i] for i in pool_idx]
    h = hs.draw_many(pool_keys)
    fa = np.array([fn(spec.advice.get(k)) for k in pool_keys], dtype=np.float64)
    with np.errstate(divide="ignore"):
        r = np.where(fa > 0, h / np.where(fa > 0, fa, 1.0), np.inf)

    m = len(pool_keys)
    tau_p = _per_key_threshold(r, params.k_p, m)
    tau_u = _per_key_threshold(h, params.k_u, m)

    candidates = np.full(m, -np.inf)
    if tau_p is not None:
        adv_route = np.where(
            np.isinf(tau_p), np.where(fa > 0, np.inf, 0.0), fa * tau_p
        )
        candidates = np.maximum(candidates, adv_route)
    if tau_u is not None:
        candidates = np.maximum(candidates, tau_u)
    if np.any(np.isneginf(candidates)):
        raise ValueError("no active sampling component for some keys")
    if params.scheme == "ppswor":
        p = -np.expm1(-candidates)
    else:
        p = np.minimum(candidates, 1.0)
    if np.any(p <= 0):
        raise ValueError(
            "zero inclusion probability: configuration cannot estimate unbiasedly"
        )
    fw_pool = f_values[pool_idx]
    return float(np.sum((1.0 / p - 1.0) * fw_pool**2))


def _per_key_threshold(values: np.ndarray, size: int, m: int):
    """Vectorized (size-1)-th smallest among the other keys, for each key.

    Returns None when the component is disabled, a scalar/array otherwise
    (np.inf when there are too few other keys).
    """
    if size == 0:
        return None
    if size == 1:
        return np.inf if m == 1 else 0.0
    j = size - 1  # 1-indexed order statistic wanted among others
    if m - 1 < j:
        return np.full(m, np.inf)
    order = np.sort(values)
    low, high = order[j - 1], order[j]
    return np.where(values <= low, high, low)


def nrmse_rows(
    w: FrequencyVector,
    f: FreqFn,
    samplers: dict[str, object],
    k_grid: list[int],
    make_spec: Callable[[object, int], object],
    trials: int = DEFAULT_TRIALS,
    base_seed: int = 0,
) -> list[tuple[str, int, float, float]]:
    """Rows (sampler_name, k, nrmse, benchmark 1/sqrt(k)) for plotting."""
    rows = []
    for name, proto in samplers.items():
        for k in k_grid:
            report = evaluate_nrmse(w, f, make_spec(proto, k), trials, base_seed)
            rows.append((name, k, report.nrmse, 1.0 / math.sqrt(k)))
    return rows
