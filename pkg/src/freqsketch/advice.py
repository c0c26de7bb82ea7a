"""Sampling guided by per-key frequency predictions ("advice").

The sketch keeps three coordinated components within a budget of
k_h + k_p + k_u keys:

  * the top k_h keys by predicted frequency, held with probability 1;
  * a weighted-without-replacement sample of k_p keys whose seeds are
    h(key) / f(a_key), i.e. ppswor (or priority) by the predicted f-value;
  * a uniform sample of k_u keys by raw hash value, which guarantees every
    active key a positive inclusion probability even when its prediction is
    missing or zero.

The weighted and uniform parts share storage: a key is retained iff its seed
is among the k_p smallest seeds or its hash among the k_u smallest hashes of
the stored pool.  Exact frequencies are accumulated for retained keys.  The
combined estimator inverts, per key, the probability of qualifying for either
component given the other stored keys.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import FreqFn, FrequencyVector, HashSource, canonical_key

FORMAT_VERSION = 1


class AdviceMap:
    """Per-key predicted frequencies; unknown keys predict 0."""

    __slots__ = ("_predictions",)

    def __init__(self, predictions: Mapping[str, float]):
        clean = {}
        for key, a in predictions.items():
            a = float(a)
            if a < 0:
                raise ValueError(f"negative prediction for key {key!r}: {a}")
            clean[canonical_key(key)] = a
        self._predictions = clean

    def get(self, key: str) -> float:
        return self._predictions.get(key, 0.0)

    def items(self):
        return self._predictions.items()

    def __len__(self) -> int:
        return len(self._predictions)

    @classmethod
    def from_tsv(cls, path: str) -> "AdviceMap":
        predictions: dict[str, float] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValueError(
                        f"{path}:{lineno}: expected key<TAB>predicted_frequency"
                    )
                try:
                    predictions[parts[0]] = float(parts[1])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: bad prediction {parts[1]!r}") from exc
        return cls(predictions)

    @classmethod
    def exact(cls, w: FrequencyVector) -> "AdviceMap":
        """Perfect advice: predictions equal to the true frequencies."""
        return cls(dict(w.items()))


def advice_noise(
    advice: AdviceMap, model: str, param: float = 0.0, rng_seed: int = 0
) -> AdviceMap:
    """Corrupt advice for robustness experiments.

    model "multiplicative": scale each prediction by an independent log-uniform
    factor in [1/C, C] with C = param >= 1.  model "dropout": zero out a
    `param` fraction of keys.  model "file" is handled by AdviceMap.from_tsv.
    """
    rng = np.random.default_rng(rng_seed)
    if model == "multiplicative":
        c = float(param)
        if c < 1:
            raise ValueError("multiplicative noise factor C must be >= 1")
        log_c = math.log(c)
        return AdviceMap(
            {
                key: a * math.exp(rng.uniform(-log_c, log_c))
                for key, a in advice.items()
            }
        )
    if model == "dropout":
        rate = float(param)
        if not 0.0 <= rate <= 1.0:
            raise ValueError("dropout rate must be in [0, 1]")
        return AdviceMap(
            {key: (0.0 if rng.random() < rate else a) for key, a in advice.items()}
        )
    raise ValueError(f"unknown advice noise model: {model}")


@dataclass(frozen=True)
class AdviceParams:
    """Sizes of the three components, the target function, scheme, hash seed."""

    k_h: int
    k_p: int
    k_u: int
    fn: FreqFn
    scheme: str = "ppswor"
    seed: int = 0

    def __post_init__(self):
        if min(self.k_h, self.k_p, self.k_u) < 0:
            raise ValueError("component sizes must be nonnegative")
        if self.k_h + self.k_p + self.k_u < 1:
            raise ValueError("at least one component must be nonempty")
        if self.scheme not in ("ppswor", "priority"):
            raise ValueError(f"unknown scheme: {self.scheme}")

    def hash_source(self) -> HashSource:
        family = HashSource.EXP1 if self.scheme == "ppswor" else HashSource.UNIFORM01
        return HashSource(self.seed, family)


def _advice_order(advice_value: float, key: str):
    """Sort key for "largest advice first" with deterministic tie-break."""
    return (-advice_value, key)


def _component_threshold(sorted_others: list[float], size: int) -> float | None:
    """Estimation threshold for one component: the (size-1)-th smallest value
    among the other stored keys.

    None disables the component (size 0).  +inf means there are too few other
    keys to fill the component, so qualification is unconditional.  For size 1
    the threshold degenerates to 0 (the scheme forfeits one slot per
    component), unless the key is alone in the pool.
    """
    if size == 0:
        return None
    if size == 1:
        return math.inf if not sorted_others else 0.0
    if len(sorted_others) < size - 1:
        return math.inf
    return sorted_others[size - 2]


class AdviceSketch:
    """Streaming sample-by-advice sketch (unaggregated updates welcome)."""

    __slots__ = ("params", "advice", "_heavy", "_pool", "_hash")

    def __init__(self, params: AdviceParams, advice: AdviceMap):
        self.params = params
        self.advice = advice
        self._heavy: dict[str, float] = {}  # key -> weight (top-k_h by advice)
        self._pool: dict[str, float] = {}  # key -> weight (weighted + uniform)
        self._hash = params.hash_source()

    def __len__(self) -> int:
        return len(self._heavy) + len(self._pool)

    def __contains__(self, key: str) -> bool:
        return key in self._heavy or key in self._pool

    def heavy_entries(self) -> dict[str, float]:
        return dict(self._heavy)

    def pool_entries(self) -> dict[str, float]:
        return dict(self._pool)

    def _seeds(self, key: str) -> tuple[float, float]:
        """(h, r) for a key: raw hash draw and advice-weighted seed."""
        h = self._hash.draw(key)
        fa = self.params.fn(self.advice.get(key))
        r = h / fa if fa > 0 else math.inf
        return h, r

    def process(self, key: str, delta: float) -> "AdviceSketch":
        """Process one update (key, delta). Returns self."""
        if delta < 0:
            raise ValueError(f"negative update for key {key!r}: {delta}")
        key = canonical_key(key)
        if key in self._heavy:
            self._heavy[key] += delta
            return self
        if key in self._pool:
            self._pool[key] += delta
            return self
        if len(self._heavy) < self.params.k_h:
            self._heavy[key] = delta
            return self
        if self.params.k_h > 0:
            weakest = max(self._heavy, key=lambda y: _advice_order(self.advice.get(y), y))
            if _advice_order(self.advice.get(key), key) < _advice_order(
                self.advice.get(weakest), weakest
            ):
                self._heavy[key] = delta
                ejected_weight = self._heavy.pop(weakest)
                self._pool_insert(weakest, ejected_weight)
                return self
        self._pool_insert(key, delta)
        return self

    def process_batch(self, batch: FrequencyVector) -> "AdviceSketch":
        for key, weight in batch.items():
            self.process(key, weight)
        return self

    def _pool_insert(self, key: str, weight: float) -> None:
        self._pool[key] = self._pool.get(key, 0.0) + weight
        self._refilter_pool()

    def _refilter_pool(self) -> None:
        """Keep only keys in the bottom-k_p by seed or bottom-k_u by hash."""
        keys = list(self._pool)
        if not keys:
            return
        seeds = {k: self._seeds(k) for k in keys}
        keep: set[str] = set()
        if self.params.k_p > 0:
            by_r = sorted(keys, key=lambda k: (seeds[k][1], k))
            keep.update(by_r[: self.params.k_p])
        if self.params.k_u > 0:
            by_h = sorted(keys, key=lambda k: (seeds[k][0], k))
            keep.update(by_h[: self.params.k_u])
        for k in keys:
            if k not in keep:
                del self._pool[k]

    def merge(self, other: "AdviceSketch") -> "AdviceSketch":
        """Merge sketches over key-disjoint data with identical params.

        Retention depends only on order statistics of fixed per-key seeds, so
        pooling all retained (key, weight) records and re-applying the
        top-by-advice and bottom-by-seed rules reproduces the single-pass
        sketch over the union exactly.
        """
        if self.params != other.params:
            raise ValueError("cannot merge sketches with different params")
        pooled: dict[str, float] = {}
        for sketch in (self, other):
            for component in (sketch._heavy, sketch._pool):
                for key, weight in component.items():
                    pooled[key] = pooled.get(key, 0.0) + weight
        out = AdviceSketch(self.params, self.advice)
        ordered = sorted(pooled, key=lambda k: _advice_order(self.advice.get(k), k))
        heavy = ordered[: self.params.k_h]
        out._heavy = {k: pooled[k] for k in heavy}
        out._pool = {k: pooled[k] for k in ordered[self.params.k_h :]}
        out._refilter_pool()
        return out

    def estimate(self) -> tuple[dict[str, float], float]:
        """Sparse estimates of f(w) per retained key and their sum.

        Heavy keys contribute f(w) exactly.  A pool key contributes
        f(w) / p where p is the probability that its hash falls below the
        larger of the two component thresholds computed from the other stored
        keys; keys not strictly below either threshold contribute 0.
        """
        fn = self.params.fn
        estimates: dict[str, float] = {}
        for key, weight in self._heavy.items():
            estimates[key] = float(fn(weight))
        pool_keys = sorted(self._pool)
        seeds = {k: self._seeds(k) for k in pool_keys}
        order_r = sorted(pool_keys, key=lambda k: (seeds[k][1], k))
        order_h = sorted(pool_keys, key=lambda k: (seeds[k][0], k))
        pos_r = {k: i for i, k in enumerate(order_r)}
        pos_h = {k: i for i, k in enumerate(order_h)}

        def nth_among_others(order, values, pos_x: int, size: int) -> float | None:
            # (size-1)-th smallest among the pool excluding one key, expressed
            # through overall order statistics; see _component_threshold for
            # the degenerate conventions.
            if size == 0:
                return None
            if size == 1:
                return math.inf if len(order) == 1 else 0.0
            j = size - 1
            if len(order) - 1 < j:
                return math.inf
            idx = j if pos_x <= j - 1 else j - 1
            return values(order[idx])

        for key in pool_keys:
            h, r = seeds[key]
            tau_p = nth_among_others(order_r, lambda k: seeds[k][1], pos_r[key], self.params.k_p)
            tau_u = nth_among_others(order_h, lambda k: seeds[k][0], pos_h[key], self.params.k_u)
            qualifies = (tau_p is not None and r < tau_p) or (
                tau_u is not None and h < tau_u
            )
            if not qualifies:
                continue
            fa = fn(self.advice.get(key))
            p = _inclusion_probability(self.params.scheme, fa, tau_p, tau_u)
            estimates[key] = float(fn(self._pool[key])) / p
        return estimates, float(sum(estimates.values()))

    def estimate_total(self) -> float:
        return self.estimate()[1]

    # --- serialization ------------------------------------------------------

    def to_json(self) -> str:
        blob = {
            "format": "advice-sketch",
            "version": FORMAT_VERSION,
            "params": {
                "k_h": self.params.k_h,
                "k_p": self.params.k_p,
                "k_u": self.params.k_u,
                "fn": self.params.fn.spec(),
                "scheme": self.params.scheme,
                "seed": self.params.seed,
            },
            "heavy": sorted([k, w] for k, w in self._heavy.items()),
            "pool": sorted([k, w] for k, w in self._pool.items()),
            "advice": sorted([k, a] for k, a in self.advice.items()),
        }
        return json.dumps(blob, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "AdviceSketch":
        blob = json.loads(text)
        if blob.get("format") != "advice-sketch":
            raise ValueError("not an advice sketch blob")
        if blob.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported sketch version: {blob.get('version')}")
        p = blob["params"]
        params = AdviceParams(
            k_h=p["k_h"],
            k_p=p["k_p"],
            k_u=p["k_u"],
            fn=FreqFn.parse(p["fn"]),
            scheme=p["scheme"],
            seed=p["seed"],
        )
        sketch = cls(params, AdviceMap(dict((k, a) for k, a in blob["advice"])))
        sketch._heavy = {k: float(w) for k, w in blob["heavy"]}
        sketch._pool = {k: float(w) for k, w in blob["pool"]}
        return sketch


def _inclusion_probability(
    scheme: str, f_advice: float, tau_p: float | None, tau_u: float | None
) -> float:
    """Pr[h(x) < max{f(a_x) * tau_p, tau_u}] under the scheme's hash family."""
    candidates = []
    if tau_p is not None:
        if math.isinf(tau_p):
            candidates.append(math.inf if f_advice > 0 else 0.0)
        else:
            candidates.append(f_advice * tau_p)
    if tau_u is not None:
        candidates.append(tau_u)
    if not candidates:
        raise ValueError("no active sampling component")
    threshold = max(candidates)
    if math.isinf(threshold):
        return 1.0
    if scheme == "ppswor":
        return -math.expm1(-threshold)
    return min(threshold, 1.0)


def advice_overhead_constant(
    w: FrequencyVector, advice: AdviceMap, fn: FreqFn
) -> float:
    """Smallest c_p with f(w_x)/||f(w)||_1 <= c_p f(a_x)/||f(a)||_1 for all
    active keys; +inf if some active key has f(a_x) = 0 but f(w_x) > 0."""
    keys = w.ranked_keys
    fw = np.atleast_1d(np.asarray(fn(w.ranked_weights), dtype=np.float64))
    fa = np.array([fn(advice.get(k)) for k in keys], dtype=np.float64)
    norm_w = fw.sum()
    norm_a = fa.sum()
    if norm_w <= 0:
        raise ValueError("target statistics are zero")
    if norm_a <= 0:
        return math.inf
    with np.errstate(divide="ignore"):
        ratios = (fw / norm_w) / (fa / norm_a)
    ratios = ratios[fw > 0]
    return float(np.max(ratios)) if len(ratios) else 0.0
