"""Composable bottom-k sampling sketches and a with-replacement reference sampler.

Bottom-k sketches implement weighted sampling without replacement over
transformed weights w**q: each key gets a seed h(key) / w**q where h is an
Exp(1) draw (ppswor) or a uniform (0,1] draw (priority sampling), and the
sketch keeps the k keys with smallest seeds.  Sketches over key-disjoint
shards merge into exactly the sketch of the union.

The with-replacement sampler draws k independent keys with probability
proportional to f(w) from fully aggregated data and is used as the exact
reference in error evaluations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import FreqFn, FrequencyVector, HashSource, as_freqfn

FORMAT_VERSION = 1


@dataclass(frozen=True)
class SamplerConfig:
    """Bottom-k sampler parameters: sample size, weight exponent, scheme, seed."""

    k: int
    q: float = 1.0
    scheme: str = "ppswor"  # or "priority"
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("sample size k must be >= 1")
        if self.q < 0:
            raise ValueError("weight exponent q must be >= 0")
        if self.scheme not in ("ppswor", "priority"):
            raise ValueError(f"unknown scheme: {self.scheme}")

    def hash_source(self) -> HashSource:
        family = HashSource.EXP1 if self.scheme == "ppswor" else HashSource.UNIFORM01
        return HashSource(self.seed, family)


@dataclass(frozen=True)
class SampleRecord:
    key: str
    weight: float
    probability: float  # inclusion probability, in (0, 1]


@dataclass(frozen=True)
class WeightedSample:
    """Finalized sample: (key, frequency, inclusion probability) records."""

    records: tuple[SampleRecord, ...]
    scheme: str
    k: int
    q: float = 1.0
    tau: float = math.inf

    def keys(self) -> list[str]:
        return [r.key for r in self.records]

    def __len__(self) -> int:
        return len(self.records)


def inclusion_probability(scheme: str, transformed_weight: float, tau: float) -> float:
    """Pr[seed < tau] for a key with the given transformed weight."""
    if math.isinf(tau):
        return 1.0
    if scheme == "ppswor":
        return -math.expm1(-transformed_weight * tau)
    return min(transformed_weight * tau, 1.0)


class BottomKSketch:
    """Bottom-k sample over seeds h(key) / w**q, plus one shadow seed.

    Operates on aggregated per-batch frequencies; the same key must not appear
    in two batches (partial weights would corrupt the seeds).  Duplicates are
    detected when they collide with a retained key.  The shadow seed is the
    smallest seed ever evicted, which after processing everything equals the
    (k+1)-th smallest seed overall; it becomes the finalization threshold.
    """

    __slots__ = ("config", "_entries", "_shadow")

    def __init__(self, config: SamplerConfig):
        self.config = config
        self._entries: dict[str, tuple[float, float]] = {}  # key -> (weight, seed)
        self._shadow: float = math.inf

    @property
    def shadow_seed(self) -> float:
        return self._shadow

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def entries(self) -> dict[str, tuple[float, float]]:
        return dict(self._entries)

    def process(self, batch: FrequencyVector) -> "BottomKSketch":
        """Fold an aggregated batch into the sketch. Returns self."""
        hs = self.config.hash_source()
        q = self.config.q
        for key, weight in batch.items():
            if key in self._entries:
                raise ValueError(
                    f"key {key!r} already processed; single-pass mode requires "
                    "key-disjoint batches (aggregate first for two-pass use)"
                )
            seed = hs.draw(key) / weight**q
            self._insert(key, weight, seed)
        return self

    def _insert(self, key: str, weight: float, seed: float) -> None:
        if seed >= self._shadow:
            # Shadow is an already-evicted seed, so this key can never be
            # among the k smallest.
            return
        self._entries[key] = (weight, seed)
        if len(self._entries) > self.config.k:
            evicted = max(self._entries, key=lambda x: (self._entries[x][1], x))
            evicted_seed = self._entries.pop(evicted)[1]
            self._shadow = min(self._shadow, evicted_seed)

    def merge(self, other: "BottomKSketch") -> "BottomKSketch":
        """Merge sketches of key-disjoint data under an identical config."""
        if self.config != other.config:
            raise ValueError("cannot merge sketches with different configs")
        out = BottomKSketch(self.config)
        out._shadow = min(self._shadow, other._shadow)
        for sketch in (self, other):
            for key, (weight, seed) in sketch._entries.items():
                if key in out._entries:
                    raise ValueError(f"key {key!r} present in both sketches")
                out._insert(key, weight, seed)
        return out

    def finalize(self) -> WeightedSample:
        """Compute inclusion probabilities against the shadow-seed threshold."""
        tau = self._shadow
        scheme = self.config.scheme
        q = self.config.q
        records = [
            SampleRecord(key, weight, inclusion_probability(scheme, weight**q, tau))
            for key, (weight, _) in sorted(self._entries.items())
        ]
        return WeightedSample(
            records=tuple(records),
            scheme=scheme,
            k=self.config.k,
            q=q,
            tau=tau,
        )

    # --- serialization (stable JSON blob for cross-process merging) ---------

    def to_json(self) -> str:
        entries = [
            [key, weight, seed]
            for key, (weight, seed) in sorted(self._entries.items())
        ]
        blob = {
            "format": "bottomk-sketch",
            "version": FORMAT_VERSION,
            "config": {
                "k": self.config.k,
                "q": self.config.q,
                "scheme": self.config.scheme,
                "seed": self.config.seed,
            },
            "shadow_seed": None if math.isinf(self._shadow) else self._shadow,
            "entries": entries,
        }
        return json.dumps(blob, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "BottomKSketch":
        blob = json.loads(text)
        if blob.get("format") != "bottomk-sketch":
            raise ValueError("not a bottom-k sketch blob")
        if blob.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported sketch version: {blob.get('version')}")
        cfg = blob["config"]
        sketch = cls(SamplerConfig(k=cfg["k"], q=cfg["q"], scheme=cfg["scheme"], seed=cfg["seed"]))
        shadow = blob["shadow_seed"]
        sketch._shadow = math.inf if shadow is None else float(shadow)
        for key, weight, seed in blob["entries"]:
            sketch._entries[key] = (float(weight), float(seed))
        return sketch


def sketch_frequencies(w: FrequencyVector, config: SamplerConfig) -> BottomKSketch:
    """Convenience: one-pass sketch of a fully aggregated vector."""
    return BottomKSketch(config).process(w)


def sample_with_replacement(
    w: FrequencyVector, f_or_q, k: int, rng_seed: int = 0
) -> WeightedSample:
    """k independent pps draws by f(w); records carry p' = 1 - (1 - p)**k."""
    if k < 1:
        raise ValueError("sample size k must be >= 1")
    f = as_freqfn(f_or_q)
    values = f(w.ranked_weights)
    values = np.atleast_1d(np.asarray(values, dtype=np.float64))
    norm = values.sum()
    if norm <= 0:
        raise ValueError("all-zero weights: cannot sample with replacement")
    p = values / norm
    rng = np.random.default_rng(rng_seed)
    drawn = np.unique(rng.choice(len(p), size=k, p=p))
    keys = w.ranked_keys
    weights = w.ranked_weights
    records = [
        SampleRecord(keys[i], float(weights[i]), float(-np.expm1(k * np.log1p(-p[i]))))
        for i in sorted(drawn, key=lambda i: keys[i])
    ]
    q = f.param if f.kind == "moment" else math.nan
    return WeightedSample(records=tuple(records), scheme="wr", k=k, q=q)


def wr_inclusion_probabilities(w: FrequencyVector, f_or_q, k: int) -> np.ndarray:
    """p'_x = 1 - (1 - p_x)**k in rank order, p_x = f(w_x)/||f(w)||_1."""
    f = as_freqfn(f_or_q)
    values = np.atleast_1d(np.asarray(f(w.ranked_weights), dtype=np.float64))
    norm = values.sum()
    if norm <= 0:
        raise ValueError("all-zero weights")
    p = values / norm
    return -np.expm1(k * np.log1p(-p))


def exact_wr_variance(w: FrequencyVector, f_target: FreqFn, f_or_q, k: int) -> float:
    """Exact variance of the f_target-statistics estimator from a size-k
    with-replacement pps sample by f_or_q: sum_x (1/p'_x - 1) f(w_x)**2."""
    p_incl = wr_inclusion_probabilities(w, f_or_q, k)
    target = np.atleast_1d(np.asarray(f_target(w.ranked_weights), dtype=np.float64))
    return float(np.sum((1.0 / p_incl - 1.0) * target**2))
