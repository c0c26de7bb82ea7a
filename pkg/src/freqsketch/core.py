"""Core domain types: frequency vectors, functions of frequency, hashing, Zipf data.

The input model is a stream of (key, value) elements with nonnegative values.
The frequency of a key is the sum of its element values.  Everything downstream
(samplers, estimators, overhead calculus) operates either on streams of
elements or on aggregated frequency vectors.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

Element = tuple[str, float]

_FN_KINDS = frozenset(
    {
        "moment",
        "threshold",
        "rank_threshold",
        "threshold_weight",
        "cap",
        "distinct",
        "identity",
    }
)


def canonical_key(key) -> str:
    """Canonical text form of a key. Numeric keys map to their decimal form."""
    if isinstance(key, bool):
        raise TypeError("bool is not a valid key")
    if isinstance(key, (int, np.integer)):
        return str(int(key))
    if isinstance(key, str):
        return key
    raise TypeError(f"unsupported key type: {type(key).__name__}")


@dataclass(frozen=True)
class FreqFn:
    """A pointwise function of frequency with f(0) = 0.

    Kinds:
      moment(p)           f(w) = w**p, p > 0
      threshold(T)        f(w) = 1 if w > T else 0
      rank_threshold(T)   f(w) = 1 if w >= T else 0 (for w > 0)
      threshold_weight(T) f(w) = w if w > T else 0
      cap(T)              f(w) = min(w, T)
      distinct            f(w) = 1 if w > 0 else 0
      identity            f(w) = w
    """

    kind: str
    param: float | None = None

    def __post_init__(self):
        if self.kind not in _FN_KINDS:
            raise ValueError(f"unknown FreqFn kind: {self.kind}")
        if self.kind == "moment" and (self.param is None or self.param <= 0):
            raise ValueError("moment requires p > 0")
        if self.kind in ("threshold", "rank_threshold", "threshold_weight", "cap"):
            if self.param is None:
                raise ValueError(f"{self.kind} requires a threshold parameter")

    @classmethod
    def moment(cls, p: float) -> "FreqFn":
        return cls("moment", float(p))

    @classmethod
    def threshold(cls, t: float) -> "FreqFn":
        return cls("threshold", float(t))

    @classmethod
    def rank_threshold(cls, t: float) -> "FreqFn":
        return cls("rank_threshold", float(t))

    @classmethod
    def threshold_weight(cls, t: float) -> "FreqFn":
        return cls("threshold_weight", float(t))

    @classmethod
    def cap(cls, t: float) -> "FreqFn":
        return cls("cap", float(t))

    @classmethod
    def distinct(cls) -> "FreqFn":
        return cls("distinct")

    @classmethod
    def identity(cls) -> "FreqFn":
        return cls("identity")

    @classmethod
    def parse(cls, spec: str) -> "FreqFn":
        """Parse a textual spec like "moment:3", "cap:10", or "identity"."""
        kind, _, arg = spec.partition(":")
        kind = kind.strip()
        if kind not in _FN_KINDS:
            raise ValueError(f"unknown FreqFn kind: {kind!r}")
        if kind in ("distinct", "identity"):
            if arg:
                raise ValueError(f"{kind} takes no parameter")
            return cls(kind)
        if not arg:
            raise ValueError(f"{kind} requires a parameter, e.g. {kind}:2")
        return cls(kind, float(arg))

    def spec(self) -> str:
        if self.param is None:
            return self.kind
        return f"{self.kind}:{self.param:g}"

    def __call__(self, w):
        """Apply to a scalar or ndarray of nonnegative frequencies."""
        w = np.asarray(w, dtype=np.float64)
        k, t = self.kind, self.param
        if k == "moment":
            out = np.power(w, t)  # p > 0 so 0**p == 0
        elif k == "threshold":
            out = (w > t).astype(np.float64)
        elif k == "rank_threshold":
            out = ((w >= t) & (w > 0)).astype(np.float64)
        elif k == "threshold_weight":
            out = np.where(w > t, w, 0.0)
        elif k == "cap":
            out = np.minimum(w, t)
        elif k == "distinct":
            out = (w > 0).astype(np.float64)
        else:  # identity
            out = w.astype(np.float64)
        if out.ndim == 0:
            return float(out)
        return out


def as_freqfn(f_or_q) -> FreqFn:
    """Coerce either a FreqFn or a moment exponent q into a FreqFn."""
    if isinstance(f_or_q, FreqFn):
        return f_or_q
    return FreqFn.moment(float(f_or_q))


class FrequencyVector:
    """Aggregated key -> frequency map with a cached descending-rank order.

    Stored frequencies are strictly positive (zero-frequency keys are absent).
    Rank order is by descending frequency with lexicographic key tie-break, so
    rank-indexed formulas are well defined under ties.
    """

    __slots__ = ("_entries", "_ranked_keys", "_ranked_weights")

    def __init__(self, entries: Mapping[str, float]):
        clean = {}
        for key, w in entries.items():
            key = canonical_key(key)
            w = float(w)
            if w < 0:
                raise ValueError(f"negative frequency for key {key!r}: {w}")
            if w > 0:
                clean[key] = w
        self._entries = clean
        order = sorted(clean.items(), key=lambda kv: (-kv[1], kv[0]))
        self._ranked_keys = [k for k, _ in order]
        self._ranked_weights = np.array([w for _, w in order], dtype=np.float64)

    @property
    def entries(self) -> dict[str, float]:
        return dict(self._entries)

    @property
    def ranked_keys(self) -> list[str]:
        return list(self._ranked_keys)

    @property
    def ranked_weights(self) -> np.ndarray:
        """Frequencies in descending order (read-only view)."""
        v = self._ranked_weights.view()
        v.flags.writeable = False
        return v

    @property
    def n(self) -> int:
        return len(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key) -> bool:
        return canonical_key(key) in self._entries

    def __getitem__(self, key) -> float:
        return self._entries.get(canonical_key(key), 0.0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrequencyVector):
            return NotImplemented
        return self._entries == other._entries

    def __iter__(self) -> Iterator[str]:
        return iter(self._ranked_keys)

    def items(self):
        return self._entries.items()

    def total(self) -> float:
        return float(self._ranked_weights.sum())

    def __repr__(self) -> str:
        return f"FrequencyVector(n={self.n}, total={self.total():g})"

    def add(self, other: "FrequencyVector") -> "FrequencyVector":
        """Pointwise sum; used to combine aggregations of disjoint shards."""
        merged = dict(self._entries)
        for key, w in other._entries.items():
            merged[key] = merged.get(key, 0.0) + w
        return FrequencyVector(merged)


def aggregate(stream: Iterable[Element]) -> FrequencyVector:
    """Sum element values per key. Rejects negative values."""
    totals: dict[str, float] = {}
    for key, value in stream:
        value = float(value)
        if value < 0:
            raise ValueError(f"negative element value for key {key!r}: {value}")
        key = canonical_key(key)
        totals[key] = totals.get(key, 0.0) + value
    return FrequencyVector(totals)


def apply_fn(f: FreqFn, w: FrequencyVector) -> tuple[np.ndarray, float]:
    """Pointwise f over the rank-ordered frequencies and the exact l1 norm."""
    values = f(w.ranked_weights)
    values = np.atleast_1d(np.asarray(values, dtype=np.float64))
    return values, float(values.sum())


class HashSource:
    """Deterministic keyed hash mapped to (0, 1] or to Exp(1) draws.

    The top 53 bits of a 64-bit keyed blake2b digest are mapped to the unit
    interval as (bits + 1) / 2**53, which avoids zero.  Exp(1) draws use the
    inverse transform -ln(u).  Identical (seed, key) always yields the same
    value across processes.
    """

    __slots__ = ("seed", "family", "_key_bytes")

    EXP1 = "exp1"
    UNIFORM01 = "uniform01"

    def __init__(self, seed: int, family: str = EXP1):
        if family not in (self.EXP1, self.UNIFORM01):
            raise ValueError(f"unknown hash family: {family}")
        self.seed = int(seed)
        self.family = family
        self._key_bytes = (self.seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")

    def unit(self, key: str) -> float:
        """Uniform draw in (0, 1] for this key."""
        digest = hashlib.blake2b(
            canonical_key(key).encode("utf-8"), digest_size=8, key=self._key_bytes
        ).digest()
        bits = int.from_bytes(digest, "little") >> 11
        return (bits + 1) / 9007199254740992.0  # 2**53

    def draw(self, key: str) -> float:
        u = self.unit(key)
        if self.family == self.EXP1:
            return -math.log(u)
        return u

    def draw_many(self, keys: Sequence[str]) -> np.ndarray:
        out = np.empty(len(keys), dtype=np.float64)
        blake2b = hashlib.blake2b
        kb = self._key_bytes
        for i, key in enumerate(keys):
            digest = blake2b(key.encode("utf-8"), digest_size=8, key=kb).digest()
            bits = int.from_bytes(digest, "little") >> 11
            out[i] = (bits + 1) / 9007199254740992.0
        if self.family == self.EXP1:
            np.log(out, out=out)
            np.negative(out, out=out)
        return out


@dataclass(frozen=True)
class ZipfModel:
    """Zipf / sub-Zipf frequency model: rank i gets w1 * i**(-alpha), with an
    optional independent per-rank slack factor in [1/c, 1]."""

    alpha: float
    n: int
    w1: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.n < 1:
            raise ValueError("support size n must be >= 1")
        if self.c < 1:
            raise ValueError("sub-Zipf slack c must be >= 1")
        if self.w1 <= 0:
            raise ValueError("scale w1 must be positive")


def gen_zipf(model: ZipfModel, rng_seed: int = 0) -> FrequencyVector:
    """Generate frequencies from a Zipf or sub-Zipf model.

    Exact Zipf (c == 1) is deterministic; the sub-Zipf variant multiplies each
    rank's frequency by an independent uniform factor in [1/c, 1] so that
    w_i / w_1 <= c * i**(-alpha) holds for every rank.
    """
    ranks = np.arange(1, model.n + 1, dtype=np.float64)
    weights = model.w1 * ranks ** (-model.alpha)
    if model.c > 1:
        rng = np.random.default_rng(rng_seed)
        weights = weights * rng.uniform(1.0 / model.c, 1.0, size=model.n)
    width = len(str(model.n))
    return FrequencyVector(
        {f"k{i:0{width}d}": w for i, w in zip(range(1, model.n + 1), weights)}
    )


def check_subzipf(w: FrequencyVector, alpha: float, c: float = 1.0) -> bool:
    """Check the per-rank inequality w_i / w_1 <= c * i**(-alpha)."""
    weights = w.ranked_weights
    if len(weights) == 0:
        return True
    ranks = np.arange(1, len(weights) + 1, dtype=np.float64)
    return bool(np.all(weights / weights[0] <= c * ranks ** (-alpha) + 1e-12))


def zipf_fit(w: FrequencyVector) -> float:
    """Least-squares slope magnitude of log(frequency) vs log(rank).

    Fits all ranks by ordinary least squares on (ln i, ln w_i) and returns the
    negated slope, so an exact Zipf[alpha] input returns alpha.
    """
    if w.n < 2:
        raise ValueError("Zipf fit requires at least 2 keys")
    weights = w.ranked_weights
    ranks = np.arange(1, len(weights) + 1, dtype=np.float64)
    slope = np.polyfit(np.log(ranks), np.log(weights), 1)[0]
    return float(-slope)


# --- TSV input/output ---------------------------------------------------------


def _parse_tsv_lines(lines: Iterable[str], path: str) -> Iterator[tuple[str, float, int]]:
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected key<TAB>value, got {line!r}")
        try:
            value = float(parts[1])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad value {parts[1]!r}") from exc
        yield parts[0], value, lineno


def read_elements_tsv(path: str) -> list[Element]:
    """Read an element stream: one `key<TAB>value` per line, `#` comments."""
    with open(path, "r", encoding="utf-8") as fh:
        out = []
        for key, value, lineno in _parse_tsv_lines(fh, path):
            if value < 0:
                raise ValueError(f"{path}:{lineno}: negative value {value}")
            out.append((key, value))
        return out


def read_frequency_tsv(path: str) -> FrequencyVector:
    """Read an aggregated `key<TAB>frequency` file into a FrequencyVector."""
    entries: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for key, value, lineno in _parse_tsv_lines(fh, path):
            if key in entries:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r} in aggregated file")
            entries[key] = value
    return FrequencyVector(entries)


def write_frequency_tsv(w: FrequencyVector, path: str) -> None:
    """Write `key<TAB>frequency` rows in descending-frequency order."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, weight in zip(w.ranked_keys, w.ranked_weights):
            fh.write(f"{key}\t{float(weight)!r}\n")
