"""Patterns, containment, Apriori candidate generation and the exact miner."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import kernels


class PatternKind(str, enum.Enum):
    ITEM = "item"
    ITEMSET = "itemset"
    SEQUENCE = "sequence"


@dataclass(frozen=True)
class Pattern:
    """An item, a canonical (strictly increasing) itemset, or an ordered sequence."""

    kind: PatternKind
    elements: tuple[int, ...]

    def __post_init__(self):
        els = tuple(int(e) for e in self.elements)
        object.__setattr__(self, "elements", els)
        if not els:
            raise ValueError("pattern must have at least one element")
        if any(e < 0 for e in els):
            raise ValueError(f"negative item id in {els}")
        if self.kind is PatternKind.ITEM and len(els) != 1:
            raise ValueError("an item pattern holds exactly one id")
        if self.kind is PatternKind.ITEMSET and any(a >= b for a, b in zip(els, els[1:])):
            raise ValueError(f"itemset elements must be strictly increasing: {els}")

    @classmethod
    def of(cls, kind: PatternKind | str, elements: Iterable[int]) -> "Pattern":
        """Build a pattern, canonicalizing itemsets (sort + dedup)."""
        kind = PatternKind(kind)
        els = list(elements)
        if kind is PatternKind.ITEMSET:
            els = sorted(set(els))
        return cls(kind, tuple(els))

    @classmethod
    def parse(cls, kind: PatternKind | str, text: str) -> "Pattern":
        return cls.of(kind, (int(tok) for tok in text.split()))

    def __str__(self) -> str:
        return " ".join(str(e) for e in self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def sort_key(self) -> tuple:
        return (len(self.elements), self.elements)

    def __lt__(self, other: "Pattern") -> bool:
        return self.sort_key < other.sort_key


@dataclass(frozen=True)
class LocalData:
    """One data owner's private record: a set of items or one ordered sequence."""

    kind: PatternKind
    payload: frozenset[int] | tuple[int, ...]

    def __post_init__(self):
        if self.kind is PatternKind.SEQUENCE:
            object.__setattr__(self, "payload", tuple(int(x) for x in self.payload))
        else:
            object.__setattr__(self, "payload", frozenset(int(x) for x in self.payload))
        if any(x < 0 for x in self.payload):
            raise ValueError("negative item id in local data")

    @classmethod
    def of(cls, kind: PatternKind | str, items: Iterable[int]) -> "LocalData":
        return cls(PatternKind(kind), tuple(items))

    def max_item(self) -> int:
        return max(self.payload, default=-1)


@dataclass(frozen=True)
class PatternUniverse:
    size: int
    kind: PatternKind
    max_length: int = 10

    def __post_init__(self):
        object.__setattr__(self, "kind", PatternKind(self.kind))
        if self.size < 0:
            raise ValueError("universe size must be non-negative")
        if self.max_length < 1:
            raise ValueError("max_length must be >= 1")

    @property
    def effective_max_length(self) -> int:
        return 1 if self.kind is PatternKind.ITEM else self.max_length


class KindMismatch(ValueError):
    pass


def _contains_run(seq: Sequence[int], run: Sequence[int]) -> bool:
    m = len(run)
    first = run[0]
    for s in range(len(seq) - m + 1):
        if seq[s] == first and tuple(seq[s:s + m]) == run:
            return True
    return False


def contains(data: LocalData, pattern: Pattern) -> bool:
    """True when ``data`` supports ``pattern``.

    Sequences match as contiguous runs; items and itemsets by set inclusion.
    """
    if data.kind is not pattern.kind:
        raise KindMismatch(f"cannot test a {pattern.kind.value} pattern against {data.kind.value} data")
    if pattern.kind is PatternKind.SEQUENCE:
        return _contains_run(data.payload, pattern.elements)
    if pattern.kind is PatternKind.ITEM:
        return pattern.elements[0] in data.payload
    return data.payload.issuperset(pattern.elements)


def immediate_subpatterns(pattern: Pattern) -> list[Pattern]:
    els = pattern.elements
    n = len(els)
    if pattern.kind is PatternKind.ITEM or n == 1:
        return []
    if pattern.kind is PatternKind.ITEMSET:
        return [Pattern(pattern.kind, sub) for sub in combinations(els, n - 1)]
    prefix = Pattern(pattern.kind, els[:-1])
    suffix = Pattern(pattern.kind, els[1:])
    return [prefix] if prefix == suffix else [prefix, suffix]


def basic_patterns(universe: PatternUniverse) -> list[Pattern]:
    return [Pattern(universe.kind, (i,)) for i in range(universe.size)]


def generate_candidates(
    accepted: Iterable[Pattern],
    already_explored: Iterable[Pattern],
    universe: PatternUniverse,
) -> list[Pattern]:
    """Unexplored patterns whose immediate subpatterns are all in ``accepted``.

    Every such pattern of length n is reached by extending its length n-1
    prefix (itemset: by a larger item; sequence: by any item), so scanning
    extensions of accepted patterns is complete. Returned in canonical order.
    """
    kind = universe.kind
    if kind is PatternKind.ITEM:
        return []
    accepted = set(accepted)
    explored = set(already_explored)
    cap = universe.effective_max_length
    found = set()
    for base in accepted:
        if base.kind is not kind:
            raise KindMismatch("accepted patterns must share the universe kind")
        if len(base) >= cap:
            continue
        if kind is PatternKind.ITEMSET:
            extensions = range(base.elements[-1] + 1, universe.size)
        else:
            extensions = range(universe.size)
        for x in extensions:
            cand = Pattern(kind, base.elements + (x,))
            if cand in explored or cand in found:
                continue
            if all(sub in accepted for sub in immediate_subpatterns(cand)):
                found.add(cand)
    return sorted(found)


# ---------------------------------------------------------------------------
# exact oracle
# ---------------------------------------------------------------------------


def support_threshold(f: float, n: int) -> int:
    """Smallest count s >= 1 with s / n >= f, evaluated in float like the filter."""
    s = max(1, math.ceil(f * n - 1e-9))
    while s > 1 and (s - 1) / n >= f:
        s -= 1
    while s <= n and s / n < f:
        s += 1
    return s


class SupportCounter:
    """Vectorized support counts of many candidates over a fixed dataset."""

    def __init__(self, dataset: Sequence[LocalData], universe_size: int):
        if not dataset:
            raise ValueError("dataset is empty")
        self.kind = dataset[0].kind
        self.n = len(dataset)
        if self.kind is PatternKind.SEQUENCE:
            lens = np.fromiter((len(d.payload) for d in dataset), dtype=np.int64, count=self.n)
            self.offsets = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(lens, out=self.offsets[1:])
            self.flat = np.fromiter(
                (x for d in dataset for x in d.payload), dtype=np.int64, count=int(self.offsets[-1])
            )
        else:
            self.width = max(1, (universe_size + 63) // 64)
            self.bits = np.zeros((self.n, self.width), dtype=np.uint64)
            for o, d in enumerate(dataset):
                for x in d.payload:
                    self.bits[o, x >> 6] |= np.uint64(1) << np.uint64(x & 63)

    def count(self, candidates: Sequence[Pattern]) -> np.ndarray:
        if not candidates:
            return np.zeros(0, dtype=np.int64)
        if self.kind is PatternKind.SEQUENCE:
            m = max(len(c) for c in candidates)
            arr = np.full((len(candidates), m), -1, dtype=np.int64)
            lens = np.empty(len(candidates), dtype=np.int64)
            for i, c in enumerate(candidates):
                arr[i, : len(c)] = c.elements
                lens[i] = len(c)
            return kernels.sequence_support(self.flat, self.offsets, arr, lens)
        cb = np.zeros((len(candidates), self.width), dtype=np.uint64)
        for i, c in enumerate(candidates):
            for x in c.elements:
                cb[i, x >> 6] |= np.uint64(1) << np.uint64(x & 63)
        return kernels.itemset_support(self.bits, cb)


def exact_fpm(
    dataset: Sequence[LocalData], f: float, universe: PatternUniverse
) -> dict[Pattern, int]:
    """All patterns with support >= the count threshold for ``f``, with their supports.

    Levelwise Apriori over the whole dataset. Keys are in canonical order.
    """
    if not dataset:
        raise ValueError("exact_fpm needs a non-empty dataset")
    for d in dataset:
        if d.kind is not universe.kind:
            raise KindMismatch("dataset kind does not match universe kind")
    threshold = support_threshold(f, len(dataset))
    counter = SupportCounter(dataset, universe.size)
    result: dict[Pattern, int] = {}
    level = basic_patterns(universe)
    frequent: set[Pattern] = set()
    explored: set[Pattern] = set(level)
    while level:
        counts = counter.count(level)
        newly = []
        for p, c in zip(level, counts):
            if c >= threshold:
                result[p] = int(c)
                newly.append(p)
        frequent.update(newly)
        level = generate_candidates(frequent, explored, universe)
        explored.update(level)
    return dict(sorted(result.items()))
