"""Simulated secure aggregation with cancelling pairwise masks over Z_{2^64}.

Only pairwise masks are modelled. There are no self masks, no secret sharing
and no dropout recovery, so every session owner must upload exactly once.
The guarantee is exactness: the ring sum of the masked uploads equals the
integer sum of the raw uploads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from . import kernels


class AggregationError(ValueError):
    pass


def default_degree(n_owners: int) -> int:
    """2*ceil(log2 n), clipped to the feasible range [1, n-1]."""
    if n_owners < 2:
        return 0
    return max(1, min(n_owners - 1, 2 * math.ceil(math.log2(n_owners))))


@dataclass(frozen=True)
class AggregationSession:
    owner_ids: tuple
    edges: np.ndarray  # (E, 2) positions into owner_ids, first < second
    pair_seeds: np.ndarray  # (E,) uint64
    vector_len: int
    _incident: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        index = {o: i for i, o in enumerate(self.owner_ids)}
        if len(index) != len(self.owner_ids):
            raise AggregationError("duplicate owner ids in session")
        inc: dict[int, tuple[list, list]] = {i: ([], []) for i in range(len(self.owner_ids))}
        for e, (a, b) in enumerate(self.edges):
            inc[int(a)][0].append(e)
            inc[int(a)][1].append(1)
            inc[int(b)][0].append(e)
            inc[int(b)][1].append(-1)
        for i, (es, sg) in inc.items():
            self._incident[self.owner_ids[i]] = (
                self.pair_seeds[np.asarray(es, dtype=np.int64)],
                np.asarray(sg, dtype=np.int8),
            )
        object.__setattr__(self, "_index", index)

    def degree(self, owner_id) -> int:
        return len(self._incident[owner_id][1])

    def neighbors(self, owner_id) -> set:
        i = self._index[owner_id]
        out = set()
        for a, b in self.edges:
            if a == i:
                out.add(self.owner_ids[b])
            elif b == i:
                out.add(self.owner_ids[a])
        return out

    def __contains__(self, owner_id) -> bool:
        return owner_id in self._index


@dataclass(frozen=True)
class MaskedVector:
    entries: np.ndarray  # uint64
    owner_id: Hashable


def _near_regular_edges(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    # circulant graph on a random relabelling: offsets 1..d//2 give a
    # 2*(d//2)-regular graph; odd d adds a (near-)perfect matching.
    perm = rng.permutation(n)
    pairs = []
    for off in range(1, d // 2 + 1):
        for i in range(n):
            pairs.append((perm[i], perm[(i + off) % n]))
    if d % 2 == 1:
        if n % 2 == 0:
            for i in range(n // 2):
                pairs.append((perm[i], perm[i + n // 2]))
        else:
            step = (n - 1) // 2
            cycle = [(k * step) % n for k in range(n)]
            for k in range(0, n - 1, 2):
                pairs.append((perm[cycle[k]], perm[cycle[k + 1]]))
    if not pairs:
        return np.zeros((0, 2), dtype=np.int64)
    e = np.sort(np.asarray(pairs, dtype=np.int64), axis=1)
    return e[np.lexsort((e[:, 1], e[:, 0]))]


def build_session(
    owner_ids: Sequence[Hashable],
    neighbors_per_owner: int | None,
    vector_len: int,
    rng: np.random.Generator,
) -> AggregationSession:
    """Random near-regular masking graph with one 64-bit seed per edge.

    Every owner ends up with ``neighbors_per_owner`` neighbours, or one fewer
    for a single owner when both the degree and the owner count are odd.
    """
    owner_ids = tuple(owner_ids)
    n = len(owner_ids)
    d = default_degree(n) if neighbors_per_owner is None else int(neighbors_per_owner)
    if n >= 2 and not 1 <= d < n:
        raise AggregationError(f"infeasible degree {d} for {n} owners")
    if n < 2:
        d = 0
    edges = _near_regular_edges(n, d, rng) if d else np.zeros((0, 2), dtype=np.int64)
    seeds = rng.integers(0, 2**64, size=edges.shape[0], dtype=np.uint64)
    return AggregationSession(owner_ids, edges, seeds, int(vector_len))


def to_ring(values) -> np.ndarray:
    """Two's-complement embedding of signed integers into Z_{2^64}."""
    return np.asarray(values, dtype=np.int64).view(np.uint64).copy()


def from_ring(entries: np.ndarray) -> np.ndarray:
    return np.asarray(entries, dtype=np.uint64).view(np.int64).copy()


def mask(response, session: AggregationSession, owner_id) -> MaskedVector:
    """Owner-side masking: add PRG(seed) for edges where this owner is the
    lower endpoint, subtract it where it is the upper one."""
    if owner_id not in session:
        raise AggregationError(f"owner {owner_id!r} is not part of the session")
    raw = np.asarray(response)
    if raw.shape != (session.vector_len,):
        raise AggregationError(f"response length {raw.shape} != session length {session.vector_len}")
    entries = to_ring(raw)
    seeds, signs = session._incident[owner_id]
    kernels.apply_masks(entries, seeds, signs)
    return MaskedVector(entries, owner_id)


def aggregate(masked: Sequence[MaskedVector], session: AggregationSession) -> np.ndarray:
    """Ring-sum the uploads and map back to signed integers."""
    seen = [m.owner_id for m in masked]
    if len(set(seen)) != len(seen):
        raise AggregationError("duplicate upload")
    if set(seen) != set(session.owner_ids):
        missing = set(session.owner_ids) - set(seen)
        raise AggregationError(f"missing or foreign uploads (missing: {sorted(map(str, missing))[:5]})")
    total = np.zeros(session.vector_len, dtype=np.uint64)
    for m in masked:
        if m.entries.shape != (session.vector_len,):
            raise AggregationError("masked vector length mismatch")
        total += m.entries
    return from_ring(total)
