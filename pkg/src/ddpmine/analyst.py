"""Analyst side: candidate pool, confidence-bound filtering, Apriori growth,
assignment planning and the two budget-saving strategies."""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .owner import CandidateAssignment
from .patterns import Pattern, PatternUniverse, basic_patterns, generate_candidates
from .privacy import NoiseParams


class Strategy(str, enum.Enum):
    VANILLA = "vanilla"
    PADDING = "padding"
    REUSING = "reusing"


class FilterDecision(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    HOLD = "hold"


@dataclass
class CandidateProfile:
    r: int = 0  # sum of aggregated responses
    n: int = 0  # responses received
    m: int = 0  # rounds with responses

    @property
    def ratio(self) -> float:
        return self.r / self.n if self.n else 0.0


@dataclass(frozen=True)
class AnalystConfig:
    noise: NoiseParams
    f: float
    tau: int | None = None
    eta_g: float = 0.01
    eta_s: float = 0.01
    strategy: Strategy = Strategy.VANILLA

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.tau is None:
            object.__setattr__(self, "tau", 20 * self.noise.P)
        if not 0 < self.f < 1:
            raise ValueError("target frequency f must lie in (0, 1)")
        if self.tau < self.noise.P:
            raise ValueError("tau must be at least P")
        for name in ("eta_g", "eta_s"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")

    @property
    def P(self) -> int:
        return self.noise.P

    @property
    def K(self) -> int:
        return self.noise.K


# ---------------------------------------------------------------------------
# confidence bounds
# ---------------------------------------------------------------------------


def geometric_term(m: int, config: AnalystConfig) -> float:
    """Chebyshev half-width for the averaged geometric noise after ``m`` rounds.

    The 2 over 2 is kept as written; it reduces to a / ((1-a)^2 P^2 m eta_g).
    """
    a = config.noise.alpha
    P = config.noise.P
    return math.sqrt(2 * a / (2 * (1 - a) ** 2 * P**2 * m * config.eta_g))


def sampling_term(n: int, eta_s: float) -> float:
    """Hoeffding half-width for the owner-sampling error after ``n`` responses."""
    return math.sqrt(math.log(eta_s) / (-2 * n))


def bound_term(profile: CandidateProfile, config: AnalystConfig) -> float:
    if profile.m < 1 or profile.n < 1:
        raise ValueError("bound_term needs at least one round of responses")
    return geometric_term(profile.m, config) + sampling_term(profile.n, config.eta_s)


def bound_decision(profile: CandidateProfile, config: AnalystConfig) -> FilterDecision:
    """Decision from the two confidence bounds alone (no tau forcing)."""
    b = bound_term(profile, config)
    est = profile.r / profile.n
    if est - b >= config.f:
        return FilterDecision.ACCEPT
    if est + b <= config.f:
        return FilterDecision.REJECT
    return FilterDecision.HOLD


def filter_candidate(profile: CandidateProfile, config: AnalystConfig) -> FilterDecision:
    decision = bound_decision(profile, config)
    if decision is not FilterDecision.HOLD:
        return decision
    if profile.n >= config.tau:
        if profile.r / profile.n >= config.f:
            return FilterDecision.ACCEPT
        return FilterDecision.REJECT
    return FilterDecision.HOLD


# ---------------------------------------------------------------------------
# pool
# ---------------------------------------------------------------------------


@dataclass
class CandidatePool:
    """Live candidates with profiles plus the accepted/rejected outcome sets.

    ``padded`` marks live entries that are speculative this round. ``shadow``
    keeps profiles of earlier padding that dropped out of the round list, so a
    later promotion can pick the answers up again.
    """

    live: dict[Pattern, CandidateProfile] = field(default_factory=dict)
    accepted: set[Pattern] = field(default_factory=set)
    rejected: set[Pattern] = field(default_factory=set)
    padded: set[Pattern] = field(default_factory=set)
    shadow: dict[Pattern, CandidateProfile] = field(default_factory=dict)

    @classmethod
    def initial(cls, universe: PatternUniverse) -> "CandidatePool":
        return cls(live={p: CandidateProfile() for p in basic_patterns(universe)})

    def real(self) -> list[Pattern]:
        return [p for p in self.live if p not in self.padded]

    def has_real(self) -> bool:
        return len(self.live) > len(self.padded)

    def round_candidates(self) -> list[Pattern]:
        """Round list: real candidates in insertion order, then this round's padding."""
        real = self.real()
        return real + [p for p in self.live if p in self.padded]

    def explored(self) -> set[Pattern]:
        return set(self.real()) | self.accepted | self.rejected

    def check(self) -> None:
        live = set(self.live)
        assert not (live & self.accepted), "live and accepted overlap"
        assert not (live & self.rejected), "live and rejected overlap"
        assert not (self.accepted & self.rejected), "accepted and rejected overlap"
        assert self.padded <= live, "padded entries must be live"


def update_profiles(
    pool: CandidatePool, aggregated: Sequence[int], index_map: Sequence[Pattern], P: int
) -> CandidatePool:
    aggregated = np.asarray(aggregated)
    if aggregated.shape[0] != len(index_map):
        raise IndexError(f"aggregate length {aggregated.shape[0]} != {len(index_map)} candidates")
    for i, pat in enumerate(index_map):
        prof = pool.live[pat]
        prof.r += int(aggregated[i])
        prof.n += P
        prof.m += 1
    return pool


def _apply(pool: CandidatePool, pat: Pattern, decision: FilterDecision) -> None:
    if decision is FilterDecision.ACCEPT:
        del pool.live[pat]
        pool.accepted.add(pat)
    elif decision is FilterDecision.REJECT:
        del pool.live[pat]
        pool.rejected.add(pat)


def filter_pool(
    pool: CandidatePool, config: AnalystConfig, only: Sequence[Pattern] | None = None
) -> dict[Pattern, FilterDecision]:
    """Filter every real candidate that has responses (or just ``only``)."""
    targets = pool.real() if only is None else list(only)
    out = {}
    for pat in targets:
        prof = pool.live[pat]
        if prof.m < 1:
            continue
        decision = filter_candidate(prof, config)
        _apply(pool, pat, decision)
        out[pat] = decision
    return out


def grow_candidates(pool: CandidatePool, universe: PatternUniverse) -> list[Pattern]:
    """Add Apriori-generated candidates; padded or shadowed ones are promoted
    with their accumulated profile rather than restarted."""
    new = generate_candidates(pool.accepted, pool.explored(), universe)
    for pat in new:
        if pat in pool.padded:
            pool.padded.discard(pat)
            # re-insert to move it behind the existing real candidates
            pool.live[pat] = pool.live.pop(pat)
        elif pat in pool.shadow:
            pool.live[pat] = pool.shadow.pop(pat)
        else:
            pool.live[pat] = CandidateProfile()
    return new


def settle(
    pool: CandidatePool, config: AnalystConfig, universe: PatternUniverse
) -> tuple[dict[Pattern, FilterDecision], list[Pattern]]:
    """Filter, then grow. Promoted candidates that already carry responses are
    filtered straight away, which can unlock further growth."""
    decisions = filter_pool(pool, config)
    grown: list[Pattern] = []
    while True:
        new = grow_candidates(pool, universe)
        grown.extend(new)
        informed = [p for p in new if pool.live[p].m >= 1]
        if not informed:
            break
        decisions.update(filter_pool(pool, config, only=informed))
    return decisions, [p for p in grown if p in pool.live]


def pad_candidates(
    pool: CandidatePool, config: AnalystConfig, universe: PatternUniverse
) -> list[Pattern]:
    """Fill the round list up to K with speculative candidates.

    Real candidates are virtually accepted in decreasing r/n order (ties by
    canonical order) and each acceptance may unlock new Apriori candidates,
    which are themselves queued for virtual acceptance. Padding that already
    holds tau responses is not re-padded. Returns this round's padding.
    """
    for pat in list(pool.padded):
        pool.shadow[pat] = pool.live.pop(pat)
    pool.padded.clear()
    real = pool.real()
    room = config.K - len(real)
    if config.strategy is not Strategy.PADDING or room <= 0:
        return []
    order = sorted(real, key=lambda p: (-pool.live[p].ratio, p.sort_key))
    virtual = set(pool.accepted)
    explored = pool.explored()
    queue = deque(order)
    added: list[Pattern] = []
    while queue and len(added) < room:
        virtual.add(queue.popleft())
        for pat in generate_candidates(virtual, explored, universe):
            explored.add(pat)
            prof = pool.shadow.get(pat)
            if prof is not None and prof.n >= config.tau:
                continue
            pool.live[pat] = pool.shadow.pop(pat, None) or CandidateProfile()
            pool.padded.add(pat)
            added.append(pat)
            queue.append(pat)
            if len(added) == room:
                break
    return added


# ---------------------------------------------------------------------------
# assignment planning
# ---------------------------------------------------------------------------


class OwnerExhausted(RuntimeError):
    pass


@dataclass
class SavedOwner:
    remaining: int
    responded: set[Pattern] = field(default_factory=set)


@dataclass
class ReuseState:
    saved: dict[int, SavedOwner] = field(default_factory=dict)

    def evict_spent(self) -> None:
        for oid in [o for o, s in self.saved.items() if s.remaining <= 0]:
            del self.saved[oid]


@dataclass
class AssignmentPlan:
    assignments: list[tuple[int, CandidateAssignment]]
    fresh: list[int]
    reused: list[int]


def _take(need: np.ndarray, allowed: np.ndarray, k: int) -> np.ndarray:
    """Indices of the (at most) k allowed candidates with the largest remaining need."""
    mask = allowed & (need > 0)
    idx = np.flatnonzero(mask)
    if idx.shape[0] > k:
        order = np.argsort(-need[idx], kind="stable")[:k]
        idx = np.sort(idx[order])
    return idx


def plan_assignments(
    candidates: Sequence[Pattern],
    config: AnalystConfig,
    reuse: ReuseState,
    next_owner: Callable[[], int],
) -> tuple[AssignmentPlan, ReuseState]:
    """Give every candidate exactly P distinct owners.

    Saved owners (reusing strategy only) go first, each answering unseen
    candidates up to its remaining budget; fresh owners then take up to K
    candidates each, always the ones with the most responses still missing,
    which packs the round into max(P, ceil(|C|*P/K)) fresh owners.
    """
    n = len(candidates)
    P, K = config.P, config.K
    need = np.full(n, P, dtype=np.int64)
    plan = AssignmentPlan([], [], [])
    reusing = config.strategy is Strategy.REUSING
    if not reusing:
        reuse.saved.clear()
    everything = np.ones(n, dtype=bool)

    if reusing:
        reuse.evict_spent()
        for oid, saved in reuse.saved.items():
            if not need.any():
                break
            allowed = np.fromiter((c not in saved.responded for c in candidates), dtype=bool, count=n)
            idx = _take(need, allowed, saved.remaining)
            if idx.shape[0] == 0:
                continue
            need[idx] -= 1
            entries = tuple((int(i), candidates[i]) for i in idx)
            saved.remaining -= len(entries)
            saved.responded.update(p for _, p in entries)
            plan.assignments.append((oid, CandidateAssignment(entries, n)))
            plan.reused.append(oid)
        reuse.evict_spent()

    while need.any():
        oid = next_owner()
        idx = _take(need, everything, K)
        need[idx] -= 1
        entries = tuple((int(i), candidates[i]) for i in idx)
        plan.assignments.append((oid, CandidateAssignment(entries, n)))
        plan.fresh.append(oid)
        if reusing and len(entries) < K:
            reuse.saved[oid] = SavedOwner(K - len(entries), {p for _, p in entries})
    return plan, reuse
