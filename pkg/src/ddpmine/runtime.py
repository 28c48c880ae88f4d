"""End-to-end simulation of the analyst/owner protocol with metrics."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .analyst import (
    AnalystConfig,
    CandidatePool,
    FilterDecision,
    OwnerExhausted,
    ReuseState,
    Strategy,
    pad_candidates,
    plan_assignments,
    settle,
    update_profiles,
)
from .owner import CandidateAssignment, DataOwner, respond_all
from .patterns import KindMismatch, LocalData, Pattern, PatternUniverse, exact_fpm
from .privacy import NoiseParams
from .secure_agg import aggregate, build_session, default_degree

log = logging.getLogger(__name__)

_STREAM_OWNERS = 1
_STREAM_SESSION = 2


@dataclass
class ExperimentConfig:
    analyst: AnalystConfig
    universe: PatternUniverse
    dataset: Sequence[LocalData]
    seed: int = 0
    owner_cap: int | None = None
    agg_degree: int | None = None
    add_noise: bool = True
    exhaustive: bool = False
    with_replacement: bool = False


@dataclass
class RoundStats:
    round: int
    candidates: int
    padded: int
    fresh_owners: int
    reused_owners: int
    accepts: int
    rejects: int
    holds: int


@dataclass
class ExperimentResult:
    mined: list[Pattern]
    truth: list[Pattern]
    precision: float
    recall: float
    f1: float
    owners_used: int
    rounds: int
    round_stats: list[RoundStats] = field(default_factory=list)
    exhausted: bool = False
    recycled_owners: bool = False
    mean_rounds_per_owner: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mined"] = [str(p) for p in self.mined]
        d["truth"] = [str(p) for p in self.truth]
        return d


def f1_score(mined: Iterable[Pattern], truth: Iterable[Pattern]) -> tuple[float, float, float]:
    """(precision, recall, f1); empty-vs-empty counts as a perfect match."""
    mined, truth = set(mined), set(truth)
    hit = len(mined & truth)
    if mined:
        p = hit / len(mined)
    else:
        p = 1.0 if not truth else 0.0
    r = hit / len(truth) if truth else 1.0
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f1


class OwnerSupply:
    """Fresh owners drawn without replacement from a seed-shuffled dataset.

    Owner ids count up from 0. With ``with_replacement`` a finished pass
    starts a reshuffled one and keeps issuing new ids.
    """

    def __init__(self, n_records: int, seed: int, cap: int | None = None, with_replacement: bool = False):
        self.n = n_records
        self.seed = seed
        self.cap = cap
        self.with_replacement = with_replacement
        self.issued = 0
        self._perms: dict[int, np.ndarray] = {}

    def record_of(self, owner_id: int) -> int:
        rnd, pos = divmod(owner_id, self.n)
        if rnd not in self._perms:
            rng = np.random.default_rng([self.seed, _STREAM_OWNERS, rnd])
            self._perms[rnd] = rng.permutation(self.n)
        return int(self._perms[rnd][pos])

    @property
    def recycled(self) -> bool:
        return self.issued > self.n

    def __call__(self) -> int:
        if self.cap is not None and self.issued >= self.cap:
            raise OwnerExhausted(f"owner cap {self.cap} reached")
        if self.issued >= self.n and not self.with_replacement:
            raise OwnerExhausted(f"all {self.n} dataset owners used")
        oid = self.issued
        self.issued += 1
        return oid


def _effective_config(config: ExperimentConfig) -> AnalystConfig:
    if not config.exhaustive:
        return config.analyst
    # every owner answers every candidate once: P = tau = N, budget unbounded
    a = config.analyst
    n = len(config.dataset)
    noise = NoiseParams(a.noise.epsilon, a.noise.K, n)
    return replace(a, noise=noise, tau=n, strategy=Strategy.VANILLA)


def run_experiment(config: ExperimentConfig, truth: Sequence[Pattern] | None = None) -> ExperimentResult:
    """Run the protocol until the pool holds no real candidates.

    ``truth`` may be supplied to skip recomputing the exact oracle.
    """
    dataset = config.dataset
    universe = config.universe
    for d in dataset:
        if d.kind is not universe.kind:
            raise KindMismatch("dataset kind does not match universe kind")
    cfg = _effective_config(config)
    if truth is None:
        truth = list(exact_fpm(dataset, cfg.f, universe)) if dataset else []

    pool = CandidatePool.initial(universe)
    if not dataset:
        pool.live.clear()
    reuse = ReuseState()
    supply = OwnerSupply(len(dataset), config.seed, config.owner_cap, config.with_replacement)
    owners: dict[int, DataOwner] = {}
    participation: dict[int, int] = {}
    budget = None if config.exhaustive else cfg.K
    stats: list[RoundStats] = []
    exhausted = False
    t = 0

    while pool.has_real():
        t += 1
        padding = pad_candidates(pool, cfg, universe)
        cands = pool.round_candidates()
        n = len(cands)

        if config.exhaustive:
            everyone = tuple((i, c) for i, c in enumerate(cands))
            plan_pairs = [(oid, CandidateAssignment(everyone, n)) for oid in range(len(dataset))]
            fresh, reused = (list(range(len(dataset))) if t == 1 else []), []
        else:
            try:
                plan, reuse = plan_assignments(cands, cfg, reuse, supply)
            except OwnerExhausted as exc:
                log.warning("stopping at round %d: %s", t, exc)
                exhausted = True
                break
            plan_pairs, fresh, reused = plan.assignments, plan.fresh, plan.reused

        participants = []
        for oid, _ in plan_pairs:
            if oid not in owners:
                rec = oid if config.exhaustive else supply.record_of(oid)
                owners[oid] = DataOwner(oid, dataset[rec], budget)
            participants.append(owners[oid])
            participation[oid] = participation.get(oid, 0) + 1
        if not config.exhaustive and cfg.strategy is not Strategy.REUSING:
            for oid in fresh:
                owners.pop(oid, None)

        ids = [oid for oid, _ in plan_pairs]
        degree = config.agg_degree if config.agg_degree is not None else default_degree(len(ids))
        degree = min(degree, max(len(ids) - 1, 0))
        session = build_session(ids, degree, n, np.random.default_rng([config.seed, _STREAM_SESSION, t]))
        uploads = respond_all(
            participants,
            [a for _, a in plan_pairs],
            cfg.noise,
            config.seed,
            t,
            session,
            add_noise=config.add_noise,
        )
        agg = aggregate(uploads, session)
        if not config.add_noise:
            assert np.all((agg >= 0) & (agg <= cfg.P)), "noise-free aggregate outside [0, P]"
        update_profiles(pool, agg, cands, cfg.P)

        decisions, _ = settle(pool, cfg, universe)
        pool.check()
        counts = {d: 0 for d in FilterDecision}
        for d in decisions.values():
            counts[d] += 1
        holds = sum(1 for p in pool.real() if pool.live[p].m >= 1)
        stats.append(
            RoundStats(
                round=t,
                candidates=n,
                padded=len(padding),
                fresh_owners=len(fresh),
                reused_owners=len(reused),
                accepts=counts[FilterDecision.ACCEPT],
                rejects=counts[FilterDecision.REJECT],
                holds=holds,
            )
        )
        log.debug("round %d: %s", t, stats[-1])

    mined = sorted(pool.accepted)
    p, r, f1 = f1_score(mined, truth)
    used = len(dataset) if (config.exhaustive and t) else supply.issued
    return ExperimentResult(
        mined=mined,
        truth=sorted(truth),
        precision=p,
        recall=r,
        f1=f1,
        owners_used=used,
        rounds=len(stats),
        round_stats=stats,
        exhausted=exhausted,
        recycled_owners=supply.recycled,
        mean_rounds_per_owner=(sum(participation.values()) / len(participation)) if participation else 0.0,
    )


def compare_strategies(
    config: ExperimentConfig, strategies: Sequence[Strategy | str] = tuple(Strategy)
) -> list[dict]:
    """Same dataset and seed under each strategy; reductions are relative to vanilla."""
    truth = list(exact_fpm(config.dataset, config.analyst.f, config.universe)) if config.dataset else []
    rows = []
    results = {}
    for s in strategies:
        s = Strategy(s)
        cfg = replace(config, analyst=replace(config.analyst, strategy=s))
        results[s] = run_experiment(cfg, truth=truth)
    base = results.get(Strategy.VANILLA)
    for s, res in results.items():
        row = {
            "strategy": s.value,
            "owners_used": res.owners_used,
            "f1": res.f1,
            "rounds": res.rounds,
            "mean_rounds_per_owner": res.mean_rounds_per_owner,
            "exhausted": res.exhausted,
        }
        if base is not None and base.owners_used:
            row["reduction_vs_vanilla"] = 1 - res.owners_used / base.owners_used
        rows.append(row)
    return rows


def packing_lower_bound(n_candidates: int, P: int, K: int) -> int:
    return math.ceil(n_candidates * P / K)
