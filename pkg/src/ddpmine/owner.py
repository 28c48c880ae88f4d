"""Data-owner side: containment check, noisy response vector, masking hand-off."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .patterns import LocalData, Pattern, contains
from .privacy import NoiseParams, sample_owner_noise
from .secure_agg import AggregationSession, MaskedVector, mask


class BudgetExceeded(RuntimeError):
    pass


_NOISE_K = object()


@dataclass(frozen=True)
class CandidateAssignment:
    entries: tuple[tuple[int, Pattern], ...]
    round_vector_len: int

    def __post_init__(self):
        idx = [i for i, _ in self.entries]
        if len(set(idx)) != len(idx):
            raise ValueError("assignment repeats a candidate index")
        if any(not 0 <= i < self.round_vector_len for i in idx):
            raise ValueError("assignment index out of range")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def patterns(self) -> list[Pattern]:
        return [p for _, p in self.entries]


def owner_rng(seed: int, owner_id: int, round_index: int) -> np.random.Generator:
    """Independent, reproducible stream for one owner in one round."""
    return np.random.default_rng([int(seed) & (2**64 - 1), int(owner_id), int(round_index)])


def respond(
    data: LocalData,
    assignment: CandidateAssignment,
    noise: NoiseParams,
    rng: np.random.Generator,
    *,
    add_noise: bool = True,
    budget=_NOISE_K,
) -> np.ndarray:
    """Response vector of length |C_t|.

    Unassigned entries are 0. Each assigned entry is ``contains + X - Y`` with
    a fresh noise pair per entry; ``add_noise=False`` drops the X - Y term.
    ``budget`` defaults to ``noise.K``; ``None`` disables the check.
    """
    limit = noise.K if budget is _NOISE_K else budget
    if limit is not None and len(assignment) > limit:
        raise BudgetExceeded(f"{len(assignment)} candidates assigned, budget is {limit}")
    out = np.zeros(assignment.round_vector_len, dtype=np.int64)
    if not assignment.entries:
        return out
    idx = np.fromiter((i for i, _ in assignment.entries), dtype=np.int64, count=len(assignment))
    hits = np.fromiter(
        (contains(data, p) for _, p in assignment.entries), dtype=np.int64, count=len(assignment)
    )
    out[idx] = hits
    if add_noise:
        out[idx] += sample_owner_noise(noise, rng, size=len(idx))
    return out


@dataclass
class DataOwner:
    """A participant that remembers which candidates it has already answered."""

    owner_id: int
    data: LocalData
    budget: int | None
    responded: set = field(default_factory=set)

    @property
    def remaining(self) -> int | None:
        return None if self.budget is None else self.budget - len(self.responded)

    def respond(
        self,
        assignment: CandidateAssignment,
        noise: NoiseParams,
        rng: np.random.Generator,
        *,
        add_noise: bool = True,
    ) -> np.ndarray:
        pats = assignment.patterns
        if self.responded.intersection(pats):
            raise BudgetExceeded(f"owner {self.owner_id} asked to answer a candidate twice")
        if self.budget is not None and len(self.responded) + len(pats) > self.budget:
            raise BudgetExceeded(
                f"owner {self.owner_id} would answer {len(self.responded) + len(pats)} "
                f"candidates over its lifetime (budget {self.budget})"
            )
        vec = respond(self.data, assignment, noise, rng, add_noise=add_noise, budget=self.budget)
        self.responded.update(pats)
        return vec

    def upload(self, response: np.ndarray, session: AggregationSession) -> MaskedVector:
        return mask(response, session, self.owner_id)


def respond_all(
    owners: Sequence[DataOwner],
    assignments: Sequence[CandidateAssignment],
    noise: NoiseParams,
    seed: int,
    round_index: int,
    session: AggregationSession,
    *,
    add_noise: bool = True,
) -> list[MaskedVector]:
    """Run every owner's respond-then-mask step; order-independent by construction."""
    uploads = []
    for owner, assignment in zip(owners, assignments):
        rng = owner_rng(seed, owner.owner_id, round_index)
        vec = owner.respond(assignment, noise, rng, add_noise=add_noise)
        uploads.append(owner.upload(vec, session))
    return uploads
