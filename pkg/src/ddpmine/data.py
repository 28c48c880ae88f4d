"""Dataset ingestion (one owner per line) and synthetic data with planted patterns."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .patterns import LocalData, Pattern, PatternKind


class DatasetError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _token_key(tok: str):
    return (0, int(tok), "") if tok.isdigit() else (1, 0, tok)


def _read_lines(path: Path) -> list[tuple[int, list[str]]]:
    rows = []
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise DatasetError(f"not valid UTF-8 ({exc.reason})", lineno) from None
            toks = text.split()
            if toks:
                rows.append((lineno, toks))
    return rows


def load_dataset(
    path, kind: PatternKind | str, id_map: dict[str, int] | None = None
) -> tuple[list[LocalData], dict[str, int]]:
    """Read a whitespace-separated transaction or sequence file.

    Without ``id_map`` tokens get dense ids in sorted order (non-negative
    integers numerically first, then the rest lexicographically). With one,
    unknown tokens are an error reported with their line number.
    """
    kind = PatternKind(kind)
    rows = _read_lines(Path(path))
    if id_map is None:
        vocab = sorted({t for _, toks in rows for t in toks}, key=_token_key)
        id_map = {t: i for i, t in enumerate(vocab)}
    data = []
    for lineno, toks in rows:
        try:
            ids = [id_map[t] for t in toks]
        except KeyError as exc:
            raise DatasetError(f"unknown token {exc.args[0]!r}", lineno) from None
        data.append(LocalData.of(kind, ids))
    return data, dict(id_map)


def write_dataset(path, data: Sequence[LocalData], id_map: dict[str, int] | None = None) -> None:
    """Inverse of :func:`load_dataset`. Itemsets are written in increasing id order."""
    inverse = {v: k for k, v in id_map.items()} if id_map else None
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in data:
            items = d.payload if d.kind is PatternKind.SEQUENCE else sorted(d.payload)
            toks = [inverse[i] if inverse else str(i) for i in items]
            fh.write(" ".join(toks) + "\n")


def write_id_map(path, id_map: dict[str, int]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tok, i in sorted(id_map.items(), key=lambda kv: kv[1]):
            fh.write(f"{tok}\t{i}\n")


def read_id_map(path) -> dict[str, int]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2 or not parts[1].isdigit():
                raise DatasetError("expected '<token> <id>'", lineno)
            out[parts[0]] = int(parts[1])
    return out


def identity_map(universe_size: int) -> dict[str, int]:
    return {str(i): i for i in range(universe_size)}


@dataclass(frozen=True)
class SyntheticSpec:
    """Owners with Zipf background items plus planted patterns at target rates."""

    n_owners: int
    universe_size: int
    kind: PatternKind = PatternKind.ITEMSET
    planted: tuple[tuple[Pattern, float], ...] = ()
    zipf_s: float = 1.1
    mean_length: float = 8.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PatternKind(self.kind))
        object.__setattr__(self, "planted", tuple(self.planted))
        if self.n_owners < 1 or self.universe_size < 1:
            raise ValueError("need at least one owner and one item")
        if self.mean_length < 0:
            raise ValueError("mean_length must be >= 0")
        for pat, freq in self.planted:
            if not 0 < freq < 1:
                raise ValueError(f"planted frequency {freq} outside (0, 1)")
            if pat.kind is not self.kind:
                raise ValueError("planted pattern kind does not match dataset kind")
            if max(pat.elements) >= self.universe_size:
                raise ValueError(f"planted pattern {pat} exceeds the universe")

    def background_pmf(self) -> np.ndarray:
        if math.isinf(self.zipf_s):
            pmf = np.zeros(self.universe_size)
            pmf[0] = 1.0
            return pmf
        w = np.arange(1, self.universe_size + 1, dtype=np.float64) ** -self.zipf_s
        return w / w.sum()


def generate_synthetic(spec: SyntheticSpec, rng: np.random.Generator) -> list[LocalData]:
    """Each owner independently: planted patterns with their target probability,
    then Poisson(mean_length) Zipf background draws.

    Itemset/item owners take the union; sequence owners get planted runs
    spliced between background symbols without breaking earlier runs.
    Owners can come out empty when ``mean_length`` is small.
    """
    n, U = spec.n_owners, spec.universe_size
    pmf = spec.background_pmf()
    lengths = rng.poisson(spec.mean_length, size=n)
    background = rng.choice(U, size=int(lengths.sum()), p=pmf)
    starts = np.concatenate(([0], np.cumsum(lengths)))
    planted_hits = np.zeros((n, len(spec.planted)), dtype=bool)
    for j, (_, freq) in enumerate(spec.planted):
        planted_hits[:, j] = rng.random(n) < freq

    out = []
    for o in range(n):
        bg = background[starts[o]:starts[o + 1]].tolist()
        hits = [spec.planted[j][0] for j in np.flatnonzero(planted_hits[o])]
        if spec.kind is PatternKind.SEQUENCE:
            segments: list[list[int]] = [[x] for x in bg]
            for pat in hits:
                pos = int(rng.integers(0, len(segments) + 1))
                segments.insert(pos, list(pat.elements))
            out.append(LocalData(spec.kind, tuple(x for seg in segments for x in seg)))
        else:
            items = set(bg)
            for pat in hits:
                items.update(pat.elements)
            out.append(LocalData(spec.kind, frozenset(items)))
    return out
