"""Hot inner loops, each in a numba and a pure-numpy flavour.

Both flavours are importable (``NUMBA`` / ``NUMPY`` namespaces) so tests and the
benchmark can compare them; the module-level names dispatch to whichever one
``DDPMINE_BACKEND`` selected. Results are bit-identical across flavours.
"""
from types import SimpleNamespace

import numpy as np

from ._accel import BACKEND, njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


# ---------------------------------------------------------------------------
# counter-mode splitmix64
# ---------------------------------------------------------------------------


@njit(cache=True)
def _nb_mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def _nb_prg_expand(seed, n):
    out = np.empty(n, dtype=np.uint64)
    s = np.uint64(seed)
    for k in range(n):
        out[k] = _nb_mix64(s + np.uint64(k + 1) * GOLDEN)
    return out


@njit(cache=True)
def _nb_apply_masks(entries, seeds, signs):
    n = entries.shape[0]
    for e in range(seeds.shape[0]):
        s = seeds[e]
        if signs[e] > 0:
            for k in range(n):
                entries[k] += _nb_mix64(s + np.uint64(k + 1) * GOLDEN)
        else:
            for k in range(n):
                entries[k] -= _nb_mix64(s + np.uint64(k + 1) * GOLDEN)
    return entries


def _np_mix64(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _np_prg_expand(seed, n):
    k = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + k * GOLDEN
    return _np_mix64(z)


def _np_apply_masks(entries, seeds, signs):
    n = entries.shape[0]
    if seeds.shape[0] == 0 or n == 0:
        return entries
    k = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = seeds.astype(np.uint64)[:, None] + k[None, :] * GOLDEN
    stream = _np_mix64(z)
    plus = stream[signs > 0].sum(axis=0, dtype=np.uint64)
    minus = stream[signs <= 0].sum(axis=0, dtype=np.uint64)
    entries += plus
    entries -= minus
    return entries


# ---------------------------------------------------------------------------
# support counting
# ---------------------------------------------------------------------------


@njit(cache=True)
def _nb_itemset_support(owner_bits, cand_bits):
    n_owners, width = owner_bits.shape
    n_cand = cand_bits.shape[0]
    counts = np.zeros(n_cand, dtype=np.int64)
    cols = owner_bits.T.copy()  # one contiguous row per word
    ok = np.empty(n_owners, dtype=np.uint8)
    for c in range(n_cand):
        ok[:] = 1
        # branch-free inner loops so they vectorize
        for w in range(width):
            cb = cand_bits[c, w]
            col = cols[w]
            for o in range(n_owners):
                ok[o] &= np.uint8((col[o] & cb) == cb)
        total = 0
        for o in range(n_owners):
            total += ok[o]
        counts[c] = total
    return counts


@njit(cache=True)
def _nb_sequence_support(flat, offsets, cands, cand_len):
    n_owners = offsets.shape[0] - 1
    n_cand = cands.shape[0]
    counts = np.zeros(n_cand, dtype=np.int64)
    for c in range(n_cand):
        m = cand_len[c]
        total = 0
        for o in range(n_owners):
            lo = offsets[o]
            hi = offsets[o + 1]
            found = False
            for s in range(lo, hi - m + 1):
                j = 0
                while j < m and flat[s + j] == cands[c, j]:
                    j += 1
                if j == m:
                    found = True
                    break
            if found:
                total += 1
        counts[c] = total
    return counts


def _np_itemset_support(owner_bits, cand_bits):
    counts = np.zeros(cand_bits.shape[0], dtype=np.int64)
    for c in range(cand_bits.shape[0]):
        cb = cand_bits[c]
        counts[c] = np.count_nonzero(np.all((owner_bits & cb) == cb, axis=1))
    return counts


def _np_sequence_support(flat, offsets, cands, cand_len):
    counts = np.zeros(cands.shape[0], dtype=np.int64)
    n_owners = offsets.shape[0] - 1
    if flat.shape[0] == 0 or n_owners == 0:
        return counts
    owner_of = np.repeat(np.arange(n_owners), np.diff(offsets))
    ends = offsets[1:][owner_of]
    cache = {}
    for c in range(cands.shape[0]):
        m = int(cand_len[c])
        if m > flat.shape[0]:
            continue
        if m not in cache:
            win = np.lib.stride_tricks.sliding_window_view(flat, m)
            starts = np.arange(win.shape[0])
            valid = starts + m <= ends[: win.shape[0]]
            cache[m] = (win[valid], owner_of[: win.shape[0]][valid])
        win, who = cache[m]
        hit = np.all(win == cands[c, :m], axis=1)
        counts[c] = np.unique(who[hit]).shape[0]
    return counts


NUMBA = SimpleNamespace(
    name="numba",
    prg_expand=_nb_prg_expand,
    apply_masks=_nb_apply_masks,
    itemset_support=_nb_itemset_support,
    sequence_support=_nb_sequence_support,
)
NUMPY = SimpleNamespace(
    name="numpy",
    prg_expand=_np_prg_expand,
    apply_masks=_np_apply_masks,
    itemset_support=_np_itemset_support,
    sequence_support=_np_sequence_support,
)

_active = NUMBA if BACKEND == "numba" else NUMPY


def prg_expand(seed, n: int) -> np.ndarray:
    """Expand a 64-bit seed into ``n`` uint64 words (splitmix64, counter mode)."""
    return _active.prg_expand(np.uint64(seed), int(n))


def apply_masks(entries: np.ndarray, seeds: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Add (sign > 0) or subtract each seed's stream into ``entries`` in place, mod 2^64."""
    return _active.apply_masks(entries, seeds, signs)


def itemset_support(owner_bits: np.ndarray, cand_bits: np.ndarray) -> np.ndarray:
    """Count owners whose bitset is a superset of each candidate bitset."""
    return _active.itemset_support(owner_bits, cand_bits)


def sequence_support(flat, offsets, cands, cand_len) -> np.ndarray:
    """Count owners whose sequence contains each candidate as a contiguous run.

    Owner ``o`` holds ``flat[offsets[o]:offsets[o+1]]``; candidate ``c`` is
    ``cands[c, :cand_len[c]]``.
    """
    return _active.sequence_support(flat, offsets, cands, cand_len)
