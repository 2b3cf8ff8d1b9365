"""Loop erasures of finite paths and the events built on them.

A loop erasure removes ``X_m, ..., X_{n-1}`` from a path when ``X_m == X_n``.
Repeating this in any order reaches exactly the paths whose removed
original indices form a disjoint union of half-open intervals ``[m, n)``
with matching endpoint sites (erasures done later either swallow earlier
ones or avoid them, so the removed set stays laminar). That canonical form
lets :func:`event_G` decide existence of a good erasure in linear time;
:func:`reachable_erasures` is the exhaustive closure it is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba as nb
import numpy as np

from .lattice import Direction, as_path, first_hit

__all__ = [
    "ErasureFamily",
    "ErasureInterval",
    "InvalidIntervalError",
    "ScaleLimitError",
    "erase_interval",
    "erase_family",
    "event_B_horizon",
    "event_G",
    "event_G_bruteforce",
    "reachable_erasures",
    "removed_is_canonical",
    "witness_family",
]

MAX_ORACLE_LENGTH = 16


class InvalidIntervalError(ValueError):
    pass


class ScaleLimitError(ValueError):
    pass


@dataclass(frozen=True)
class ErasureInterval:
    """Half-open range ``[m, n)`` of original path indices."""

    m: int
    n: int

    def check(self, path: np.ndarray) -> None:
        if not 0 <= self.m < self.n <= len(path) - 1:
            raise InvalidIntervalError(f"[{self.m}, {self.n}) out of range for path of {len(path)} sites")
        if not np.array_equal(path[self.m], path[self.n]):
            raise InvalidIntervalError(
                f"endpoints differ: X_{self.m}={tuple(path[self.m])} X_{self.n}={tuple(path[self.n])}"
            )


@dataclass(frozen=True)
class ErasureFamily:
    intervals: tuple[ErasureInterval, ...]

    def __post_init__(self):
        ivs = tuple(sorted(self.intervals, key=lambda iv: iv.m))
        for a, b in zip(ivs, ivs[1:]):
            if b.m < a.n:
                raise InvalidIntervalError(f"intervals [{a.m},{a.n}) and [{b.m},{b.n}) overlap")
        object.__setattr__(self, "intervals", ivs)

    def removed(self) -> set[int]:
        return {i for iv in self.intervals for i in range(iv.m, iv.n)}


def _sites(path) -> list[tuple[int, ...]]:
    return [tuple(int(c) for c in row) for row in as_path(path)]


def erase_interval(path, iv: ErasureInterval) -> np.ndarray:
    """``(X_0, ..., X_{m-1}, X_n, X_{n+1}, ...)`` for a matched interval."""
    arr = as_path(path)
    iv.check(arr)
    return np.concatenate([arr[: iv.m], arr[iv.n:]])


def erase_family(path, family: ErasureFamily) -> np.ndarray:
    """Apply disjoint matched intervals; the result is independent of order."""
    arr = as_path(path)
    for iv in family.intervals:
        iv.check(arr)
    keep = np.ones(len(arr), dtype=bool)
    for iv in family.intervals:
        keep[iv.m: iv.n] = False
    return arr[keep]


def removed_is_canonical(sites, kept: tuple[int, ...]) -> bool:
    """True iff the complement of ``kept`` is a union of matched intervals."""
    kept_set = set(kept)
    n = len(sites)
    i = 0
    while i < n:
        if i in kept_set:
            i += 1
            continue
        j = i
        while j < n and j not in kept_set:
            j += 1
        # maximal removed run [i, j); it must split into matched pieces
        if j == n or not _splits(sites, i, j):
            return False
        i = j
    return True


def _splits(sites, i: int, j: int) -> bool:
    # can [i, j) be cut into consecutive matched intervals [p, q), sites[p] == sites[q]?
    ok = {i}
    for q in range(i + 1, j + 1):
        if any(p in ok and sites[p] == sites[q] for p in range(i, q)):
            ok.add(q)
    return j in ok


def _closure(sites: list) -> set[tuple[int, ...]]:
    start = tuple(range(len(sites)))
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for kept in frontier:
            for a in range(len(kept)):
                sa = sites[kept[a]]
                for b in range(a + 1, len(kept)):
                    if sites[kept[b]] != sa:
                        continue
                    child = kept[:a] + kept[b:]
                    if child in seen:
                        continue
                    assert removed_is_canonical(sites, child), (sites, kept, child)
                    seen.add(child)
                    nxt.append(child)
        frontier = nxt
    return seen


def reachable_erasures(path) -> set[tuple[tuple[int, ...], ...]]:
    """Every path reachable by finitely many loop erasures, the input included.

    Exhaustive closure under single erasures; paths are returned as tuples of
    site tuples. Limited to paths of at most 16 sites.
    """
    sites = _sites(path)
    if len(sites) > MAX_ORACLE_LENGTH:
        raise ScaleLimitError(f"exhaustive closure limited to {MAX_ORACLE_LENGTH} sites, got {len(sites)}")
    return {tuple(sites[i] for i in kept) for kept in _closure(sites)}


def _sides(a: float, b: float) -> tuple[str, str]:
    """(comparison reaching b, comparison for the bad side of a)."""
    if a == b:
        raise ValueError("event_G needs a != b")
    return (">=", "<") if a < b else ("<=", ">")


def _bad_mask(values: np.ndarray, a: float, b: float) -> np.ndarray:
    return values < a if a < b else values > a


def event_G(path, direction: Direction, a: float, b: float) -> bool:
    """Whether the path reaches the ``b`` side with every earlier visit to the
    far side of ``a`` removable by erasures completed by that time.

    For ``a < b`` the target is ``X . ell >= b`` and bad visits have
    ``X . ell < a``; for ``a > b`` both inequalities flip.
    """
    hit_cmp, _ = _sides(a, b)
    arr = as_path(path)
    t = first_hit(arr, direction, hit_cmp, b)
    if t is None:
        return False
    prefix = arr[: t + 1]
    bad = _bad_mask(direction.dot(prefix), a, b)
    return bool(_cover_dp(site_ids(prefix), bad))


def site_ids(arr: np.ndarray) -> np.ndarray:
    """Dense integer labels with ``ids[i] == ids[j]`` iff ``arr[i] == arr[j]``."""
    lo = arr.min(axis=0)
    span = arr.max(axis=0) - lo + 1
    if np.prod(span.astype(float)) < 2.0**62:
        code = np.zeros(len(arr), dtype=np.int64)
        for i in range(arr.shape[1]):
            code = code * span[i] + (arr[:, i] - lo[i])
        _, ids = np.unique(code, return_inverse=True)
    else:
        _, ids = np.unique(arr, axis=0, return_inverse=True)
    return ids.reshape(-1).astype(np.int64)


@nb.njit(cache=True)
def _cover_dp(ids, bad):
    # f(j): a disjoint matched-interval family inside [0, j] covers every bad index < j
    good = np.zeros(ids.max() + 1, dtype=np.bool_)
    f = True
    good[ids[0]] = True
    for j in range(1, ids.shape[0]):
        f = (f and not bad[j - 1]) or good[ids[j]]
        if f:
            good[ids[j]] = True
    return f


def event_G_bruteforce(path, direction: Direction, a: float, b: float) -> bool:
    """Definition-level check: some erasure of the truncated path has its
    first ``b``-side index before its first bad index."""
    hit_cmp, bad_cmp = _sides(a, b)
    arr = as_path(path)
    t = first_hit(arr, direction, hit_cmp, b)
    if t is None:
        return False
    for y in reachable_erasures(arr[: t + 1]):
        tb = first_hit(y, direction, hit_cmp, b)
        ta = first_hit(y, direction, bad_cmp, a)
        if tb is not None and (ta is None or tb < ta):
            return True
    return False


def event_B_horizon(path, direction: Direction, b: float) -> bool:
    """Finite-horizon stand-in for "some erasure never enters ``X . ell < 0``".

    This is ``event_G(path, direction, 0, b)``: a path that has not reached
    ``b`` yet counts as false even though it might later qualify.
    """
    if b <= 0:
        raise ValueError("threshold b must be positive")
    return event_G(path, direction, 0.0, b)


def witness_family(path, direction: Direction, a: float, b: float) -> Optional[ErasureFamily]:
    """An erasure family realizing :func:`event_G`, or ``None`` when it fails."""
    hit_cmp, _ = _sides(a, b)
    arr = as_path(path)
    t = first_hit(arr, direction, hit_cmp, b)
    if t is None:
        return None
    bad = _bad_mask(direction.dot(arr[: t + 1]), a, b)
    first_good: dict[bytes, int] = {}
    back: list[Optional[int]] = [None] * (t + 1)
    f = True
    for j in range(t + 1):
        site = arr[j].tobytes()
        if j > 0:
            keep = f and not bad[j - 1]
            if keep:
                f = True
            elif site in first_good:
                f = True
                back[j] = first_good[site]
            else:
                f = False
        if f and site not in first_good:
            first_good[site] = j
    if not f:
        return None
    intervals = []
    j = t
    while j > 0:
        if back[j] is not None:
            intervals.append(ErasureInterval(back[j], j))
            j = back[j]
        else:
            j -= 1
    return ErasureFamily(tuple(intervals))
