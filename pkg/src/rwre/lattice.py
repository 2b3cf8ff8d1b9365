"""Integer-lattice geometry: jump laws, directions, the lateral order and
half-space hitting times on finite paths.

Sites are plain integer tuples; a path is an ``(n, d)`` integer array (any
sequence of sites is accepted and converted).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "CMP_OPS",
    "Direction",
    "InvalidPathError",
    "JumpLaw",
    "UnsupportedDimensionError",
    "as_path",
    "check_c3",
    "first_hit",
    "lateral_first_exit",
    "prec_compare",
    "validate_path",
]

Site = tuple[int, ...]

# comparison codes shared with the jitted kernels
CMP_OPS = {"<": 0, "<=": 1, ">": 2, ">=": 3}
_ALIASES = {"≤": "<=", "≥": ">="}


class UnsupportedDimensionError(ValueError):
    pass


class InvalidPathError(ValueError):
    pass


def cmp_code(cmp: str) -> int:
    cmp = _ALIASES.get(cmp, cmp)
    try:
        return CMP_OPS[cmp]
    except KeyError:
        raise ValueError(f"comparison must be one of <, <=, >, >=; got {cmp!r}") from None


@dataclass(frozen=True)
class Direction:
    """Unit vector ``ell`` and, in two dimensions, a unit perpendicular.

    ``Direction.of((2, 1))`` normalizes and picks ``ell_perp`` as ``ell``
    rotated a quarter turn counter-clockwise.
    """

    ell: tuple[float, ...]
    ell_perp: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        ell = np.asarray(self.ell, dtype=float)
        if abs(np.linalg.norm(ell) - 1.0) > 1e-12:
            raise ValueError(f"ell must be a unit vector, got norm {np.linalg.norm(ell)}")
        if self.ell_perp is not None:
            perp = np.asarray(self.ell_perp, dtype=float)
            if len(perp) != len(ell) or abs(np.linalg.norm(perp) - 1.0) > 1e-12:
                raise ValueError("ell_perp must be a unit vector of the same dimension")
            if abs(float(ell @ perp)) > 1e-12:
                raise ValueError("ell_perp must be perpendicular to ell")

    @classmethod
    def of(cls, vec: Sequence[float], perp: Optional[Sequence[float]] = None) -> "Direction":
        v = np.asarray(vec, dtype=float)
        if not np.any(v):
            raise ValueError("direction must be a nonzero vector")
        v = v / np.linalg.norm(v)
        if perp is not None:
            p = np.asarray(perp, dtype=float)
            p = p / np.linalg.norm(p)
            return cls(tuple(v), tuple(p))
        if len(v) == 2:
            return cls(tuple(v), (-v[1], v[0]))
        return cls(tuple(v))

    @property
    def d(self) -> int:
        return len(self.ell)

    def dot(self, x) -> np.ndarray:
        return _dot(x, self.ell)

    def dot_perp(self, x) -> np.ndarray:
        if self.ell_perp is None:
            raise UnsupportedDimensionError("direction has no perpendicular (d must be 2)")
        return _dot(x, self.ell_perp)


def _dot(x, v) -> np.ndarray:
    # coordinate-by-coordinate accumulation, the same order the jitted
    # kernels use, so stop decisions agree bit-for-bit
    x = np.asarray(x, dtype=np.float64)
    acc = x[..., 0] * v[0]
    for i in range(1, len(v)):
        acc = acc + x[..., i] * v[i]
    return acc


@dataclass(frozen=True)
class JumpLaw:
    """Jump set with positive rational Dirichlet weights.

    Parameters
    ----------
    jumps : sequence of integer vectors, distinct and nonzero
    weights : positive rationals (ints, ``Fraction`` or ``"p/q"`` strings)
    """

    jumps: tuple[Site, ...]
    weights: tuple[Fraction, ...]
    d: int = field(init=False)

    def __init__(self, jumps: Iterable[Sequence[int]], weights: Iterable):
        js = tuple(tuple(int(c) for c in y) for y in jumps)
        ws = tuple(Fraction(w) for w in weights)
        if not js:
            raise ValueError("jump set must be non-empty")
        if len(js) != len(ws):
            raise ValueError(f"{len(js)} jumps but {len(ws)} weights")
        d = len(js[0])
        if d < 1 or any(len(y) != d for y in js):
            raise ValueError("all jumps must have the same dimension d >= 1")
        if len(set(js)) != len(js):
            raise ValueError("jumps must be distinct")
        if any(all(c == 0 for c in y) for y in js):
            raise ValueError("the zero jump is not allowed")
        if any(w <= 0 for w in ws):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "jumps", js)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "d", d)

    @property
    def R(self) -> float:
        """Euclidean jump radius."""
        return math.sqrt(self.R2)

    @property
    def R2(self) -> int:
        return max(sum(c * c for c in y) for y in self.jumps)

    @property
    def total_weight(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def jump_array(self) -> np.ndarray:
        return np.array(self.jumps, dtype=np.int64)

    def alpha_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights], dtype=np.float64)


def as_path(path) -> np.ndarray:
    arr = np.asarray(path, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InvalidPathError("a path is a non-empty sequence of sites")
    return arr


def validate_path(path, law: JumpLaw) -> np.ndarray:
    """Return the path as an array, raising if a step is not a jump of ``law``."""
    arr = as_path(path)
    if arr.shape[1] != law.d:
        raise InvalidPathError(f"path dimension {arr.shape[1]} != law dimension {law.d}")
    allowed = set(law.jumps)
    for n, step in enumerate(np.diff(arr, axis=0)):
        if tuple(int(c) for c in step) not in allowed:
            raise InvalidPathError(f"step {n} -> {n + 1} is {tuple(step)}, not a jump")
    return arr


def prec_compare(x: Sequence[int], y: Sequence[int], direction: Direction) -> int:
    """Compare sites under the lateral order.

    Returns -1 if ``x`` precedes ``y`` (smaller ``ell_perp`` component, ties
    broken by the ``ell`` component), 1 if it follows, 0 if ``x == y``.
    """
    key = prec_key(direction)
    if tuple(x) == tuple(y):
        return 0
    return -1 if key(x) < key(y) else 1


def prec_key(direction: Direction):
    """Sort key realizing the lateral order."""
    if direction.d != 2 or direction.ell_perp is None:
        raise UnsupportedDimensionError("the lateral order is defined for d = 2 only")
    return lambda x: (float(direction.dot_perp(x)), float(direction.dot(x)))


def _first_true(mask: np.ndarray) -> Optional[int]:
    idx = np.flatnonzero(mask)
    return int(idx[0]) if idx.size else None


def _compare(values: np.ndarray, cmp: str, a: float) -> np.ndarray:
    code = cmp_code(cmp)
    if code == 0:
        return values < a
    if code == 1:
        return values <= a
    if code == 2:
        return values > a
    return values >= a


def first_hit(path, direction: Direction, cmp: str, a: float) -> Optional[int]:
    """Smallest ``n`` with ``path[n] . ell (cmp) a``, or ``None``."""
    return _first_true(_compare(direction.dot(as_path(path)), cmp, a))


def lateral_first_exit(path, direction: Direction, a: float) -> Optional[int]:
    """Smallest ``n`` with ``|path[n] . ell_perp| >= a``, or ``None``."""
    if direction.d != 2 or direction.ell_perp is None:
        raise UnsupportedDimensionError("lateral hitting times are defined for d = 2 only")
    return _first_true(np.abs(direction.dot_perp(as_path(path))) >= a)


def check_c3(law: JumpLaw, box_radius: int) -> str:
    """Semidecide that the jumps generate Z^d as a semigroup.

    Breadth-first search from the origin inside ``[-box_radius, box_radius]^d``.
    Returns ``"proven"`` when the whole box of radius ``ceil(R)`` and every
    unit vector ``+-e_i`` are reached, else ``"unknown"``.
    """
    d = law.d
    r = int(box_radius)
    origin = (0,) * d
    seen = {origin}
    queue = deque([origin])
    while queue:
        x = queue.popleft()
        for y in law.jumps:
            z = tuple(a + b for a, b in zip(x, y))
            if z not in seen and all(abs(c) <= r for c in z):
                seen.add(z)
                queue.append(z)
    inner = math.ceil(law.R)
    if inner > r:
        return "unknown"
    box = product(range(-inner, inner + 1), repeat=d)
    if not all(x in seen for x in box):
        return "unknown"
    for i in range(d):
        for s in (1, -1):
            e = tuple(s if j == i else 0 for j in range(d))
            if e not in seen:
                return "unknown"
    return "proven"
