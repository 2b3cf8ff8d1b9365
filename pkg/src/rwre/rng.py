"""Counter-based random streams and gamma/Dirichlet variates.

Every random quantity in the package is a pure function of a 64-bit key and
a counter. Keys are derived by hashing integer words (a master seed, a
purpose tag, trial indices, site coordinates) with the splitmix64 finalizer,
so any environment site or walk stream can be regenerated in isolation, in
any order, from any process.

The jitted primitives operate on ``(key, counter)`` pairs and return the
advanced counter alongside the value. :class:`Stream` wraps the same pair as
an immutable Python value.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numba as nb
import numpy as np

__all__ = [
    "GOLDEN",
    "MASK64",
    "Stream",
    "TAG_ENV",
    "TAG_GRAPH_ENV",
    "TAG_GRAPH_WALK",
    "TAG_WALK",
    "derive_key",
    "dirichlet_draw",
    "mix64",
    "mix64_py",
    "derive_key_py",
]

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# purpose tags keep streams for different roles disjoint
TAG_ENV = 0x454E56  # "ENV"
TAG_WALK = 0x57414C4B  # "WALK"
TAG_GRAPH_ENV = 0x47454E56  # "GENV"
TAG_GRAPH_WALK = 0x4757414C  # "GWAL"

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)


# --- pure-Python reference (used by tests and for key derivation) ---------


def mix64_py(z: int) -> int:
    """splitmix64 finalizer on Python ints."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_key_py(*words: int) -> int:
    h = mix64_py(GOLDEN ^ len(words))
    for w in words:
        h = mix64_py(h ^ (int(w) & MASK64))
    return h


def derive_key(*words: int) -> int:
    """Hash integer words (negative values allowed) into a 64-bit key."""
    return derive_key_py(*words)


# --- jitted primitives ----------------------------------------------------


@nb.njit(inline="always", cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _U_M1
    z = (z ^ (z >> _S27)) * _U_M2
    return z ^ (z >> _S31)


@nb.njit(inline="always", cache=True)
def _absorb(h, w):
    return mix64(h ^ np.uint64(np.int64(w)))


@nb.njit(cache=True)
def key_words(base, words):
    """``derive_key(base, *words)`` for an int64 array of words."""
    h = mix64(_U_GOLDEN ^ np.uint64(words.shape[0] + 1))
    h = mix64(h ^ np.uint64(base))
    for i in range(words.shape[0]):
        h = _absorb(h, words[i])
    return h


@nb.njit(inline="always", cache=True)
def next_u64(key, ctr):
    # explicit casts: an int64 counter handed back from Python would
    # otherwise promote the arithmetic to float64
    ctr = np.uint64(ctr) + _ONE
    return mix64(np.uint64(key) + ctr * _U_GOLDEN), ctr


@nb.njit(inline="always", cache=True)
def next_uniform(key, ctr):
    """Uniform on the open interval (0, 1), 53-bit resolution."""
    z, ctr = next_u64(key, ctr)
    return (float(z >> _S11) + 0.5) * (1.0 / 9007199254740992.0), ctr


@nb.njit(cache=True)
def next_normal(key, ctr):
    u1, ctr = next_uniform(key, ctr)
    u2, ctr = next_uniform(key, ctr)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2), ctr


@nb.njit(cache=True)
def next_gamma(shape, key, ctr):
    """Marsaglia-Tsang squeeze/rejection; shapes below one are boosted."""
    boost = 1.0
    a = shape
    if a < 1.0:
        u, ctr = next_uniform(key, ctr)
        boost = u ** (1.0 / a)
        a = a + 1.0
    d = a - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    while True:
        x, ctr = next_normal(key, ctr)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u, ctr = next_uniform(key, ctr)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return d * v * boost, ctr
        if np.log(u) < 0.5 * x2 + d * (1.0 - v + np.log(v)):
            return d * v * boost, ctr


@nb.njit(cache=True)
def fill_dirichlet(alphas, key, ctr, out):
    """Write a Dirichlet(alphas) draw into ``out``; returns the counter."""
    total = 0.0
    for i in range(alphas.shape[0]):
        g, ctr = next_gamma(alphas[i], key, ctr)
        out[i] = g
        total += g
    for i in range(alphas.shape[0]):
        out[i] /= total
    return ctr


@nb.njit(cache=True)
def fill_uniforms(key, ctr, out):
    for i in range(out.shape[0]):
        out[i], ctr = next_uniform(key, ctr)
    return ctr


# --- Python value wrapper -------------------------------------------------


class Stream(NamedTuple):
    """Immutable position in a counter-based stream.

    Methods return ``(value, next_stream)``; a stream is never mutated.
    """

    key: int
    counter: int = 0

    @classmethod
    def from_words(cls, *words: int) -> "Stream":
        return cls(derive_key(*words), 0)

    def uniforms(self, n: int) -> tuple[np.ndarray, "Stream"]:
        out = np.empty(n)
        ctr = fill_uniforms(np.uint64(self.key), np.uint64(self.counter), out)
        return out, Stream(self.key, int(ctr))

    def uniform(self) -> tuple[float, "Stream"]:
        u, s = self.uniforms(1)
        return float(u[0]), s


def dirichlet_draw(weights: Sequence, stream: Stream) -> tuple[np.ndarray, Stream]:
    """Draw a point of the open simplex from Dirichlet(weights).

    Parameters
    ----------
    weights : sequence of positive numbers (``Fraction`` allowed)
    stream : Stream

    Returns
    -------
    probs : ndarray
        Normalized independent gamma variates with shapes ``weights``.
    stream : Stream
        The advanced stream.
    """
    alphas = np.array([float(w) for w in weights], dtype=np.float64)
    if alphas.size == 0 or not np.all(alphas > 0) or not np.all(np.isfinite(alphas)):
        raise ValueError(f"Dirichlet weights must be positive, got {list(weights)}")
    out = np.empty_like(alphas)
    ctr = fill_dirichlet(alphas, np.uint64(stream.key), np.uint64(stream.counter), out)
    return out, Stream(stream.key, int(ctr))
