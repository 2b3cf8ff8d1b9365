"""I.i.d. Dirichlet environments on Z^d, materialized one site at a time."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numba as nb
import numpy as np

from .lattice import JumpLaw
from .rng import TAG_ENV, Stream, derive_key, dirichlet_draw, fill_dirichlet, key_words

__all__ = [
    "DirichletLaw",
    "Stream",
    "annealed_drift",
    "annealed_drift_exact",
    "dirichlet_draw",
    "env_base_key",
    "site_distribution",
]


@dataclass(frozen=True)
class DirichletLaw:
    """Law of an i.i.d. Dirichlet environment: at every site the vector of
    jump probabilities is Dirichlet with the jump law's weights."""

    law: JumpLaw

    @classmethod
    def from_jumps(cls, jumps, weights) -> "DirichletLaw":
        return cls(JumpLaw(jumps, weights))

    @property
    def d(self) -> int:
        return self.law.d


def env_base_key(seed: int) -> int:
    return derive_key(seed, TAG_ENV)


@nb.njit(cache=True)
def site_probs(base, site, alphas, out):
    """Jitted site distribution; ``base`` is :func:`env_base_key` of the seed."""
    key = key_words(base, site)
    fill_dirichlet(alphas, key, np.uint64(0), out)


def site_distribution(dlaw: DirichletLaw, seed: int, x) -> np.ndarray:
    """Transition probabilities at site ``x`` in the environment named by ``seed``.

    A deterministic function of ``(seed, x)``: the vector is drawn from a
    stream keyed by the seed and the site coordinates, so it does not depend
    on which other sites were touched before.
    """
    site = np.asarray(x, dtype=np.int64).reshape(-1)
    if site.size != dlaw.d:
        raise ValueError(f"site {tuple(site)} has wrong dimension for d={dlaw.d}")
    out = np.empty(len(dlaw.law.jumps))
    site_probs(np.uint64(env_base_key(seed)), site, dlaw.law.alpha_array(), out)
    return out


def annealed_drift_exact(dlaw: DirichletLaw) -> tuple[Fraction, ...]:
    total = dlaw.law.total_weight
    return tuple(
        sum((w * y[i] for y, w in zip(dlaw.law.jumps, dlaw.law.weights)), Fraction(0)) / total
        for i in range(dlaw.d)
    )


def annealed_drift(dlaw: DirichletLaw) -> np.ndarray:
    """Mean first step ``sum_y y * alpha_y / sum(alpha)``, computed in rationals."""
    return np.array([float(c) for c in annealed_drift_exact(dlaw)])
