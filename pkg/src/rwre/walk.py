"""Quenched simulation of walks in a lazily materialized Dirichlet environment.

The environment is named by a seed; the transition vector at a site is
regenerated from ``(seed, site)`` whenever the walk stands there. Step
randomness comes from a separate stream keyed by ``(seed, trial, walk_id)``,
so two walks can share an environment while stepping independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba as nb
import numpy as np

from .environment import DirichletLaw, env_base_key, site_probs
from .lattice import Direction, cmp_code, first_hit, lateral_first_exit
from .rng import TAG_WALK, derive_key, next_uniform

__all__ = [
    "HalfSpaceStop",
    "StopRule",
    "WalkRecord",
    "run_two_walks",
    "run_walk",
    "walk_key",
]

HORIZON = 0
HALF_SPACE = 1
LATERAL = 2
_REASONS = {HORIZON: "horizon", HALF_SPACE: "half_space", LATERAL: "lateral"}


@dataclass(frozen=True)
class HalfSpaceStop:
    """Stop the first time ``X_n . ell (cmp) a``."""

    direction: Direction
    cmp: str
    a: float

    def __post_init__(self):
        cmp_code(self.cmp)


@dataclass(frozen=True)
class StopRule:
    horizon: int
    half_space_stops: tuple[HalfSpaceStop, ...] = ()
    lateral_stop: Optional[tuple[Direction, float]] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        object.__setattr__(self, "half_space_stops", tuple(self.half_space_stops))

    @classmethod
    def until(cls, direction: Direction, cmp: str, a: float, horizon: int) -> "StopRule":
        """Single half-space stop plus a horizon."""
        return cls(horizon, (HalfSpaceStop(direction, cmp, a),))


@dataclass(frozen=True)
class WalkRecord:
    """A finite trajectory and the stopping information realized on it.

    ``hit_indices`` is aligned with the rule's half-space stops; ``lateral_hit``
    belongs to the lateral stop. Both are recomputed from the stored path.
    """

    path: np.ndarray
    stop_reason: str
    stop_index: Optional[int]
    hit_indices: tuple[Optional[int], ...]
    lateral_hit: Optional[int] = None
    rule: StopRule = field(repr=False, default=None)

    @property
    def censored(self) -> bool:
        return self.stop_reason == "horizon"

    @property
    def steps(self) -> int:
        return len(self.path) - 1


@nb.njit(cache=True)
def _dot(site, v):
    acc = site[0] * v[0]
    for i in range(1, v.shape[0]):
        acc = acc + site[i] * v[i]
    return acc


@nb.njit(cache=True)
def _check_stops(site, hs_dirs, hs_codes, hs_thresh, lat_perp, lat_a, has_lat):
    fsite = site.astype(np.float64)
    for k in range(hs_codes.shape[0]):
        val = _dot(fsite, hs_dirs[k])
        c = hs_codes[k]
        a = hs_thresh[k]
        if (c == 0 and val < a) or (c == 1 and val <= a) or (c == 2 and val > a) or (c == 3 and val >= a):
            return HALF_SPACE, k
    if has_lat:
        if abs(_dot(fsite, lat_perp)) >= lat_a:
            return LATERAL, 0
    return HORIZON, -1


@nb.njit(cache=True)
def walk_kernel(jumps, alphas, env_base, wkey, start, horizon,
                hs_dirs, hs_codes, hs_thresh, lat_perp, lat_a, has_lat, path):
    """Fill ``path`` and return ``(n_sites, reason, stop_index)``."""
    k = jumps.shape[0]
    probs = np.empty(k)
    ctr = np.uint64(0)
    path[0, :] = start
    n = 0
    while True:
        reason, which = _check_stops(path[n], hs_dirs, hs_codes, hs_thresh, lat_perp, lat_a, has_lat)
        if reason != HORIZON:
            return n + 1, reason, which
        if n == horizon:
            return n + 1, HORIZON, -1
        site_probs(env_base, path[n], alphas, probs)
        u, ctr = next_uniform(wkey, ctr)
        j = k - 1
        acc = 0.0
        for i in range(k):
            acc += probs[i]
            if u < acc:
                j = i
                break
        path[n + 1, :] = path[n, :] + jumps[j]
        n += 1


def walk_key(seed: int, trial: int, walk_id: int) -> int:
    return derive_key(seed, TAG_WALK, trial, walk_id)


def _rule_arrays(rule: StopRule, d: int):
    stops = rule.half_space_stops
    hs_dirs = np.array([s.direction.ell for s in stops], dtype=np.float64).reshape(len(stops), d)
    hs_codes = np.array([cmp_code(s.cmp) for s in stops], dtype=np.int64)
    hs_thresh = np.array([float(s.a) for s in stops], dtype=np.float64)
    if rule.lateral_stop is not None:
        lat_dir, lat_a = rule.lateral_stop
        if lat_dir.ell_perp is None:
            raise ValueError("lateral stop needs a two-dimensional direction")
        return hs_dirs, hs_codes, hs_thresh, np.array(lat_dir.ell_perp), float(lat_a), True
    return hs_dirs, hs_codes, hs_thresh, np.zeros(d), 0.0, False


def _record(path: np.ndarray, reason: int, which: int, rule: StopRule) -> WalkRecord:
    hits = tuple(first_hit(path, s.direction, s.cmp, s.a) for s in rule.half_space_stops)
    lat = None
    if rule.lateral_stop is not None:
        lat = lateral_first_exit(path, *rule.lateral_stop)
    return WalkRecord(
        path=path,
        stop_reason=_REASONS[reason],
        stop_index=which if reason == HALF_SPACE else None,
        hit_indices=hits,
        lateral_hit=lat,
        rule=rule,
    )


def _simulate(dlaw: DirichletLaw, seed: int, wkey: int, start, rule: StopRule) -> WalkRecord:
    d = dlaw.d
    start = np.asarray(start, dtype=np.int64).reshape(-1)
    if start.size != d:
        raise ValueError(f"start {tuple(start)} has wrong dimension for d={d}")
    path = np.empty((rule.horizon + 1, d), dtype=np.int64)
    n, reason, which = walk_kernel(
        dlaw.law.jump_array(),
        dlaw.law.alpha_array(),
        np.uint64(env_base_key(seed)),
        np.uint64(wkey),
        start,
        rule.horizon,
        *_rule_arrays(rule, d),
        path,
    )
    return _record(path[:n].copy(), reason, which, rule)


def run_walk(dlaw: DirichletLaw, seed: int, trial: int, start: Sequence[int],
             rule: StopRule, walk_id: int = 0) -> WalkRecord:
    """Run one walk in the environment named by ``seed``.

    The result is a deterministic function of ``(seed, trial, walk_id)`` and
    the arguments. The walk stops at the first index where a stop triggers,
    or after ``rule.horizon`` steps.
    """
    return _simulate(dlaw, seed, walk_key(seed, trial, walk_id), start, rule)


def run_two_walks(dlaw: DirichletLaw, seed: int, trial: int, start1, start2,
                  rule1: StopRule, rule2: StopRule,
                  walk_ids: tuple[int, int] = (1, 2)) -> tuple[WalkRecord, WalkRecord]:
    """Two walks in one environment with independent step streams."""
    r1 = _simulate(dlaw, seed, walk_key(seed, trial, walk_ids[0]), start1, rule1)
    r2 = _simulate(dlaw, seed, walk_key(seed, trial, walk_ids[1]), start2, rule2)
    return r1, r2
