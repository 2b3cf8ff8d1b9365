"""Monte Carlo estimators and per-sample property checks.

All estimators are annealed: trial ``t`` draws a fresh environment whose
seed is derived from ``(seed, t)``. Outputs are deterministic in
``(seed, trial indices)`` and independent of ``workers``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ._parallel import map_trials
from .environment import DirichletLaw, annealed_drift_exact
from .erasure import event_G, event_G_bruteforce
from .graph import DEL, M, CylinderSpec, WeightedDigraph, _check_no_sinks, build_cylinder, divergence, first_hits_arrays
from .lattice import Direction, UnsupportedDimensionError, first_hit, prec_key
from .rng import derive_key
from .walk import HalfSpaceStop, StopRule, WalkRecord, run_walk

__all__ = [
    "DecompositionReport",
    "EstimateResult",
    "FirstStepResult",
    "Ineq804Report",
    "LoopReversalResult",
    "TwoWalkClass",
    "classify_two_walk",
    "decomposition_report",
    "empirical_median",
    "erasure_agreement",
    "estimate_transience",
    "first_step_frequency",
    "first_step_mean",
    "g_event_frequencies",
    "inequality_804_report",
    "pilot_median",
    "transience_table",
    "trial_env_seed",
    "verify_loop_reversal",
]

TAG_TRIAL = 0x5452  # per-trial environment seeds
TAG_PILOT = 0x50494C  # pilot batch for the median point
TAG_PATHS = 0x50415448  # random paths for the erasure check


def trial_env_seed(seed: int, trial: int) -> int:
    """Seed of the environment used by trial ``trial``."""
    return derive_key(seed, TAG_TRIAL, trial)


@dataclass(frozen=True)
class EstimateResult:
    """Bernoulli frequency with its binomial standard error.

    ``trials`` counts every trial run; ``censored`` of them hit the horizon.
    Unless stated otherwise the estimate is over uncensored trials.
    """

    estimate: float
    trials: int
    std_error: float
    censored: int = 0

    @classmethod
    def from_counts(cls, successes: int, n: int, censored: int = 0, trials: Optional[int] = None):
        p = successes / n if n else 0.0
        se = math.sqrt(p * (1.0 - p) / n) if n else 0.0
        return cls(p, n + censored if trials is None else trials, se, censored)

    def within(self, value: float, k: float = 4.0) -> bool:
        """``|estimate - value| <= k`` standard errors of ``value``."""
        n = self.trials - self.censored
        se = math.sqrt(value * (1.0 - value) / n) if n else 0.0
        return abs(self.estimate - value) <= k * se


# --- loop reversal on graphs ------------------------------------------------


def _hits_chunk(csr, start, target, seed, horizon, lo, hi):
    r = first_hits_arrays(*csr, start, target, seed, np.arange(lo, hi), horizon)
    return list(zip(r.trials.tolist(), r.hit.tolist(), r.prev.tolist(), r.first.tolist(), r.steps.tolist()))


def _graph_runs(g: WeightedDigraph, start, targets, seed: int, trials: int, horizon: int, workers: int):
    _check_no_sinks(g)
    target = np.zeros(len(g.vertices), dtype=np.bool_)
    for v in targets:
        target[g.index(v)] = True
    return map_trials(_hits_chunk, (g.csr(), g.index(start), target, seed, horizon), 0, trials, workers)


@dataclass
class LoopReversalResult:
    vertex: object
    rows: dict  # predecessor -> (EstimateResult, exact Fraction)
    censored: int
    divergence_free: bool
    trials: int
    records: list = field(default_factory=list, repr=False)

    def pairs(self) -> dict:
        """``{predecessor: (empirical, exact)}``."""
        return {y: (est.estimate, exact) for y, (est, exact) in self.rows.items()}


def verify_loop_reversal(g: WeightedDigraph, x, trials: int, seed: int,
                         horizon: int = 10**7, workers: int = 1) -> LoopReversalResult:
    """Empirical law of the vertex visited just before the first return to ``x``.

    Each in-neighbour ``y`` is paired with ``w(y, x) / sum_v w(v, x)``. That
    value is the exact answer when every vertex has zero divergence;
    ``divergence_free`` records whether the graph qualifies.
    """
    ins = g.in_edges(x)
    if not ins:
        raise ValueError(f"vertex {x!r} has no in-edges")
    total = sum((w for _, w in ins), Fraction(0))
    runs = _graph_runs(g, x, [x], seed, trials, horizon, workers)
    prev = np.array([r[2] for r in runs], dtype=np.int64)
    censored = int(sum(1 for r in runs if r[1] < 0))
    n = len(runs) - censored
    rows = {}
    for y, w in ins:
        count = int(np.sum(prev == g.index(y)))
        rows[y] = (EstimateResult.from_counts(count, n, censored), w / total)
    records = [
        {"trial": t, "returned": h >= 0, "prev": str(g.vertices[p]) if p >= 0 else None, "steps": s}
        for t, h, p, _, s in runs
    ]
    free = all(divergence(g, v) == 0 for v in g.vertices)
    return LoopReversalResult(x, rows, censored, free, len(runs), records)


def first_step_frequency(g: WeightedDigraph, x, y, trials: int, seed: int, workers: int = 1) -> EstimateResult:
    """Annealed frequency of ``X_1 == y`` for walks started at ``x``."""
    runs = _graph_runs(g, x, g.vertices, seed, trials, 1, workers)
    iy = g.index(y)
    return EstimateResult.from_counts(sum(1 for r in runs if r[3] == iy), len(runs))


@dataclass
class Ineq804Report:
    lhs: float
    first_return_special: EstimateResult
    detour_term: EstimateResult
    slack: float
    holds: bool
    return_via_special: EstimateResult
    records: list = field(default_factory=list, repr=False)


def inequality_804_report(spec: CylinderSpec, trials: int, seed: int,
                          horizon: int = 10**7, workers: int = 1) -> Ineq804Report:
    """Check ``1/2 <= P^M(first hit of DEL comes from M) / 2 +
    P^DEL(X_1 != M, M reached before returning)`` within statistical error.

    ``return_via_special`` is the frequency, from ``DEL``, of returning to
    ``DEL`` along the special edge; it should be 1/2.
    """
    drift = annealed_drift_exact(DirichletLaw(spec.law))
    if sum(c * u for c, u in zip(drift, spec.u)) != 0:
        raise ValueError("the boundary inequality is stated for zero drift along u")
    g = build_cylinder(spec)
    iM = g.index(M)
    from_m = _graph_runs(g, M, [DEL], seed, trials, horizon, workers)
    c1 = sum(1 for r in from_m if r[1] < 0)
    p1 = EstimateResult.from_counts(sum(1 for r in from_m if r[1] >= 0 and r[2] == iM), len(from_m) - c1, c1)
    from_del = _graph_runs(g, DEL, [DEL, M], seed + 1, trials, horizon, workers)
    c2 = sum(1 for r in from_del if r[1] < 0)
    p2 = EstimateResult.from_counts(
        sum(1 for r in from_del if r[1] == iM and r[3] != iM), len(from_del) - c2, c2
    )
    rev = verify_loop_reversal(g, DEL, trials, seed + 2, horizon, workers)
    rhs = 0.5 * p1.estimate + p2.estimate
    se = math.sqrt((0.5 * p1.std_error) ** 2 + p2.std_error**2)
    records = [
        {"trial": a[0], "from_M_hit_via_M": a[1] >= 0 and a[2] == iM,
         "from_DEL_detour": b[1] == iM and b[3] != iM}
        for a, b in zip(from_m, from_del)
    ]
    return Ineq804Report(0.5, p1, p2, rhs - 0.5, 0.5 <= rhs + 4 * se, rev.rows[M][0], records)


# --- median point -------------------------------------------------------------


def empirical_median(samples: Sequence, direction: Direction):
    """A sample value ``z`` with at most half the samples strictly before it and
    at most half strictly after it in the lateral order; the earliest such
    value when several qualify."""
    if len(samples) == 0:
        raise ValueError("empirical_median needs at least one sample")
    if direction.d != 2:
        raise UnsupportedDimensionError("the lateral order is defined for d = 2 only")
    key = prec_key(direction)
    pts = sorted((tuple(int(c) for c in s) for s in samples), key=key)
    n = len(pts)
    i = 0
    while i < n:
        j = i
        while j < n and pts[j] == pts[i]:
            j += 1
        # pts[i:j] are copies of one site: i before it, n - j after it
        if 2 * i <= n and 2 * (n - j) <= n:
            return pts[i]
        i = j
    raise AssertionError("unreachable: a median always exists")


# --- two walks ------------------------------------------------------------------


@dataclass(frozen=True)
class TwoWalkClass:
    g_both: bool
    O: bool
    I: bool
    P: bool
    censored: bool = False

    @property
    def violation(self) -> bool:
        return self.g_both and not (self.O or self.P)


def _encode(sites: np.ndarray, lo: np.ndarray, span: np.ndarray) -> np.ndarray:
    code = np.zeros(sites.shape[:-1], dtype=np.int64)
    for i in range(sites.shape[-1]):
        code = code * span[i] + (sites[..., i] - lo[i])
    return code


def _ball_offsets(r2: float) -> np.ndarray:
    r = int(math.floor(math.sqrt(r2) + 1e-9))
    grid = np.stack(np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij"), -1).reshape(-1, 2)
    return grid[(grid**2).sum(1) <= r2 + 1e-9]


def classify_two_walk(rec1: WalkRecord, rec2: WalkRecord, direction: Direction, L: float,
                      z_L: Sequence[int], R: float) -> TwoWalkClass:
    """Opposite-sides, intersection and proximity classification.

    Walk 1 runs from the origin until ``X . ell >= 2L``; walk 2 runs from
    ``z_L`` until ``X . ell <= -L``. Records stopped by the horizon are
    marked censored and classified all-false.
    """
    p1, p2 = rec1.path, rec2.path
    t1 = first_hit(p1, direction, ">=", 2 * L)
    t2 = first_hit(p2, direction, "<=", -L)
    if t1 is None or t2 is None:
        return TwoWalkClass(False, False, False, False, censored=True)
    p1, p2 = p1[: t1 + 1], p2[: t2 + 1]
    x_L = float(direction.dot(np.asarray(z_L)))
    g_both = event_G(p1, direction, 0.0, 2 * L) and event_G(p2, direction, x_L, -L)
    if not g_both:
        return TwoWalkClass(False, False, False, False)
    z = np.asarray(z_L, dtype=np.int64)
    t0 = first_hit(p2, direction, "<=", 0.0)
    side1 = float(direction.dot_perp(p1[t1] - z))
    side2 = float(direction.dot_perp(p2[t0]))
    O = side1 * side2 < 0

    r2 = 4.0 * R * R
    reach = int(math.floor(2 * R + 1e-9))
    both = np.concatenate([p1, p2])
    lo = both.min(axis=0) - reach
    span = both.max(axis=0) + reach - lo + 1
    c1 = np.unique(_encode(p1, lo, span))
    u2 = np.unique(p2, axis=0)
    I = bool(np.isin(_encode(u2, lo, span), c1).any())
    if I:
        P = True
    else:
        near = u2[:, None, :] + _ball_offsets(r2)[None, :, :]
        P = bool(np.isin(_encode(near, lo, span), c1).any())
    return TwoWalkClass(True, bool(O), I, P)


@dataclass
class DecompositionReport:
    z_L: tuple
    counts: dict
    records: list = field(default_factory=list, repr=False)


def _two_walk_rules(direction: Direction, L: float, horizon: int) -> tuple[StopRule, StopRule]:
    return (StopRule(horizon, (HalfSpaceStop(direction, ">=", 2 * L),)),
            StopRule(horizon, (HalfSpaceStop(direction, "<=", -L),)))


def _pilot_chunk(dlaw, direction, L, horizon, seed, lo, hi):
    rule = StopRule(horizon, (HalfSpaceStop(direction, ">=", 2 * L),))
    out = []
    for t in range(lo, hi):
        rec = run_walk(dlaw, trial_env_seed(seed, t), t, (0,) * dlaw.d, rule)
        if not rec.censored and event_G(rec.path, direction, 0.0, 2 * L):
            out.append(tuple(int(c) for c in rec.path[-1]))
        else:
            out.append(None)
    return out


def pilot_median(dlaw: DirichletLaw, direction: Direction, L: float, seed: int, samples: int = 1000,
                 horizon: int = 5000, workers: int = 1, batch: int = 2000) -> tuple:
    """Median point from walks that reach ``2L`` with their negative
    excursions erasable, over the first ``samples`` such walks."""
    pseed = derive_key(seed, TAG_PILOT)
    found: list = []
    start = 0
    while len(found) < samples:
        got = map_trials(_pilot_chunk, (dlaw, direction, L, horizon, pseed), start, start + batch, workers)
        found.extend(s for s in got if s is not None)
        start += batch
        if start > 1000 * max(samples, 1) and not found:
            raise RuntimeError("pilot run found no qualifying walks")
    return empirical_median(found[:samples], direction)


def _two_walk_chunk(dlaw, direction, L, horizon, seed, z_L, R, lo, hi):
    rule1, rule2 = _two_walk_rules(direction, L, horizon)
    origin = (0,) * dlaw.d
    out = []
    for t in range(lo, hi):
        env = trial_env_seed(seed, t)
        rec1 = run_walk(dlaw, env, t, origin, rule1, walk_id=1)
        if rec1.censored:
            # walk 2 is skipped: the trial is censored either way
            out.append({"trial": t, "censored": True, "stop1": rec1.stop_reason, "stop2": None,
                        "g_both": False, "O": False, "I": False, "P": False})
            continue
        rec2 = run_walk(dlaw, env, t, z_L, rule2, walk_id=2)
        cls = classify_two_walk(rec1, rec2, direction, L, z_L, R)
        out.append({"trial": t, "censored": cls.censored, "stop1": rec1.stop_reason,
                    "stop2": rec2.stop_reason, "g_both": cls.g_both, "O": cls.O, "I": cls.I,
                    "P": cls.P})
    return out


def decomposition_report(dlaw: DirichletLaw, direction: Direction, L: float, trials: int, seed: int,
                         horizon: int = 5000, z_L: Optional[Sequence[int]] = None,
                         pilot: int = 1000, uncensored: Optional[int] = None,
                         workers: int = 1, batch: int = 2000) -> DecompositionReport:
    """Classify two-walk trials and count violations of ``g_both => O or P``.

    Walk 1 starts at the origin, walk 2 at ``z_L`` in the same environment.
    With ``uncensored`` set, trial indices are consumed in order until that
    many uncensored trials are collected (``trials`` is then ignored).
    """
    if dlaw.d != 2:
        raise UnsupportedDimensionError("the two-walk decomposition is defined for d = 2")
    if z_L is None:
        z_L = pilot_median(dlaw, direction, L, seed, pilot, horizon, workers)
    z_L = tuple(int(c) for c in z_L)
    R = dlaw.law.R
    args = (dlaw, direction, L, horizon, seed, z_L, R)
    if uncensored is None:
        records = map_trials(_two_walk_chunk, args, 0, trials, workers)
    else:
        records, start, kept = [], 0, 0
        while kept < uncensored:
            got = map_trials(_two_walk_chunk, args, start, start + batch, workers)
            for rec in got:
                if kept >= uncensored:
                    break
                records.append(rec)
                kept += not rec["censored"]
            start += batch
    for rec in records:
        rec["violation"] = rec["g_both"] and not (rec["O"] or rec["P"])
        rec["i_not_p"] = rec["I"] and not rec["P"]
    counts = {
        "trials": len(records),
        "censored": sum(r["censored"] for r in records),
        "uncensored": sum(not r["censored"] for r in records),
        "g_both": sum(r["g_both"] for r in records),
        "O": sum(r["O"] for r in records),
        "I": sum(r["I"] for r in records),
        "P": sum(r["P"] for r in records),
        "violations": sum(r["violation"] for r in records),
        "i_not_p": sum(r["i_not_p"] for r in records),
    }
    return DecompositionReport(z_L, counts, records)


# --- transience proxies ---------------------------------------------------------


def _transience_chunk(dlaw, direction, bs, horizon, seed, proxy, lo, hi):
    bmax = max(bs)
    origin = (0,) * dlaw.d
    if proxy == "strict":
        rule = StopRule(horizon, (HalfSpaceStop(direction, ">=", bmax), HalfSpaceStop(direction, "<", 0.0)))
    else:
        rule = StopRule(horizon, (HalfSpaceStop(direction, ">=", bmax),))
    out = []
    for t in range(lo, hi):
        rec = run_walk(dlaw, trial_env_seed(seed, t), t, origin, rule)
        row = {"trial": t, "stop_reason": rec.stop_reason, "steps": rec.steps}
        neg = first_hit(rec.path, direction, "<", 0.0)
        for b in bs:
            if proxy == "strict":
                tb = first_hit(rec.path, direction, ">=", b)
                ok = tb is not None and (neg is None or tb < neg)
            else:
                ok = event_G(rec.path, direction, 0.0, b)
            row[f"hit_{b:g}"] = bool(ok)
        out.append(row)
    return out


def estimate_transience(dlaw: DirichletLaw, direction: Direction, b: float, horizon: int, trials: int,
                        seed: int, proxy: str = "strict", workers: int = 1,
                        extra_thresholds: Sequence[float] = ()) -> EstimateResult:
    """Frequency of reaching ``X . ell >= b`` within the horizon while avoiding
    ``X . ell < 0``.

    ``proxy="strict"`` requires no visit at all to ``X . ell < 0`` before the
    hit; ``proxy="erasure"`` only requires such visits to be removable by
    loop erasures (the finite-horizon version of the erasure event). Trials
    that run out of time count as failures and are reported as censored.
    """
    return transience_table(dlaw, direction, [b, *extra_thresholds], horizon, trials, seed, proxy, workers)[0][b]


def transience_table(dlaw, direction, bs, horizon, trials, seed, proxy="strict", workers=1):
    """Estimates for several thresholds from one common-random-number run."""
    if any(b <= 0 for b in bs):
        raise ValueError("thresholds must be positive")
    if proxy not in ("strict", "erasure"):
        raise ValueError(f"unknown proxy {proxy!r}")
    bs = list(bs)
    rows = map_trials(_transience_chunk, (dlaw, direction, bs, horizon, seed, proxy), 0, trials, workers)
    censored = sum(r["stop_reason"] == "horizon" for r in rows)
    out = {}
    for b in bs:
        # censored trials count as failures, so the estimate is over all trials
        k = sum(r[f"hit_{b:g}"] for r in rows)
        out[b] = EstimateResult.from_counts(k, len(rows), censored, trials=len(rows))
    return out, rows


def g_event_frequencies(dlaw: DirichletLaw, direction: Direction, Ls: Sequence[float], trials: int,
                        seed: int, horizon: int = 5000, workers: int = 1) -> dict:
    """Frequency of the erasure event up to each threshold in ``Ls``, over
    uncensored walks; reported without any claimed rate."""
    out = {}
    for L in Ls:
        rows = map_trials(_transience_chunk, (dlaw, direction, [L], horizon, seed, "erasure"), 0, trials, workers)
        cens = sum(r["stop_reason"] == "horizon" for r in rows)
        k = sum(r[f"hit_{L:g}"] for r in rows)
        out[L] = EstimateResult.from_counts(k, len(rows) - cens, cens)
    return out


# --- erasure DP against the exhaustive closure ------------------------------------


def _random_path(rng: np.random.Generator, alphabet: np.ndarray, max_len: int) -> np.ndarray:
    n = int(rng.integers(1, max_len + 1))
    steps = alphabet[rng.integers(0, len(alphabet), n - 1)]
    start = np.zeros((1, alphabet.shape[1]), dtype=np.int64)
    return np.concatenate([start, start + np.cumsum(steps, axis=0)]) if n > 1 else start


ALPHABETS = {
    "Z1": (np.array([[-1], [1], [2]], dtype=np.int64), Direction((1.0,))),
    "Z2": (np.array([[1, 0], [-1, 0], [0, 1]], dtype=np.int64), Direction.of((1, 0))),
    "tripod": (np.array([[0, 1], [1, -1], [-2, 0]], dtype=np.int64), Direction.of((1, 0))),
}


def _erasure_chunk(seed, max_len, lo, hi):
    names = sorted(ALPHABETS)
    out = []
    for t in range(lo, hi):
        rng = np.random.default_rng([derive_key(seed, TAG_PATHS, t) & 0xFFFFFFFF, t])
        name = names[t % len(names)]
        alphabet, direction = ALPHABETS[name]
        path = _random_path(rng, alphabet, max_len)
        a, b = (int(v) for v in rng.choice(np.arange(-3, 4), size=2, replace=False))
        dp = event_G(path, direction, a, b)
        oracle = event_G_bruteforce(path, direction, a, b)
        out.append({"trial": t, "alphabet": name, "length": len(path), "a": a, "b": b,
                    "dp": bool(dp), "oracle": bool(oracle)})
    return out


def erasure_agreement(trials: int, seed: int, max_len: int = 12, workers: int = 1) -> list:
    """Compare :func:`event_G` with the exhaustive closure on random short paths.

    Paths use three-jump alphabets (one on Z, two on Z^2) and thresholds
    ``a != b`` drawn from ``{-3, ..., 3}``.
    """
    return map_trials(_erasure_chunk, (seed, max_len), 0, trials, workers)


# --- annealed first step ------------------------------------------------------------


def _first_step_chunk(dlaw, seed, lo, hi):
    rule = StopRule(1)
    origin = (0,) * dlaw.d
    out = []
    for t in range(lo, hi):
        rec = run_walk(dlaw, trial_env_seed(seed, t), t, origin, rule)
        out.append({"trial": t, "step": [int(c) for c in rec.path[1]]})
    return out


@dataclass
class FirstStepResult:
    mean: np.ndarray
    std_error: np.ndarray
    trials: int
    records: list = field(default_factory=list, repr=False)

    def within(self, drift: Sequence, k: float = 4.0) -> bool:
        """Every coordinate within ``k`` standard errors of ``drift``
        (exact agreement required where the standard error is zero)."""
        diff = np.abs(self.mean - np.asarray(drift, dtype=float))
        return bool(np.all(diff <= k * self.std_error + 1e-12))


def first_step_mean(dlaw: DirichletLaw, trials: int, seed: int, workers: int = 1) -> FirstStepResult:
    """Empirical mean of ``X_1`` under the annealed law, one fresh environment
    per trial."""
    rows = map_trials(_first_step_chunk, (dlaw, seed), 0, trials, workers)
    steps = np.array([r["step"] for r in rows], dtype=float)
    n = len(steps)
    se = steps.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(dlaw.d)
    return FirstStepResult(steps.mean(axis=0), se, n, rows)
