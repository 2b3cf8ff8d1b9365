"""Finite weighted digraphs with exact rational weights, the cylinder graph
with its two boundary vertices, and Dirichlet environments on graphs.

Vertices of the cylinder are :class:`CanonicalSite` values plus the two
boundary markers :data:`DEL` (below the slab) and :data:`M` (above it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, NamedTuple, Optional, Sequence

import numba as nb
import numpy as np

from .lattice import JumpLaw, check_c3
from .rng import TAG_GRAPH_ENV, TAG_GRAPH_WALK, derive_key, fill_dirichlet, key_words, next_uniform

__all__ = [
    "DEL",
    "M",
    "CanonicalSite",
    "ConstructionError",
    "CylinderSpec",
    "InvalidGraphError",
    "WeightedDigraph",
    "build_cylinder",
    "canonicalize",
    "class_sums",
    "divergence",
    "frac_str",
    "graph_env_draw",
    "graph_first_hits",
]

DEL = "DEL"
M = "M"

VertexId = Hashable


class ConstructionError(ValueError):
    pass


class InvalidGraphError(ValueError):
    pass


def frac_str(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


class CanonicalSite(NamedTuple):
    along: int
    around: int

    def __str__(self) -> str:
        return f"({self.along},{self.around})"


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    """Vertices, merged directed edges with positive rational weights, labels.

    ``labels`` maps each vertex to ``"interior"``, ``"boundary_del"`` or
    ``"boundary_M"``; plain graphs label everything interior.
    """

    vertices: tuple
    edges: Mapping[tuple, Fraction]
    labels: Mapping[VertexId, str]

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], vertices: Optional[Sequence] = None,
                   labels: Optional[Mapping] = None) -> "WeightedDigraph":
        """Build from ``(tail, head, weight)`` triples, summing parallel edges."""
        merged: dict[tuple, Fraction] = {}
        order: list = list(vertices) if vertices is not None else []
        seen = set(order)
        for tail, head, w in edges:
            w = Fraction(w)
            if w <= 0:
                raise InvalidGraphError(f"edge {tail}->{head} has non-positive weight {w}")
            merged[(tail, head)] = merged.get((tail, head), Fraction(0)) + w
            for v in (tail, head):
                if v not in seen:
                    seen.add(v)
                    order.append(v)
        labs = {v: "interior" for v in order}
        if labels:
            labs.update(labels)
        return cls(tuple(order), merged, labs)

    def __post_init__(self):
        index = {v: i for i, v in enumerate(self.vertices)}
        if len(index) != len(self.vertices):
            raise InvalidGraphError("duplicate vertices")
        out: dict = {v: [] for v in self.vertices}
        inn: dict = {v: [] for v in self.vertices}
        for (t, h), w in self.edges.items():
            if t not in index or h not in index:
                raise InvalidGraphError(f"edge {t}->{h} touches an unknown vertex")
            if w <= 0:
                raise InvalidGraphError(f"edge {t}->{h} has non-positive weight")
            out[t].append((h, w))
            inn[h].append((t, w))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_out", out)
        object.__setattr__(self, "_in", inn)

    def index(self, v: VertexId) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise KeyError(f"unknown vertex {v!r}") from None

    def out_edges(self, v: VertexId) -> list[tuple[VertexId, Fraction]]:
        self.index(v)
        return list(self._out[v])

    def in_edges(self, v: VertexId) -> list[tuple[VertexId, Fraction]]:
        self.index(v)
        return list(self._in[v])

    def weight(self, tail: VertexId, head: VertexId) -> Fraction:
        return self.edges.get((tail, head), Fraction(0))

    def csr(self):
        """``(indptr, heads, weights)`` arrays over vertex indices, edges in
        insertion order within each tail."""
        indptr = np.zeros(len(self.vertices) + 1, dtype=np.int64)
        heads, weights = [], []
        for i, v in enumerate(self.vertices):
            for h, w in self._out[v]:
                heads.append(self._index[h])
                weights.append(float(w))
            indptr[i + 1] = len(heads)
        return indptr, np.array(heads, dtype=np.int64), np.array(weights, dtype=np.float64)

    def to_dot(self, name: str = "H") -> str:
        """DOT text; vertices by their printed name, weights as ``p/q``."""
        lines = [f"digraph {name} {{"]
        for v in self.vertices:
            shape = "box" if self.labels.get(v, "interior") != "interior" else "ellipse"
            lines.append(f'  "{v}" [label="{v}", shape={shape}];')
        for (t, h), w in self.edges.items():
            lines.append(f'  "{t}" -> "{h}" [label="{frac_str(w)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def divergence(g: WeightedDigraph, v: VertexId) -> Fraction:
    """In-weight minus out-weight at ``v``, exact."""
    return sum((w for _, w in g.in_edges(v)), Fraction(0)) - sum(
        (w for _, w in g.out_edges(v)), Fraction(0)
    )


# --- cylinder -------------------------------------------------------------


def _dot(x, y) -> int:
    return sum(a * b for a, b in zip(x, y))


@dataclass(frozen=True)
class CylinderSpec:
    """Slab ``0 <= x . u/|u| <= L`` of Z^2 with ``x ~ x + N u2``.

    ``L`` is a depth measured along the unit vector, so the slab holds the
    sites with ``0 <= x . u <= L |u|``. ``K`` is an optional lower bound on
    the circumference ``N |u2|``.
    """

    law: JumpLaw
    u: tuple[int, int]
    u2: tuple[int, int]
    N: int
    L: Fraction
    K: float = 0.0

    def __init__(self, law: JumpLaw, u, u2=None, N: int = 1, L=1, K: float = 0.0):
        u = tuple(int(c) for c in u)
        if u2 is None and len(u) == 2:
            u2 = (-u[1], u[0])
        u2 = tuple(int(c) for c in u2)
        object.__setattr__(self, "law", law)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "u2", u2)
        object.__setattr__(self, "N", int(N))
        object.__setattr__(self, "L", Fraction(L))
        object.__setattr__(self, "K", float(K))

    @property
    def period(self) -> int:
        """Modulus of the ``around`` coordinate, ``N |u2|^2``."""
        return self.N * _dot(self.u2, self.u2)

    def validate(self) -> None:
        if self.law.d != 2 or len(self.u) != 2 or len(self.u2) != 2:
            raise ConstructionError("cylinder construction is implemented for d = 2")
        if not any(self.u) or not any(self.u2):
            raise ConstructionError("u and u2 must be nonzero")
        if _dot(self.u, self.u2) != 0:
            raise ConstructionError(f"u={self.u} and u2={self.u2} are not orthogonal")
        if self.N < 1 or self.L <= 0:
            raise ConstructionError("N and L must be positive")
        circ2 = self.N * self.N * _dot(self.u2, self.u2)
        if circ2 <= 4 * self.law.R2:
            raise ConstructionError(
                f"circumference N|u2| = {math.sqrt(circ2):.4g} must exceed 2R = {2 * self.law.R:.4g}"
            )
        if math.sqrt(circ2) < self.K:
            raise ConstructionError(f"circumference N|u2| = {math.sqrt(circ2):.4g} is below K = {self.K}")

    def direction(self) -> np.ndarray:
        u = np.array(self.u, dtype=float)
        return u / np.linalg.norm(u)

    def in_slab(self, along: int) -> bool:
        # 0 <= along <= L |u|, decided exactly
        return along >= 0 and along * along <= self.L * self.L * _dot(self.u, self.u)


def canonicalize(spec: CylinderSpec, x: Sequence[int]) -> CanonicalSite:
    """Quotient class of ``x``: ``(x . u, x . u2 mod N |u2|^2)``."""
    x = tuple(int(c) for c in x)
    if len(x) != 2:
        raise ConstructionError("canonicalize is defined for d = 2")
    return CanonicalSite(_dot(x, spec.u), _dot(x, spec.u2) % spec.period)


def slab_representatives(spec: CylinderSpec) -> list[tuple[int, int]]:
    """One site per quotient class: slab sites with ``0 <= x . u2 < N |u2|^2``."""
    uu, vv = _dot(spec.u, spec.u), _dot(spec.u2, spec.u2)
    amax = math.floor(spec.L * math.sqrt(uu)) + 1
    bmax = spec.period
    corners = [
        (a * spec.u[0] / uu + b * spec.u2[0] / vv, a * spec.u[1] / uu + b * spec.u2[1] / vv)
        for a in (0, amax) for b in (0, bmax)
    ]
    lo = [math.floor(min(c[i] for c in corners)) - 1 for i in range(2)]
    hi = [math.ceil(max(c[i] for c in corners)) + 1 for i in range(2)]
    reps = []
    for x0 in range(lo[0], hi[0] + 1):
        for x1 in range(lo[1], hi[1] + 1):
            x = (x0, x1)
            if spec.in_slab(_dot(x, spec.u)) and 0 <= _dot(x, spec.u2) < spec.period:
                reps.append(x)
    reps.sort(key=lambda x: (_dot(x, spec.u), _dot(x, spec.u2)))
    return reps


def build_cylinder(spec: CylinderSpec) -> WeightedDigraph:
    """The cylinder graph with boundary vertices ``DEL`` and ``M``.

    Jumps leaving the slab below go to ``DEL``, above go to ``M``; the mirror
    edges enter from them. Parallel edges are merged by summing weights. The
    special edges ``M -> DEL`` and ``DEL -> M`` both get the total weight of
    the edges into ``DEL`` from the slab.
    """
    spec.validate()
    if check_c3(spec.law, max(6, 3 * math.ceil(spec.law.R))) != "proven":
        raise ConstructionError("could not establish that the jumps generate Z^2")
    reps = slab_representatives(spec)
    verts = [CanonicalSite(_dot(x, spec.u), _dot(x, spec.u2)) for x in reps]
    edges = []
    for x, cx in zip(reps, verts):
        for y, w in zip(spec.law.jumps, spec.law.weights):
            z = (x[0] + y[0], x[1] + y[1])
            az = _dot(z, spec.u)
            if az < 0:
                edges.append((cx, DEL, w))
            elif not spec.in_slab(az):
                edges.append((cx, M, w))
            else:
                edges.append((cx, canonicalize(spec, z), w))
            src = (x[0] - y[0], x[1] - y[1])
            asrc = _dot(src, spec.u)
            if asrc < 0:
                edges.append((DEL, cx, w))
            elif not spec.in_slab(asrc):
                edges.append((M, cx, w))
    W = sum((w for t, h, w in edges if h == DEL), Fraction(0))
    if W > 0:
        edges.append((M, DEL, W))
        edges.append((DEL, M, W))
    labels = {DEL: "boundary_del", M: "boundary_M"}
    return WeightedDigraph.from_edges(edges, vertices=verts + [DEL, M], labels=labels)


def class_sums(g: WeightedDigraph) -> dict[str, Fraction]:
    """Total weight of each cylinder edge class: "1", "2a"-"2d", "3"."""
    sums = {k: Fraction(0) for k in ("1", "2a", "2b", "2c", "2d", "3")}
    for (t, h), w in g.edges.items():
        lt, lh = g.labels[t], g.labels[h]
        if lt == "interior" and lh == "interior":
            sums["1"] += w
        elif lt == "interior" and lh == "boundary_del":
            sums["2a"] += w
        elif lt == "boundary_del" and lh == "interior":
            sums["2b"] += w
        elif lt == "interior" and lh == "boundary_M":
            sums["2c"] += w
        elif lt == "boundary_M" and lh == "interior":
            sums["2d"] += w
        else:
            sums["3"] += w
    return sums


# --- Dirichlet environments on graphs --------------------------------------


def _check_no_sinks(g: WeightedDigraph) -> None:
    for v in g.vertices:
        if not g._out[v]:
            raise InvalidGraphError(f"vertex {v!r} has no out-edges")


def graph_env_draw(g: WeightedDigraph, seed: int, trial: int) -> dict:
    """Independent Dirichlet transition vectors at every vertex.

    Returns ``{vertex: (heads, probs)}`` with heads in out-edge order. The
    draw at a vertex depends only on ``(seed, trial, vertex index)``.
    """
    _check_no_sinks(g)
    indptr, heads, weights = g.csr()
    base = np.uint64(derive_key(seed, TAG_GRAPH_ENV))
    out = {}
    for i, v in enumerate(g.vertices):
        lo, hi = indptr[i], indptr[i + 1]
        probs = np.empty(hi - lo)
        _vertex_probs(base, trial, i, weights[lo:hi], probs)
        out[v] = ([g.vertices[h] for h in heads[lo:hi]], probs)
    return out


@nb.njit(cache=True)
def _vertex_probs(base, trial, v, alphas, out):
    words = np.empty(2, dtype=np.int64)
    words[0] = trial
    words[1] = v
    fill_dirichlet(alphas, key_words(base, words), np.uint64(0), out)


@nb.njit(cache=True)
def _graph_kernel(indptr, heads, weights, start, target, env_base, walk_base,
                  trials, horizon, hit, prev, first, steps):
    nv = indptr.shape[0] - 1
    probs = np.empty(heads.shape[0])
    stamp = np.full(nv, -1, dtype=np.int64)
    words = np.empty(1, dtype=np.int64)
    for k in range(trials.shape[0]):
        t = trials[k]
        words[0] = t
        wkey = key_words(walk_base, words)
        ctr = np.uint64(0)
        cur = start
        last = -1
        hit[k] = -1
        prev[k] = -1
        first[k] = -1
        n = 0
        while n < horizon:
            lo = indptr[cur]
            hi = indptr[cur + 1]
            if stamp[cur] != k:
                _vertex_probs(env_base, t, cur, weights[lo:hi], probs[lo:hi])
                stamp[cur] = k
            u, ctr = next_uniform(wkey, ctr)
            nxt = heads[hi - 1]
            acc = 0.0
            for e in range(lo, hi):
                acc += probs[e]
                if u < acc:
                    nxt = heads[e]
                    break
            n += 1
            if n == 1:
                first[k] = nxt
            last = cur
            cur = nxt
            if target[cur]:
                hit[k] = cur
                prev[k] = last
                break
        steps[k] = n


@dataclass(frozen=True)
class GraphHits:
    """Per-trial outcome of a walk run until it first enters a target set.

    Vertex fields hold vertex indices; ``hit == -1`` marks a censored trial.
    """

    trials: np.ndarray
    hit: np.ndarray
    prev: np.ndarray
    first: np.ndarray
    steps: np.ndarray

    @property
    def censored(self) -> np.ndarray:
        return self.hit < 0


def graph_first_hits(g: WeightedDigraph, start: VertexId, targets: Iterable[VertexId],
                     seed: int, trials: Sequence[int], horizon: int) -> GraphHits:
    """Annealed walks from ``start`` until the first positive time in ``targets``.

    Trial ``t`` uses a fresh environment (``graph_env_draw(g, seed, t)``)
    and its own step stream, so results depend only on the trial indices.
    """
    _check_no_sinks(g)
    indptr, heads, weights = g.csr()
    target = np.zeros(len(g.vertices), dtype=np.bool_)
    for v in targets:
        target[g.index(v)] = True
    return first_hits_arrays(indptr, heads, weights, g.index(start), target, seed, trials, horizon)


def first_hits_arrays(indptr, heads, weights, start: int, target: np.ndarray, seed: int,
                      trials: Sequence[int], horizon: int) -> GraphHits:
    """:func:`graph_first_hits` on CSR arrays and vertex indices."""
    trials = np.asarray(trials, dtype=np.int64)
    n = trials.shape[0]
    hit, prev, first, steps = (np.empty(n, dtype=np.int64) for _ in range(4))
    _graph_kernel(
        indptr, heads, weights, int(start), target,
        np.uint64(derive_key(seed, TAG_GRAPH_ENV)), np.uint64(derive_key(seed, TAG_GRAPH_WALK)),
        trials, int(horizon), hit, prev, first, steps,
    )
    return GraphHits(trials, hit, prev, first, steps)
