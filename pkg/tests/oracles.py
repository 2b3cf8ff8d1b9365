"""Slow, independent reference implementations used only by the tests."""

from fractions import Fraction
from itertools import product

MASK = (1 << 64) - 1


def splitmix64(state):
    """Textbook splitmix64: yields outputs for a 64-bit seed."""
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        yield z ^ (z >> 31)


def drift(jumps, weights):
    total = sum(Fraction(w) for w in weights)
    d = len(jumps[0])
    return tuple(sum(Fraction(w) * j[i] for j, w in zip(jumps, weights)) / total for i in range(d))


def erasures(path):
    """All paths reachable by repeated single loop erasures, by recursion on sites."""
    path = tuple(path)
    out = {path}
    stack = [path]
    while stack:
        p = stack.pop()
        for m in range(len(p)):
            for n in range(m + 1, len(p)):
                if p[m] == p[n]:
                    q = p[:m] + p[n:]
                    if q not in out:
                        out.add(q)
                        stack.append(q)
    return out


def dot(x, ell):
    return sum(a * b for a, b in zip(x, ell))


def g_event(path, ell, a, b):
    """Truncate at the first b-side index, then search every erasure."""
    up = a < b
    reach = (lambda v: v >= b) if up else (lambda v: v <= b)
    bad = (lambda v: v < a) if up else (lambda v: v > a)
    t = next((i for i, x in enumerate(path) if reach(dot(x, ell))), None)
    if t is None:
        return False
    for y in erasures(path[: t + 1]):
        tb = next((i for i, x in enumerate(y) if reach(dot(x, ell))), None)
        ta = next((i for i, x in enumerate(y) if bad(dot(x, ell))), None)
        if tb is not None and (ta is None or tb < ta):
            return True
    return False


def lateral_less(x, y, ell, perp):
    """Lateral order: perpendicular coordinate first, then the ell coordinate."""
    return (dot(x, perp), dot(x, ell)) < (dot(y, perp), dot(y, ell))


def median_ok(samples, z, ell, perp):
    n = len(samples)
    before = sum(lateral_less(s, z, ell, perp) for s in samples)
    after = sum(lateral_less(z, s, ell, perp) for s in samples)
    return 2 * before <= n and 2 * after <= n


def min_dist2(p1, p2):
    return min(sum((a - b) ** 2 for a, b in zip(x, y)) for x, y in product(p1, p2))


def urn_last_edge(edges, x, trials, seed):
    """Annealed walk as a directed edge-reinforced urn, run until it returns
    to ``x``; frequencies of the vertex visited just before the return."""
    import random

    out = {}
    for t, h, w in edges:
        out.setdefault(t, []).append((h, w))
    rs = random.Random(seed)
    counts = {}
    for _ in range(trials):
        used = {}
        v, prev = x, None
        while True:
            heads = [h for h, _ in out[v]]
            ws = [w + used.get((v, h), 0) for h, w in out[v]]
            h = rs.choices(heads, ws)[0]
            used[(v, h)] = used.get((v, h), 0) + 1
            prev, v = v, h
            if v == x:
                break
        counts[prev] = counts.get(prev, 0) + 1
    return {k: c / trials for k, c in counts.items()}
