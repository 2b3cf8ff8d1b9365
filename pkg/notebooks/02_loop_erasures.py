"""
Loop erasures and the erasure event
===================================

Erasing a loop ``X_m = X_n`` drops the sites in between. Whether some
sequence of erasures keeps a path on the good side of a level until it
crosses a target level is decided by a linear pass; on short paths it can
be compared with the exhaustive closure.
"""

import numpy as np

from rwre import Direction, event_G, event_G_bruteforce, reachable_erasures
from rwre.erasure import witness_family, erase_family

ell = Direction.of((1, 0))
path = np.array([(0, 0), (-1, 0), (0, 0), (1, 0), (2, 0)])
print("event:", event_G(path, ell, 0, 2))
fam = witness_family(path, ell, 0, 2)
print("erase", [(iv.m, iv.n) for iv in fam.intervals], "->", erase_family(path, fam).tolist())

# %%
# The closure of a short back-and-forth path on Z.
for y in sorted(reachable_erasures([[0], [1], [0], [1], [0]]), key=len):
    print([s[0] for s in y])

# %%
# Random paths on Z with steps -1, 1, 2: the fast pass and the closure agree.
rs = np.random.default_rng(0)
z = Direction((1.0,))
agree = 0
for _ in range(2000):
    steps = rs.choice([-1, 1, 2], size=rs.integers(0, 11))
    p = np.cumsum(np.r_[0, steps])[:, None]
    a, b = rs.choice(np.arange(-3, 4), 2, replace=False)
    agree += event_G(p, z, a, b) == event_G_bruteforce(p, z, a, b)
print(agree, "of 2000 agree")
