"""
The cylinder graph and its exact weight identities
==================================================

A jump law with zero annealed drift, folded onto a finite cylinder with
two boundary vertices, gives a weighted digraph whose divergence vanishes
everywhere. A walk in a Dirichlet environment on it returns to the lower
boundary through the special edge half of the time.
"""

from rwre import DEL, M, CylinderSpec, JumpLaw, build_cylinder, class_sums, divergence
from rwre.experiments import first_step_frequency, verify_loop_reversal

# jumps (0,1), (1,-1), (-2,0) with weights 2, 2, 1 have mean step zero
law = JumpLaw([(0, 1), (1, -1), (-2, 0)], [2, 2, 1])
spec = CylinderSpec(law, u=(2, 1), u2=(-1, 2), N=4, L=10)
g = build_cylinder(spec)
print(len(g.vertices), "vertices,", len(g.edges), "merged edges")

# %%
# Every weight is a Fraction, so these checks are exact.
print("largest |divergence|:", max(abs(divergence(g, v)) for v in g.vertices))
for name, total in class_sums(g).items():
    print(f"class {name:>2}: {total}")

# %%
# With weights (1,1,1) the drift is (-1/3, 0) and the boundary sums split.
drifted = class_sums(build_cylinder(CylinderSpec(JumpLaw(law.jumps, [1, 1, 1]), (2, 1), (-1, 2), 4, 10)))
print("2c - 2a with drift:", drifted["2c"] - drifted["2a"])

# %%
# Monte Carlo: last vertex before the first return to DEL, and the first step.
res = verify_loop_reversal(g, DEL, trials=20_000, seed=1)
est, exact = res.rows[M]
print(f"return via M: {est.estimate:.4f} +- {est.std_error:.4f} (exact {exact})")
print("first step to M:", first_step_frequency(g, DEL, M, 20_000, seed=2).estimate)
