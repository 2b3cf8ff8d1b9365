"""
Walks in a Dirichlet environment
================================

Each trial draws a fresh environment, so frequencies are annealed. With
weights (1,1,1) the drift points along (-1, 0); we compare how often the
walk climbs 50 units in that direction, and in the opposite one, before
dipping below its starting level.
"""

from rwre import Direction, DirichletLaw, JumpLaw, StopRule, annealed_drift_exact, run_walk
from rwre.experiments import decomposition_report, transience_table

law = DirichletLaw(JumpLaw([(0, 1), (1, -1), (-2, 0)], [1, 1, 1]))
print("drift:", annealed_drift_exact(law))

rec = run_walk(law, seed=3, trial=0, start=(0, 0), rule=StopRule.until(Direction.of((-1, 0)), ">=", 20, 10_000))
print(rec.stop_reason, "after", rec.steps, "steps, at", rec.path[-1].tolist())

# %%
# Both proxies for several thresholds, from one run per direction.
for ell in [(-1, 0), (1, 0)]:
    for proxy in ("strict", "erasure"):
        table, _ = transience_table(law, Direction.of(ell), [10, 25, 50], 10_000, 300, 5, proxy)
        print(ell, proxy, {b: round(r.estimate, 3) for b, r in table.items()})

# %%
# Two walks in one zero-drift environment: every trial in the erasure event
# for both walks has them on opposite sides of each other or close together.
zero = DirichletLaw(JumpLaw([(0, 1), (1, -1), (-2, 0)], [2, 2, 1]))
rep = decomposition_report(zero, Direction.of((1, 0)), L=5, trials=2000, seed=7, pilot=300)
print("z_L =", rep.z_L, rep.counts)
