"""How much of a measurement's damage is undoable, on average?

Average the undo success over all possible first outcomes and the answer
collapses to one curve, 1 - erf(sqrt(t / 2 T_M)): it depends only on how
long the detector ran, never on the state being measured.  The script
verifies both properties by Monte Carlo over first-measurement outcomes.
"""

import numpy as np

from uncollapse import charge, stats
from uncollapse import measurement as qm
from uncollapse import trajectory as tj

n = 100_000
populations = (0.2, 0.5, 0.8)

print("duration t/T_M   theory     " + "".join(f"rho11={p:<8}" for p in populations))
for tau in (0.25, 0.5, 1.0, 2.0, 4.0):
    ref = float(charge.total_success_probability(tau))
    cells = []
    for k, p1 in enumerate(populations):
        state = qm.QuantumState(rho=np.diag([p1, 1.0 - p1]).astype(complex))
        hits = tj.sample_total_uncollapse(state, tau, n, seed=100 + k)
        est = stats.bernoulli_estimate(hits, n)
        flag = " " if est.contains(ref) else "!"
        cells.append(f"{est.rate:.4f}{flag}    ")
    print(f"   {tau:<12}  {ref:.4f}     " + "".join(cells))

print()
print("Longer measurements are exponentially harder to undo, and every")
print("column agrees: the reversibility of a measurement is a property of")
print("the measurement, not of the state it disturbed.")
