"""Undo a continuous charge-qubit readout by waiting for zero.

A point contact reads out the qubit continuously; the dimensionless
result r is the accumulated which-state evidence.  If the first stretch
of data gave r0, just keep the detector on and switch it off the moment
the running total returns to zero.  This script compares the simulated
strategy with every closed-form prediction: success probability,
waiting-time distribution, and its moments.
"""

import math

import numpy as np

from uncollapse import charge, stats
from uncollapse import measurement as qm
from uncollapse import trajectory as tj

r0 = 1.0
state = qm.QuantumState(rho=np.diag([0.5, 0.5]).astype(complex))
config = tj.TrajectoryConfig(d_tau=0.005, escape_radius=6.0)

print(f"first readout r0 = {r0}, populations {np.diag(state.rho).real}")
print(f"predicted success probability: {charge.uncollapse_success_probability(state, r0):.5f}")

ens = tj.wait_and_stop_ensemble(state, r0, 100_000, config, seed=2, collect_times=True)
est = stats.bernoulli_estimate(ens.successes, ens.n)
print(f"simulated over {ens.n} runs:   {est.rate:.5f}  (3-sigma interval "
      f"[{est.ci_low:.5f}, {est.ci_high:.5f}])")
print()

times = ens.waiting_times
mean, std, mode = charge.waiting_time_moments(r0)
summary = stats.moment_summary(times)
print("waiting time (units of T_M)   theory      sample")
print(f"  mean                       {mean:.4f}      {summary.mean:.4f}")
print(f"  standard deviation         {std:.4f}      {summary.std:.4f}")
print(f"  most likely value          {mode:.4f}      {summary.mode:.4f}")

comp = stats.ks_distance(times, lambda t: charge.waiting_time_cdf(t, r0))
print(f"  KS distance to the law     {comp.statistic:.4f}  ({comp.n} samples)")
print()

# a text histogram of the long-tailed waiting-time density
edges = np.linspace(0.0, 4.0, 33)
counts, _ = np.histogram(times, bins=edges, density=True)
peak = counts.max()
print("waiting-time histogram vs density (x = samples, * = curve):")
for k, c in enumerate(counts):
    mid = 0.5 * (edges[k] + edges[k + 1])
    bar = int(round(40 * c / peak))
    curve = int(round(40 * charge.waiting_time_pdf(mid, r0) / peak))
    line = [" "] * 44
    for i in range(bar):
        line[i] = "x"
    if 0 <= curve < len(line):
        line[curve] = "*"
    print(f"  {mid:5.2f} |{''.join(line)}")

print()
frac = float(np.mean(times <= mean))
print(f"long tail: {100 * frac:.1f}% of successful runs finish before the mean time")
print(f"residual success forfeited by cutoffs: <= {ens.residual_success_bound / ens.n:.1e}")
