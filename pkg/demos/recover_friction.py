"""
Identifying friction from pose observations alone
=================================================

The filter carries friction as a state (mu = theta**2) next to the pose
and twist. Across a handful of scenarios, starting from theta0 = 0 and
seeing nothing but corrupted poses, it recovers the true coefficient;
the constant-zero prior it started from is shown for contrast.
"""

import numpy as np

from ekfphys.harness.config import ExperimentConfig
from ekfphys.harness.experiments import corrupt_sequence, filter_sequence, simulate_sequence

SEEDS = range(5)

config = ExperimentConfig()
print("  seed    mu_gt    mu_hat    |error|   |zero prior|")
errors, zeros = [], []
for seed in SEEDS:
    scenario, gt = simulate_sequence(config, seed)
    log = corrupt_sequence(config, gt)
    traj = filter_sequence(config, gt, log)
    mu_gt = scenario.objects[0].friction * scenario.background_friction
    mu_hat = traj.rows[-1].state.theta ** 2
    errors.append(abs(mu_hat - mu_gt))
    zeros.append(mu_gt)
    print(f"  {seed:4d}   {mu_gt:.4f}   {mu_hat:.4f}   {errors[-1]:.4f}   {zeros[-1]:.4f}")

print()
print(f"median |mu error|: filter {np.median(errors):.4f}, "
      f"constant-zero baseline {np.median(zeros):.4f}")
