"""Walkthrough: the gradient queue and the sparsity-boost operator.

A short queue of recent gradients supplies per-coordinate mean and
standard deviation. Each incoming gradient coordinate is rescaled by its
z-score against those statistics, clamped to [1/rho, rho]: components
that look like everything the queue has seen get shrunk, components that
stick out get amplified.

Run: python3 demos/01_queue_and_boost.py
"""

import numpy as np

from gradqueue import BoostConfig, GradQueue, delta_rho

rng = np.random.default_rng(0)

# fill a queue with similar 5-dimensional gradients
queue = GradQueue(capacity=5)
base = np.array([1.0, -0.5, 0.2, 0.0, 2.0])
for _ in range(5):
    queue.push(base + rng.normal(0, 0.05, 5))

stats = queue.stats()
print("queue mean :", np.round(stats.mean, 3))
print("queue std  :", np.round(stats.std, 3))

# a new gradient: four coordinates near the usual values, one far away
g = base + np.array([0.02, -0.03, 0.01, 1.5, 0.04])
cfg = BoostConfig(rho=3.0)
boosted = delta_rho(g, stats, cfg)

print("\nincoming   :", np.round(g, 3))
print("boosted    :", np.round(boosted, 3))
print("scale      :", np.round(boosted / g, 3))
print("\nThe rare coordinate (index 3) is amplified toward rho = 3;")
print("the repeating ones are dampened toward 1/rho.")

# the clamp makes rho = 1 an exact no-op
identity = delta_rho(g, stats, BoostConfig(rho=1.0))
print("\nrho = 1 is the identity:", np.array_equal(identity, g))

# effective length can shrink the statistics window without dropping data
queue.effective_length = 3
print("stats over last 3 entries only:", queue.stats().sample_count, "samples")
