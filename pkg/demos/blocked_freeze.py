"""A blocked 3Z^2 configuration never moves under the hard k=2 dynamics,
while the soft dynamics (eps > 0) slowly unblocks it."""
import numpy as np

from kclg import ModelParams, Torus, DensityProfile, construct_blocked, simulate

geom = Torus(2, 30)
conf = construct_blocked(geom, DensityProfile.constant(8 / 9, 2), np.random.default_rng(0))
print(f"density {conf.density:.4f}, vacancies {len(conf.empty_sites())}")

for eps in (0.0, 1e-3, 1e-2):
    _, stats = simulate(conf, ModelParams(2, 2, eps), 200.0, np.random.default_rng(1))
    print(f"eps={eps:<6} accepted exchanges in t=200: {stats.accepted}")
