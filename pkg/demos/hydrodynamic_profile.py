"""Averaged SSEP density profile against the heat equation under diffusive scaling."""
import numpy as np

from kclg import DensityProfile, ModelParams
from kclg.hydro import DiffusionTable, run_hydro_experiment

N = 64
prof = DensityProfile.from_function(lambda th: 0.5 + 0.2 * np.cos(2 * np.pi * th), N, 2, axis=0)
res = run_hydro_experiment(ModelParams(2, 1), N, prof, [0.0, 0.02, 0.05], 8, 16, 1, DiffusionTable.constant(1.0))
for t, emp, pde, l1 in zip(res.times, res.empirical, res.pde, res.l1):
    print(f"t={t:.2f}  L1={l1:.4f}  amplitude sim={np.ptp(emp) / 2:.3f} pde={np.ptp(pde) / 2:.3f}")
