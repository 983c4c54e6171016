"""Greedy construction of a configuration with non-zero total current for KA k=2."""
from kclg.lattice import format_snapshot
from kclg.nongradient import construct_witness, current_sum, e_stretch, leftward_allowed

conf, rep = construct_witness(2, 2, N=16)
print(f"{rep.steps} greedy vacancy moves; current sum = {current_sum(conf, 2).tolist()}")
print(f"leftward-allowed edges: {leftward_allowed(conf, 2)}")
print(format_snapshot(conf, 2))
print("e1-stretch of a single vacancy, k=2:", e_stretch([(0, 0)], (1, 0), 2))
print("e1-stretch of a single vacancy, k=1 (window radius 5):", e_stretch([(0, 0)], (1, 0), 1, radius=5))
