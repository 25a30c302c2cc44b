"""
Bandwidth heights and line networks
===================================

Demands with arbitrary heights are split into wide and narrow ones, each
side is solved on its own, and every network keeps the better side. Line
networks use length classes instead of a tree decomposition.
"""

from channelflow.dist_sim import SimConfig, run_overall_height, run_unit
from channelflow.generate import GenConfig, generate
from channelflow.model import HEIGHT, check_feasible
from channelflow.oracle import exact_optimum

problem = generate(GenConfig(n=30, m=10, r=2, seed=5, heights="mixed"))
over = run_overall_height(problem, SimConfig(seed=5))

# Which side each network kept, and the smallest narrow height seen.
print("choice per network:", over.choice)
print("h_min:", over.h_min)
print("feasible:", check_feasible(over.instances, over.solution, HEIGHT, problem).ok)
print("profit:", over.solution.profit, " optimum:", exact_optimum(over.instances, HEIGHT).profit)

# On a line, each instance gets three critical slots: start, middle and end.
line = generate(GenConfig(kind="line", n=30, m=8, r=2, seed=1, max_rho=5, window_slack=1))
res = run_unit(line, SimConfig(seed=1))
print("line: delta =", res.params.delta, " xi =", res.params.xi, " groups =", len(res.layered.groups))
print("line profit:", res.solution.profit, " optimum:", exact_optimum(res.instances).profit)
