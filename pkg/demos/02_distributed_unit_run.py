"""
A distributed run on unit-height demands
========================================

Generate a small instance, run the simulated distributed algorithm and
compare the result with the exact optimum.
"""

from fractions import Fraction

from channelflow.dist_sim import SimConfig, round_budget, run_unit
from channelflow.generate import GenConfig, generate
from channelflow.oracle import exact_optimum

# Ten processors, two tree networks, one demand each.
problem = generate(GenConfig(n=40, m=10, r=2, seed=3, profit_max=50))
result = run_unit(problem, SimConfig(seed=3, epsilon=Fraction(1, 10)))

# The first phase raises dual variables epoch by epoch; the second phase
# walks the raise stack backwards and keeps whatever still fits.
print("selected instances:", result.solution.selected)
print("profit:", result.solution.profit)

# Every dual constraint ends up at least (1 - eps)-satisfied.
print("achieved lambda:", result.lam, ">=", 1 - result.params.epsilon)

# The exact optimum puts the profit in context.
opt = exact_optimum(result.instances).profit
print("optimum:", opt, " ratio:", float(opt / result.solution.profit))

# Cost of the run in simulated rounds and steps.
stats = result.stats
print("rounds:", stats.rounds, " MIS calls:", stats.mis_calls, " messages:", stats.messages)
print("first-phase steps:", stats.first_phase_steps, " budget:", round(round_budget(result)))

# The first few lines of the raise trace.
for line in result.trace_lines()[:5]:
    print("  ", line)
