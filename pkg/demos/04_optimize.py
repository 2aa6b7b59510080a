"""
Per-task optimization
=====================

Instead of one global mode, choose a modality for each task to minimize
a weighted cost of energy, response time and lost reward.
"""

from sadp import InfeasibleError, OptimizationObjective, objective_value, optimize_assignment
from sadp.data import flight_booking

model = flight_booking()

# energy only: optional services are dropped
objective = OptimizationObjective(weight_energy=1)
assignment, report = optimize_assignment(model, objective)
print({k: v.value for k, v in assignment.decisions.items()}, report.total_energy_j)

# valuing reward keeps the rental car upsell
objective = OptimizationObjective(weight_energy=1, weight_reward=10)
assignment, report = optimize_assignment(model, objective)
print({k: v.value for k, v in assignment.decisions.items()}, objective_value(objective, report))

# no assignment finishes within 1.5 s; the error names the violated bound
objective = OptimizationObjective(weight_energy=1, max_response_time_ms=1500)
try:
    optimize_assignment(model, objective)
except InfeasibleError as exc:
    print(exc)
