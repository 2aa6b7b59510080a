"""
Whole-workflow modalities
=========================

Apply one workflow modality to every task and compare energy, response
time and reward.
"""

from sadp import WorkflowMode, resolve_all_in, simulate
from sadp.data import flight_booking

model = flight_booking()

modes = [(), ("basic",), ("low-power",), ("high-performance",), ("basic", "low-power")]
for flags in modes:
    mode = WorkflowMode.of(*flags)
    report = simulate(model, resolve_all_in(model, mode))
    print(f"{str(mode):<22} energy {report.total_energy_j:>6g} J  "
          f"response {report.response_time_ms:>6g} ms  reward {report.total_reward:g}")

# tasks without a declared low-power variant run their baseline and are flagged
report = simulate(model, resolve_all_in(model, WorkflowMode.of("basic", "low-power")))
print("fallback:", [o.id for o in report.outcomes if o.fallback_used])
