"""
Context-driven modality rules
=============================

Each task may point at a decision table.  Feed the tables a context
snapshot and see which modality every task gets.
"""

from sadp import ContextSnapshot, Quantity, resolve_rule_driven, simulate
from sadp.data import flight_booking

model = flight_booking()


def snapshot(power_kw, response_ms):
    return ContextSnapshot({"power": Quantity(power_kw, "kW"),
                            "response_time": Quantity(response_ms, "ms")})


# the power threshold is strict: 5 kW stays normal, 6 kW drops to low-power
for kw in (5, 6):
    assignment = resolve_rule_driven(model, snapshot(kw, 100))
    print(f"{kw} kW -> FlightSearch {assignment['FlightSearch'].value}")

# a slow system skips the optional rental car offer
assignment = resolve_rule_driven(model, snapshot(1, 1200))
print("1200 ms -> RentalCarBooking", assignment["RentalCarBooking"].value)

# simulate the resulting run
report = simulate(model, assignment)
print(f"energy {report.total_energy_j} J, response {report.response_time_ms} ms")
