"""
Design coverage scores
======================

Load the bundled Flight Booking workflow and compute how much of the
sustainability metadata it expresses.
"""

from sadp import Step2Mode, scorecard
from sadp.data import flight_booking

# the model: five services in a chain, two of them optional
model = flight_booking()
for ms in model.microservices:
    print(f"{ms.id:<20} {ms.relevance.value:<12} variants={[m.value for m in ms.declared_variants]}")

# implicit mode reports whether any relevance is tagged at all
card = scorecard(model, Step2Mode.IMPLICIT)
print("implicit:", card.as_tuple())

# explicit mode counts the tagged services instead
print("explicit:", scorecard(model, Step2Mode.EXPLICIT).as_tuple())

# per-service coverage shows where the gaps are
for ms_id, cov in card.per_microservice_coverage.items():
    print(f"{ms_id:<20} annotated={cov.annotated_count} variants={cov.variant_count}")
