"""
Importing a BPMN process
========================

The same workflow drawn as a restricted BPMN file, with annotations in
text notes and the decision tables in a JSON sidecar.
"""

from sadp import import_bpmn_subset, parse_tables, scorecard, serialize_workflow
from sadp.data import flight_booking, read_fixture

tables = parse_tables(read_fixture("flight_booking_tables.json"))
doc = import_bpmn_subset(read_fixture("flight_booking.bpmn"), tables)

# the imported model is identical to the hand-written JSON one
print("same model:", doc.application == flight_booking())
print("scores:", scorecard(doc.application).as_tuple())

# canonical JSON, ready for the command line tools
print(serialize_workflow(doc)[:400])
