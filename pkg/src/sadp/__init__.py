"""Sustainability-aware design scoring and workflow enactment for microservice applications."""
from .engine import (
    AllIn,
    Assignment,
    ContextTimeline,
    EnactmentConfig,
    InfeasibleError,
    Optimized,
    OptimizationObjective,
    RuleDriven,
    SimulationReport,
    WorkflowFlag,
    WorkflowMode,
    objective_value,
    optimize_assignment,
    resolve_all_in,
    resolve_rule_driven,
    run_timeline,
    simulate,
)
from .ingest import (
    ParseError,
    WorkflowDocument,
    import_bpmn_subset,
    parse_tables,
    parse_timeline,
    parse_workflow_json,
    serialize_workflow,
)
from .model import (
    DEFAULT_CATALOG,
    ApplicationModel,
    AttributeCatalog,
    Edge,
    ExecutionProfile,
    Microservice,
    Modality,
    Relevance,
    build_application,
    topological_order,
    validate,
)
from .rules import (
    Condition,
    ContextSnapshot,
    DecisionTable,
    ModalityDecision,
    Quantity,
    Rule,
    evaluate_condition,
    evaluate_table,
    validate_table,
)
from .scoring import SadpScorecard, Step2Mode, scorecard

__version__ = "0.1.0"
