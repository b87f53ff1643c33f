from .mock import DEFAULT_DELAY_TICKS, MockBackend, interpret_update_text, parse_request_text
from .planning import best_combo, enumerate_combos, materialize, revision_skeletons
from .remote import RemoteBackend
from .rules import Rule, RuleSet, RuleSetError, Verdict, validate_plan
from .service import DEFAULT_ROLE_PROMPT, Reasoner, build_prompt
from .types import (
    BackendUnavailable,
    CONSTRAINT_VOCABULARY,
    Constraint,
    LEG_MODES,
    Leg,
    MODE_EDGE_CLASS,
    NeedsClarification,
    NoFeasiblePlan,
    NoFeasibleRevision,
    PLAN_STATUSES,
    PROMPT_SCHEMA_VERSION,
    Plan,
    ReasonerContext,
    ReasoningError,
    ScheduleAdjustment,
    SchemaViolation,
    TaskSpec,
    Timeout,
    WALK_TIME_FACTOR,
    check_plan_structure,
)

__all__ = [
    "BackendUnavailable",
    "CONSTRAINT_VOCABULARY",
    "Constraint",
    "DEFAULT_DELAY_TICKS",
    "DEFAULT_ROLE_PROMPT",
    "LEG_MODES",
    "Leg",
    "MODE_EDGE_CLASS",
    "MockBackend",
    "NeedsClarification",
    "NoFeasiblePlan",
    "NoFeasibleRevision",
    "PLAN_STATUSES",
    "PROMPT_SCHEMA_VERSION",
    "Plan",
    "ReasonerContext",
    "Reasoner",
    "ReasoningError",
    "RemoteBackend",
    "Rule",
    "RuleSet",
    "RuleSetError",
    "ScheduleAdjustment",
    "SchemaViolation",
    "TaskSpec",
    "Timeout",
    "Verdict",
    "WALK_TIME_FACTOR",
    "best_combo",
    "build_prompt",
    "check_plan_structure",
    "enumerate_combos",
    "interpret_update_text",
    "materialize",
    "parse_request_text",
    "revision_skeletons",
    "validate_plan",
]
