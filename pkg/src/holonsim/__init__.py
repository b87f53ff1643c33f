"""Deterministic multimodal mobility simulator built as a holarchy of agents."""

from .federation import (
    ConversationRecord,
    CoordinationMetrics,
    Strategy,
    compute_metrics,
    conversation_conforms,
    make_strategy,
)
from .holons import Holon, HolonId, HolonRegistry, Message
from .kernel.world import Disruption, ResourceState, WorldState, make_disruption
from .logstore import LogStore, load_log
from .reasoning import Reasoner, RuleSet
from .runtime import Simulation, build_reasoner, run_comparison
from .scenario import (
    Scenario,
    SchemaError,
    bundled_scenario,
    load_scenario,
    load_scenario_file,
    resolve_scenario,
)
from .verify import match_sequence, verify_log

__version__ = "0.1.0"

__all__ = [
    "Simulation",
    "run_comparison",
    "build_reasoner",
    "Scenario",
    "SchemaError",
    "load_scenario",
    "load_scenario_file",
    "bundled_scenario",
    "resolve_scenario",
    "WorldState",
    "ResourceState",
    "Disruption",
    "make_disruption",
    "Holon",
    "HolonId",
    "HolonRegistry",
    "Message",
    "Reasoner",
    "RuleSet",
    "LogStore",
    "load_log",
    "Strategy",
    "make_strategy",
    "conversation_conforms",
    "ConversationRecord",
    "CoordinationMetrics",
    "compute_metrics",
    "verify_log",
    "match_sequence",
    "__version__",
]
