"""Zero-shot dialogue state tracking by parsing utterances into JSON.

A language model translates each system and user utterance into a small JSON
document of interaction actions; explicit update rules then fold those
documents into the dialogue state.
"""
from .backend import BackendConfig, RemoteBackend, ReplayBackend, make_backend, translate
from .context import ContextJson, merge_context, serialize_context, state_to_context_json
from .errors import *  # noqa: F401,F403
from .evaluation import (
    MetricsReport,
    joint_goal_accuracy,
    load_corpus,
    run_benchmark,
    slot_accuracy,
)
from .filtering import filter_system_json
from .ontology import (
    DELETE,
    DialogueState,
    Ontology,
    SlotDef,
    from_canonical,
    load_ontology,
    materialize,
    normalize_value,
    to_canonical,
)
from .pipeline import DialogueRun, PipelineDeps, TurnRecord, run_dialogue, run_turn
from .prompts import DomainExample, PromptTemplate, build_prompt, load_domain_examples, load_templates
from .schema import EMPTY_SYSTEM, Speaker, SystemJson, UserJson, parse_json_payload
from .update import IgnoreReason, UpdateOutcome, apply_system_json, apply_user_json

__version__ = "0.1.0"
