"""Per-turn orchestration: system side, update, filter, user side, update.

One turn runs five steps:

1. render the prior state as context JSON and translate the system
   utterance into a System JSON;
2. apply the System JSON to the prior state, giving the temporary state;
3. filter the System JSON down to updated or entity slots;
4. merge the filtered System JSON into the context and translate the user
   utterance into a User JSON;
5. apply the User JSON to the temporary state.

With no system utterance (the first turn) steps 1-3 are skipped and the
System JSON is empty.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import List, Mapping, Optional, Sequence, Tuple

from .context import merge_context, serialize_context, state_to_context_json
from .errors import ParsingDSTError, PipelineError
from .filtering import filter_system_json
from .ontology import DialogueState, Ontology, copy_state
from .prompts import DomainExample, PromptTemplate, build_merged_prompt, build_prompt, load_templates
from .schema import EMPTY_SYSTEM, Speaker, SystemJson, UserJson, parse_json_payload
from .update import apply_system_json, apply_user_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineDeps:
    ontology: Ontology
    examples: Mapping[str, DomainExample]
    backend: object  # anything with translate(prompt) -> str
    domains: Tuple[str, ...]
    templates: Optional[Mapping[Speaker, PromptTemplate]] = None
    use_filter: bool = True
    use_framework: bool = True
    max_context_chars: Optional[int] = None

    def __post_init__(self):
        if self.templates is None:
            object.__setattr__(self, "templates", load_templates())
        object.__setattr__(self, "domains", tuple(self.domains))


@dataclass
class TurnRecord:
    turn_index: int
    system_utterance: str
    user_utterance: str
    input_state: DialogueState
    system_json: SystemJson
    user_json: UserJson
    temp_state: DialogueState
    final_state: DialogueState
    raw_payloads: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["system_json"] = self.system_json.to_dict()
        d["user_json"] = self.user_json.to_dict()
        return d


@dataclass
class DialogueRun:
    dialogue_id: str
    domain_scope: Tuple[str, ...]
    turns: List[TurnRecord] = field(default_factory=list)
    error: Optional[PipelineError] = None


def _translate_and_parse(prompt, side, deps, turn, step, raw, warnings):
    try:
        text = deps.backend.translate(prompt)
    except ParsingDSTError as e:
        raise PipelineError(turn, step, e) from e
    raw.append(text)
    try:
        return parse_json_payload(text, side, deps.ontology, domains=deps.domains, warnings=warnings)
    except ParsingDSTError as e:
        raise PipelineError(turn, step, e) from e


def _check_context(ctx, deps, warnings):
    if deps.max_context_chars is not None:
        n = len(serialize_context(ctx))
        if n > deps.max_context_chars:
            warnings.append(f"context is {n} chars, over the {deps.max_context_chars} limit")


def run_turn(prev_state: DialogueState, sys_utt: str, usr_utt: str, deps: PipelineDeps,
             turn_index: int = 1) -> TurnRecord:
    if not usr_utt:
        raise ValueError("user utterance must be non-empty")
    ont = deps.ontology
    raw, warnings = [], []
    ctx = state_to_context_json(prev_state, ont)

    if not deps.use_framework:
        # single merged prompt over both utterances; no system-side step
        _check_context(ctx, deps, warnings)
        prompt = build_merged_prompt(deps.domains, ctx, sys_utt, usr_utt, ont, deps.examples, deps.templates)
        usr = _translate_and_parse(prompt, Speaker.USER, deps, turn_index, 4, raw, warnings)
        outcome = apply_user_json(prev_state, usr, ont)
        warnings.extend(outcome.warnings)
        return TurnRecord(turn_index, sys_utt, usr_utt, copy_state(prev_state), EMPTY_SYSTEM, usr,
                          copy_state(prev_state), outcome.state, raw, warnings)

    if sys_utt:
        _check_context(ctx, deps, warnings)
        prompt = build_prompt(Speaker.SYSTEM, deps.domains, ctx, sys_utt, ont, deps.examples, deps.templates)
        sys_json = _translate_and_parse(prompt, Speaker.SYSTEM, deps, turn_index, 1, raw, warnings)
        sys_outcome = apply_system_json(prev_state, sys_json, ont)
        warnings.extend(sys_outcome.warnings)
        temp_state = sys_outcome.state
        kept = filter_system_json(sys_json, sys_outcome, ont) if deps.use_filter else sys_json
    else:
        sys_json = kept = EMPTY_SYSTEM
        temp_state = copy_state(prev_state)

    ctx = merge_context(ctx, kept)
    _check_context(ctx, deps, warnings)
    prompt = build_prompt(Speaker.USER, deps.domains, ctx, usr_utt, ont, deps.examples, deps.templates)
    usr = _translate_and_parse(prompt, Speaker.USER, deps, turn_index, 4, raw, warnings)
    usr_outcome = apply_user_json(temp_state, usr, ont)
    warnings.extend(usr_outcome.warnings)
    return TurnRecord(turn_index, sys_utt, usr_utt, copy_state(prev_state), sys_json, usr,
                      temp_state, usr_outcome.state, raw, warnings)


def run_dialogue(dialogue: Sequence[Tuple[str, str]], deps: PipelineDeps, dialogue_id: str = "") -> DialogueRun:
    """Thread the state through every turn; stop at the first failing turn.

    A failure is stored on the returned run rather than raised, so the
    completed turns stay available.
    """
    if not dialogue:
        raise ValueError("dialogue has no turns")
    if dialogue[0][0]:
        raise ValueError("the first turn must have an empty system utterance")
    run = DialogueRun(dialogue_id, deps.domains)
    state: DialogueState = {}
    for i, (sys_utt, usr_utt) in enumerate(dialogue, 1):
        try:
            rec = run_turn(state, sys_utt, usr_utt, deps, turn_index=i)
        except PipelineError as e:
            logger.warning("dialogue %s: %s", dialogue_id or "?", e)
            run.error = e
            break
        run.turns.append(rec)
        state = rec.final_state
    return run
