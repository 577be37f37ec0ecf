"""Rule-based state updates from System JSON and User JSON.

System side: ``info`` slots are written when the slot is an entity or the
slot is already present in the state; ``ask_for`` and ``not_available`` are
never written. User side: ``reject`` marks the slot ``[Delete]``, then
``request`` writes every slot that carries a value.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Tuple

from .ontology import DELETE, DialogueState, Ontology, copy_state, normalize_value
from .schema import SystemJson, UserJson


class IgnoreReason(str, Enum):
    NON_ENTITY_NOT_IN_CONTEXT = "NonEntityNotInContext"
    ASK_FOR = "AskFor"
    NOT_AVAILABLE = "NotAvailable"
    EMPTY_VALUE = "EmptyValue"
    INFORMATIONAL = "Informational"


@dataclass(frozen=True)
class UpdateOutcome:
    state: DialogueState
    changed: FrozenSet[Tuple[str, str]] = frozenset()
    ignored: FrozenSet[Tuple[str, str, IgnoreReason]] = frozenset()
    warnings: Tuple[str, ...] = field(default=(), compare=False)


def _first_value(domain, slot, values, warnings) -> str:
    if len(values) > 1:
        warnings.append(f"{domain}.{slot}: {len(values)} values, kept {values[0]!r}")
    return normalize_value(values[0]) if values else ""


def _finish(before, after, touched, ignored, ontology, warnings) -> UpdateOutcome:
    changed = frozenset(k for k in touched if after.get(k[0], {}).get(k[1]) != before.get(k[0], {}).get(k[1]))
    # a slot both written and ignored (e.g. in info and ask_for) counts as written
    ignored = frozenset(
        (d, s, r) for d, s, r in ignored if (d, ontology.slot(d, s).canonical) not in changed
    )
    return UpdateOutcome(after, changed, ignored, tuple(warnings))


def apply_system_json(state: DialogueState, sys: SystemJson, ontology: Ontology) -> UpdateOutcome:
    new = copy_state(state)
    touched, ignored, warnings = set(), set(), []
    for domain, slots in sys.info.items():
        for slot, values in slots.items():
            sd = ontology.slot(domain, slot)
            in_context = sd.canonical in state.get(domain, {})
            value = _first_value(domain, slot, values, warnings)
            if sd.informational:
                ignored.add((domain, slot, IgnoreReason.INFORMATIONAL))
            elif not value:
                ignored.add((domain, slot, IgnoreReason.EMPTY_VALUE))
            elif sd.is_entity or in_context:
                new.setdefault(domain, {})[sd.canonical] = value
                touched.add((domain, sd.canonical))
            else:
                ignored.add((domain, slot, IgnoreReason.NON_ENTITY_NOT_IN_CONTEXT))
    for domain, slots in sys.ask_for.items():
        for slot in slots:
            ignored.add((domain, slot, IgnoreReason.ASK_FOR))
    for domain, slots in sys.not_available.items():
        for slot in slots:
            ignored.add((domain, slot, IgnoreReason.NOT_AVAILABLE))
    return _finish(state, new, touched, ignored, ontology, warnings)


def apply_user_json(state: DialogueState, usr: UserJson, ontology: Ontology) -> UpdateOutcome:
    new = copy_state(state)
    touched, ignored, warnings = set(), set(), []
    for domain, slots in usr.reject.items():
        for slot in slots:
            sd = ontology.slot(domain, slot)
            if sd.informational:
                ignored.add((domain, slot, IgnoreReason.INFORMATIONAL))
                continue
            new.setdefault(domain, {})[sd.canonical] = DELETE
            touched.add((domain, sd.canonical))
    for domain, slots in usr.request.items():
        for slot, values in slots.items():
            sd = ontology.slot(domain, slot)
            if sd.informational:
                ignored.add((domain, slot, IgnoreReason.INFORMATIONAL))
                continue
            value = _first_value(domain, slot, values, warnings)
            if not value:
                ignored.add((domain, slot, IgnoreReason.EMPTY_VALUE))
                continue
            new.setdefault(domain, {})[sd.canonical] = value
            touched.add((domain, sd.canonical))
    return _finish(state, new, touched, ignored, ontology, warnings)


def replay_updates(prev_state: DialogueState, sys: SystemJson, usr: UserJson,
                   ontology: Ontology) -> Tuple[DialogueState, DialogueState]:
    """Recompute (temp state, final state) for one turn from its stored JSONs."""
    temp = apply_system_json(prev_state, sys, ontology).state
    return temp, apply_user_json(temp, usr, ontology).state

