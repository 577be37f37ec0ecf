"""Prune a System JSON to the slots that matter for the user-side context."""
from __future__ import annotations

from .ontology import Ontology
from .schema import SystemJson
from .update import UpdateOutcome


def filter_system_json(sys: SystemJson, outcome: UpdateOutcome, ontology: Ontology) -> SystemJson:
    """Keep ``info`` slots that were updated or are entities; drop everything else.

    ``outcome`` must come from applying this same ``sys`` to the prior state.
    """
    info = {}
    for domain, slots in sys.info.items():
        kept = {}
        for slot, values in slots.items():
            sd = ontology.slot(domain, slot)
            if sd.is_entity or (domain, sd.canonical) in outcome.changed:
                kept[slot] = list(values)
        if kept:
            info[domain] = kept
    return SystemJson(not_available={}, info=info, ask_for={})
