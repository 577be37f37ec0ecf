"""JSON context representation fed to the translation prompts."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional

from .errors import AlreadyMerged
from .ontology import DELETE, DialogueState, Ontology
from .schema import SystemJson, UserJson


@dataclass(frozen=True)
class ContextJson:
    state_block: UserJson
    system_block: Optional[SystemJson] = None


def state_to_context_json(state: DialogueState, ontology: Ontology) -> ContextJson:
    """Render live state slots as a User JSON ``request``, in ontology order."""
    request = {}
    for domain in ontology.domains:
        slots = state.get(domain)
        if not slots:
            continue
        rendered = {
            sd.surrogate: [slots[sd.canonical]]
            for sd in ontology.slots[domain]
            if slots.get(sd.canonical) not in (None, DELETE)
        }
        if rendered:
            request[domain] = rendered
    return ContextJson(UserJson(reject={}, request=request))


def merge_context(ctx: ContextJson, sys: SystemJson) -> ContextJson:
    if ctx.system_block is not None:
        raise AlreadyMerged("context already carries a system block")
    return replace(ctx, system_block=sys)


def serialize_context(ctx: ContextJson) -> str:
    lines = [json.dumps(ctx.state_block.to_dict(), ensure_ascii=False)]
    if ctx.system_block is not None:
        lines.append(json.dumps(ctx.system_block.to_dict(), ensure_ascii=False))
    return "\n".join(lines)
