"""User/System JSON intermediate representations and the completion parser."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional

from .errors import MalformedPayload, WrongSide
from .ontology import Ontology

logger = logging.getLogger(__name__)

STOP_TOKEN = "[END]"

SlotValues = Dict[str, Dict[str, List[str]]]
SlotLists = Dict[str, List[str]]


class Speaker(str, Enum):
    USER = "user"
    SYSTEM = "system"


ACTIONS = {
    Speaker.USER: ("reject", "request"),
    Speaker.SYSTEM: ("not_available", "info", "ask_for"),
}
# action keys whose domain maps hold slot lists rather than slot -> values
_LIST_ACTIONS = {"reject", "ask_for"}
# spellings seen in the demonstration prompts
_ALIASES = {"not_avaliabile": "not_available", "not_avaliable": "not_available"}


@dataclass(frozen=True)
class UserJson:
    reject: SlotLists = field(default_factory=dict)
    request: SlotValues = field(default_factory=dict)

    side = Speaker.USER

    def to_dict(self) -> dict:
        return {"user": {"reject": self.reject, "request": self.request}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    def is_empty(self) -> bool:
        return not self.reject and not self.request


@dataclass(frozen=True)
class SystemJson:
    not_available: SlotValues = field(default_factory=dict)
    info: SlotValues = field(default_factory=dict)
    ask_for: SlotLists = field(default_factory=dict)

    side = Speaker.SYSTEM

    def to_dict(self) -> dict:
        return {"system": {"not_available": self.not_available, "info": self.info, "ask_for": self.ask_for}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    def is_empty(self) -> bool:
        return not self.not_available and not self.info and not self.ask_for


EMPTY_SYSTEM = SystemJson()


def extract_json_text(raw: str) -> str:
    """Cut at the stop token and return the brace-balanced object at the first ``{``.

    If the object never closes, one repair is attempted: the open string,
    arrays and objects are closed in order.
    """
    text = raw.split(STOP_TOKEN, 1)[0]
    start = text.find("{")
    if start < 0:
        raise MalformedPayload(f"no JSON object in completion: {raw[:80]!r}")
    stack = []
    in_str = escaped = False
    end = len(text)
    for i in range(start, len(text)):
        ch = text[i]
        if in_str:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_str = False
            continue
        if ch == '"':
            in_str = True
        elif ch == "{":
            stack.append("}")
        elif ch == "[":
            stack.append("]")
        elif ch in "}]":
            if not stack or stack[-1] != ch:
                end = i
                break
            stack.pop()
            if not stack:
                return text[start:i + 1]
    body = text[start:end]
    if in_str:
        body += '"'
    body = body.rstrip().rstrip(",")
    return body + "".join(reversed(stack))


def _hoist_misnested(block: dict, actions: Iterable[str]) -> dict:
    # the demonstration outputs nest later actions inside earlier ones; lift them out
    block = dict(block)
    for action in list(block):
        inner = block[action]
        if not isinstance(inner, dict):
            continue
        for key in [k for k in inner if _ALIASES.get(k, k) in actions and _ALIASES.get(k, k) != action]:
            moved = inner.pop(key)
            target = _ALIASES.get(key, key)
            if not block.get(target):
                block[target] = moved
    for alias, name in _ALIASES.items():
        if alias in block and not block.get(name):
            block[name] = block.pop(alias)
    return block


def _as_values(v) -> List[str]:
    if v is None:
        return []
    if isinstance(v, (list, tuple)):
        return [str(x) for x in v if x is not None and not isinstance(x, (dict, list))]
    if isinstance(v, dict):
        return []
    return [str(v)]


def _as_slots(v) -> List[str]:
    if isinstance(v, dict):
        v = list(v)
    elif isinstance(v, str):
        v = [v]
    elif not isinstance(v, (list, tuple)):
        return []
    out = []
    for s in v:
        if isinstance(s, str) and s not in out:
            out.append(s)
    return out


class _Cleaner:
    def __init__(self, ontology: Ontology, domains, warnings):
        self.ontology = ontology
        self.domains = set(domains) if domains is not None else set(ontology.domains)
        self.warnings = warnings

    def drop(self, action, domain, slot, why):
        msg = f"dropped {action} {domain}.{slot}: {why}"
        logger.debug(msg)
        self.warnings.append(msg)

    def known(self, domain) -> bool:
        return domain in self.domains and self.ontology.has_domain(domain)

    def domain_order(self):
        return [d for d in self.ontology.domains if d in self.domains]

    def slot_values(self, action, raw) -> SlotValues:
        if not isinstance(raw, dict):
            return {}
        kept = {}
        for domain, slots in raw.items():
            if not isinstance(slots, dict):
                self.drop(action, domain, None, "not a slot map")
                continue
            for slot, values in slots.items():
                if not self.known(domain):
                    self.drop(action, domain, slot, "unknown domain")
                elif not self.ontology.has_slot(domain, slot):
                    self.drop(action, domain, slot, "unknown slot")
                else:
                    kept.setdefault(domain, {})[slot] = _as_values(values)
        return {d: self._ordered(d, kept[d]) for d in self.domain_order() if d in kept}

    def slot_lists(self, action, raw) -> SlotLists:
        if not isinstance(raw, dict):
            return {}
        kept = {}
        for domain, slots in raw.items():
            for slot in _as_slots(slots):
                if not self.known(domain):
                    self.drop(action, domain, slot, "unknown domain")
                elif not self.ontology.has_slot(domain, slot):
                    self.drop(action, domain, slot, "unknown slot")
                else:
                    kept.setdefault(domain, []).append(slot)
        out = {}
        for d in self.domain_order():
            if d in kept:
                order = self.ontology.slot_order(d)
                out[d] = sorted(kept[d], key=order.__getitem__)
        return out

    def _ordered(self, domain, slots):
        order = self.ontology.slot_order(domain)
        return {s: slots[s] for s in sorted(slots, key=order.__getitem__)}


def parse_json_payload(raw: str, side, ontology: Ontology, domains=None,
                       warnings: Optional[list] = None):
    """Parse a backend completion into a :class:`UserJson` or :class:`SystemJson`.

    Domains outside ``domains`` (default: every ontology domain) and slots the
    ontology does not know are dropped; one message per dropped
    (domain, slot) pair is appended to ``warnings``.
    """
    side = Speaker(side)
    if warnings is None:
        warnings = []
    text = extract_json_text(raw)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedPayload(f"unparseable JSON ({e.msg}): {text[:80]!r}") from None
    if not isinstance(obj, dict):
        raise MalformedPayload("top-level JSON value is not an object")
    other = Speaker.SYSTEM if side is Speaker.USER else Speaker.USER
    if side.value not in obj:
        if other.value in obj:
            raise WrongSide(f"expected a {side.value!r} payload, got {other.value!r}")
        raise MalformedPayload(f"payload has no {side.value!r} key")
    block = obj[side.value]
    if not isinstance(block, dict):
        raise MalformedPayload(f"{side.value!r} value is not an object")
    block = _hoist_misnested(block, ACTIONS[side])
    clean = _Cleaner(ontology, domains, warnings)

    if side is Speaker.USER:
        return UserJson(
            reject=clean.slot_lists("reject", block.get("reject")),
            request=clean.slot_values("request", block.get("request")),
        )
    return SystemJson(
        not_available=clean.slot_values("not_available", block.get("not_available")),
        info=clean.slot_values("info", block.get("info")),
        ask_for=clean.slot_lists("ask_for", block.get("ask_for")),
    )
