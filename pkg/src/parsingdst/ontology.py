"""Domains, slots and the surrogate/canonical slot-name map.

A dialogue state is a plain nested dict ``{domain: {canonical_slot: value}}``.
Functions in this package never mutate a state they are given; they return a
fresh one.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

from .errors import MissingFile, SchemaViolation, UnknownSlot

DialogueState = Dict[str, Dict[str, str]]

DELETE = "[Delete]"
DONTCARE = "dontcare"

_WS = re.compile(r"\s+")


def normalize_value(v: str) -> str:
    """Lower-case, trim and collapse whitespace; ``any`` becomes ``dontcare``."""
    if v == DELETE:
        return v
    v = _WS.sub(" ", str(v)).strip().lower()
    if v == "any":
        return DONTCARE
    return v


@dataclass(frozen=True)
class SlotDef:
    canonical: str
    surrogate: str
    is_entity: bool = False
    informational: bool = False
    keywords: Optional[Tuple[str, ...]] = None


@dataclass(frozen=True)
class Ontology:
    domains: Tuple[str, ...]
    slots: Dict[str, Tuple[SlotDef, ...]]
    _by_surrogate: Dict[str, Dict[str, SlotDef]] = field(init=False, repr=False, compare=False)
    _by_canonical: Dict[str, Dict[str, SlotDef]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.domains:
            raise SchemaViolation("ontology has no domains")
        by_sur, by_can = {}, {}
        for domain in self.domains:
            defs = self.slots.get(domain)
            if not defs:
                raise SchemaViolation(f"domain {domain!r} has no slots")
            by_sur[domain], by_can[domain] = {}, {}
            for sd in defs:
                if sd.surrogate in by_sur[domain]:
                    raise SchemaViolation(f"duplicate surrogate slot {domain}.{sd.surrogate}")
                if sd.canonical in by_can[domain]:
                    raise SchemaViolation(f"duplicate canonical slot {domain}.{sd.canonical}")
                if sd.is_entity and sd.informational:
                    raise SchemaViolation(f"slot {domain}.{sd.surrogate} cannot be both entity and informational")
                if sd.keywords is not None:
                    if not sd.keywords:
                        raise SchemaViolation(f"slot {domain}.{sd.surrogate} has an empty keyword list")
                    bad = [k for k in sd.keywords if normalize_value(k) != k]
                    if bad:
                        raise SchemaViolation(f"slot {domain}.{sd.surrogate} has unnormalized keywords {bad}")
                by_sur[domain][sd.surrogate] = sd
                by_can[domain][sd.canonical] = sd
        object.__setattr__(self, "_by_surrogate", by_sur)
        object.__setattr__(self, "_by_canonical", by_can)

    def has_domain(self, domain: str) -> bool:
        return domain in self._by_surrogate

    def slot(self, domain: str, surrogate: str) -> SlotDef:
        try:
            return self._by_surrogate[domain][surrogate]
        except KeyError:
            raise UnknownSlot(f"unknown slot {domain}.{surrogate}") from None

    def slot_by_canonical(self, domain: str, canonical: str) -> SlotDef:
        try:
            return self._by_canonical[domain][canonical]
        except KeyError:
            raise UnknownSlot(f"unknown slot {domain}.{canonical}") from None

    def has_slot(self, domain: str, surrogate: str) -> bool:
        return surrogate in self._by_surrogate.get(domain, ())

    def tracked_slots(self, domain: str) -> Tuple[str, ...]:
        """Canonical names of the slots that can appear in a dialogue state."""
        return tuple(sd.canonical for sd in self.slots[domain] if not sd.informational)

    def slot_order(self, domain: str) -> Dict[str, int]:
        return {sd.surrogate: i for i, sd in enumerate(self.slots[domain])}


def to_canonical(domain: str, surrogate: str, ontology: Ontology) -> str:
    return ontology.slot(domain, surrogate).canonical


def from_canonical(domain: str, canonical: str, ontology: Ontology) -> str:
    return ontology.slot_by_canonical(domain, canonical).surrogate


def ontology_from_dict(doc: dict) -> Ontology:
    if not isinstance(doc, dict) or not isinstance(doc.get("domains"), list):
        raise SchemaViolation("ontology document needs a 'domains' list")
    domains, slots = [], {}
    for i, d in enumerate(doc["domains"]):
        name = d.get("name") if isinstance(d, dict) else None
        if not name:
            raise SchemaViolation(f"domains[{i}] has no name")
        if name in slots:
            raise SchemaViolation(f"duplicate domain {name!r}")
        defs = []
        for j, s in enumerate(d.get("slots") or []):
            try:
                kw = s.get("keywords")
                defs.append(SlotDef(
                    canonical=s["canonical"],
                    surrogate=s["surrogate"],
                    is_entity=bool(s.get("is_entity", False)),
                    informational=bool(s.get("informational", False)),
                    keywords=tuple(kw) if kw is not None else None,
                ))
            except (KeyError, TypeError, AttributeError):
                raise SchemaViolation(f"{name}.slots[{j}] needs 'canonical' and 'surrogate'") from None
        domains.append(name)
        slots[name] = tuple(defs)
    return Ontology(domains=tuple(domains), slots=slots)


def load_ontology(path=None) -> Ontology:
    """Load an ontology config; with no path, the bundled five-domain default."""
    if path is None:
        text = resources.files("parsingdst").joinpath("data/ontology.json").read_text(encoding="utf-8")
    else:
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"ontology config not found: {path}")
        text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"ontology config is not valid JSON: {e}") from None
    return ontology_from_dict(doc)


def validate_state(state: DialogueState, ontology: Ontology) -> None:
    for domain, slots in state.items():
        for canonical, value in slots.items():
            sd = ontology.slot_by_canonical(domain, canonical)
            if sd.informational:
                raise SchemaViolation(f"informational slot {domain}.{canonical} in state")
            if value == "" or (value != DELETE and normalize_value(value) != value):
                raise SchemaViolation(f"unnormalized value {value!r} for {domain}.{canonical}")


def materialize(state: DialogueState) -> DialogueState:
    """Drop ``[Delete]``-marked slots and domains left empty."""
    out = {}
    for domain, slots in state.items():
        live = {k: v for k, v in slots.items() if v != DELETE}
        if live:
            out[domain] = live
    return out


def project(state: DialogueState, domains: Iterable[str]) -> DialogueState:
    keep = set(domains)
    return {d: dict(s) for d, s in state.items() if d in keep and s}


def copy_state(state: DialogueState) -> DialogueState:
    return {d: dict(s) for d, s in state.items()}
