"""Prompt templates and special-token substitution.

Templates are plain text files with bracketed tokens:

    [DM]      domain list
    [EXM]     all-slots example per domain (user side only)
    [ST]      slot list per domain (prompt-facing slot names)
    [KW]      keyword choices, one line per slot: ``slot: a | b | c``
    [PREDIC]  serialized context JSON
    [DIALOG]  the utterance(s) to translate, with speaker tag
    [END]     stop token, left in place
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Sequence

from .context import ContextJson, serialize_context
from .errors import MissingExample, MissingFile, SchemaViolation, UnresolvedToken
from .ontology import Ontology
from .schema import STOP_TOKEN, Speaker, parse_json_payload

TOKEN_RE = re.compile(r"\[([A-Z]+)\]")

REQUIRED_TOKENS = {
    Speaker.SYSTEM: ("DM", "ST", "KW", "PREDIC", "DIALOG"),
    Speaker.USER: ("DM", "EXM", "ST", "KW", "PREDIC", "DIALOG"),
}
TEMPLATE_FILES = {Speaker.SYSTEM: "system_prompt.txt", Speaker.USER: "user_prompt.txt"}


@dataclass(frozen=True)
class PromptTemplate:
    side: Speaker
    body: str
    stop_token: str = STOP_TOKEN

    def __post_init__(self):
        found = TOKEN_RE.findall(self.body)
        for tok in REQUIRED_TOKENS[self.side]:
            if found.count(tok) != 1:
                raise SchemaViolation(f"{self.side.value} template must contain [{tok}] exactly once")
        extra = set(found) - set(REQUIRED_TOKENS[self.side]) - {self.stop_token[1:-1]}
        if extra:
            raise SchemaViolation(f"{self.side.value} template has unknown tokens {sorted(extra)}")


@dataclass(frozen=True)
class DomainExample:
    domain: str
    utterance: str
    json: str

    def render(self) -> str:
        return f'example:\ninput message:\nuser: "{self.utterance}"\noutput JSON:\n{self.json}\n{STOP_TOKEN}'


def _read_asset(name: str, directory=None) -> str:
    if directory is None:
        return resources.files("parsingdst").joinpath("data", name).read_text(encoding="utf-8")
    path = Path(directory) / name
    if not path.is_file():
        raise MissingFile(f"missing asset: {path}")
    return path.read_text(encoding="utf-8")


def load_templates(directory=None) -> Dict[Speaker, PromptTemplate]:
    return {
        side: PromptTemplate(side, _read_asset(fname, directory).rstrip())
        for side, fname in TEMPLATE_FILES.items()
    }


def load_domain_examples(ontology: Ontology, path=None) -> Dict[str, DomainExample]:
    """Load per-domain examples and check each covers every tracked slot."""
    if path is None:
        text = _read_asset("domain_examples.json")
    else:
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"domain examples not found: {path}")
        text = path.read_text(encoding="utf-8")
    doc = json.loads(text)
    out = {}
    for domain, entry in doc.items():
        ex = DomainExample(domain, entry["utterance"], entry["json"])
        dropped = []
        usr = parse_json_payload(ex.json, Speaker.USER, ontology, domains=[domain], warnings=dropped)
        covered = {ontology.slot(domain, s).canonical for s in usr.request.get(domain, {})}
        missing = set(ontology.tracked_slots(domain)) - covered
        if dropped or missing:
            raise SchemaViolation(f"example for {domain!r} misses slots {sorted(missing)} or has unknown ones {dropped}")
        out[domain] = ex
    return out


def render_domain_list(domains: Sequence[str]) -> str:
    return "domain list: " + ", ".join(domains)


def render_slot_list(domains: Sequence[str], ontology: Ontology) -> str:
    return "\n".join(
        f"slot list of {d}: " + ", ".join(sd.surrogate for sd in ontology.slots[d]) for d in domains
    )


def render_keywords(domains: Sequence[str], ontology: Ontology) -> str:
    lines = []
    for d in domains:
        for sd in ontology.slots[d]:
            if sd.keywords:
                lines.append(f"{sd.surrogate}: " + " | ".join(sd.keywords))
    return "\n".join(lines)


def render_dialog(side, utterance: str) -> str:
    return f'{Speaker(side).value}: "{utterance}"'


def substitute(template: PromptTemplate, values: Mapping[str, str]) -> str:
    """Replace every token in one pass; inserted text is never rescanned."""
    stop = template.stop_token[1:-1]

    def repl(m):
        tok = m.group(1)
        if tok == stop:
            return m.group(0)
        if tok not in values:
            raise UnresolvedToken(f"[{tok}] has no substitution")
        return values[tok]

    return TOKEN_RE.sub(repl, template.body)


def _common_values(domains, ctx, ontology):
    for d in domains:
        if d not in ontology.slots:
            raise SchemaViolation(f"domain {d!r} not in ontology")
    return {
        "DM": render_domain_list(domains),
        "ST": render_slot_list(domains, ontology),
        "KW": render_keywords(domains, ontology),
        "PREDIC": serialize_context(ctx),
    }


def _example_block(domains, examples):
    blocks = []
    for d in domains:
        if d not in examples:
            raise MissingExample(f"no all-slots example for domain {d!r}")
        blocks.append(examples[d].render())
    return "\n\n".join(blocks)


def build_prompt(side, domain_set: Iterable[str], ctx: ContextJson, utterance: str,
                 ontology: Ontology, examples: Mapping[str, DomainExample],
                 templates: Optional[Mapping[Speaker, PromptTemplate]] = None) -> str:
    side = Speaker(side)
    templates = templates or load_templates()
    domains = list(domain_set)
    values = _common_values(domains, ctx, ontology)
    values["DIALOG"] = render_dialog(side, utterance)
    if side is Speaker.USER:
        values["EXM"] = _example_block(domains, examples)
    return substitute(templates[side], values)


def build_merged_prompt(domain_set: Iterable[str], ctx: ContextJson, sys_utt: str, usr_utt: str,
                        ontology: Ontology, examples: Mapping[str, DomainExample],
                        templates: Optional[Mapping[Speaker, PromptTemplate]] = None) -> str:
    """User-side prompt carrying both utterances at once (the no-framework ablation)."""
    templates = templates or load_templates()
    domains = list(domain_set)
    values = _common_values(domains, ctx, ontology)
    values["EXM"] = _example_block(domains, examples)
    dialog = [render_dialog(Speaker.SYSTEM, sys_utt)] if sys_utt else []
    dialog.append(render_dialog(Speaker.USER, usr_utt))
    values["DIALOG"] = "\n".join(dialog)
    return substitute(templates[Speaker.USER], values)
