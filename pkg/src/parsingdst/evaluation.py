"""MultiWOZ corpus loading, scoring, and the per-domain benchmark loop."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

from .errors import FormatError, KeyMismatch, MissingFile, ParsingDSTError
from .ontology import DONTCARE, DialogueState, Ontology, materialize, normalize_value, project
from .pipeline import DialogueRun, PipelineDeps, run_dialogue

logger = logging.getLogger(__name__)

TurnKey = Tuple[str, int]

_NO_VALUE = {"", "none", "not mentioned", "not given"}
_DONTCARE_LABELS = {"dont care", "don't care", "do n't care", "does not care", "dontcare"}
# MultiWOZ metadata "book" fields that are bookings, not constraints
_BOOK_SKIP = {"booked", "ticket"}


@dataclass(frozen=True)
class GoldTurn:
    dialogue_id: str
    turn_index: int
    gold_state: DialogueState
    utterances: Tuple[str, str]


@dataclass(frozen=True)
class CorpusDialogue:
    dialogue_id: str
    turns: Tuple[GoldTurn, ...]

    @property
    def utterances(self) -> List[Tuple[str, str]]:
        return [t.utterances for t in self.turns]


def clean_gold_value(v) -> Optional[str]:
    v = normalize_value(str(v))
    if v in _NO_VALUE:
        return None
    if v in _DONTCARE_LABELS:
        return DONTCARE
    return v


def _gold_state(metadata, domain, ontology, did) -> DialogueState:
    if not isinstance(metadata, dict):
        raise FormatError(f"{did}: system turn has no metadata")
    dom = metadata.get(domain) or {}
    tracked = set(ontology.tracked_slots(domain))
    slots = {}
    for key, value in (dom.get("semi") or {}).items():
        name = key.lower()
        if name in tracked and isinstance(value, str):
            v = clean_gold_value(value)
            if v is not None:
                slots[name] = v
    for key, value in (dom.get("book") or {}).items():
        name = f"book {key.lower()}"
        if key in _BOOK_SKIP or name not in tracked or not isinstance(value, str):
            continue
        v = clean_gold_value(value)
        if v is not None:
            slots[name] = v
    return {domain: slots} if slots else {}


def load_corpus(path, domain: str, ontology: Ontology) -> List[CorpusDialogue]:
    """Dialogues whose goal involves ``domain``, with gold states projected onto it.

    Expects the MultiWOZ ``data.json`` layout: dialogue id -> ``goal`` and a
    ``log`` alternating user and system turns, the system turn carrying the
    belief-state ``metadata`` after the preceding user turn.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"corpus not found: {path}")
    if not ontology.has_domain(domain):
        raise FormatError(f"domain {domain!r} is not in the ontology")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON ({e})") from None
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: expected an object keyed by dialogue id")

    out = []
    for did, dial in doc.items():
        if not isinstance(dial, dict) or not isinstance(dial.get("log"), list):
            raise FormatError(f"{did}: dialogue needs a 'log' list")
        goal = dial.get("goal") or {}
        if not goal.get(domain):
            continue
        log = dial["log"]
        if len(log) % 2:
            raise FormatError(f"{did}: log must alternate user/system turns")
        turns = []
        for t in range(len(log) // 2):
            usr, sysn = log[2 * t], log[2 * t + 1]
            prev_sys = log[2 * t - 1].get("text", "") if t else ""
            try:
                usr_text = usr["text"]
            except (KeyError, TypeError):
                raise FormatError(f"{did}: turn {t + 1} has no user text") from None
            gold = _gold_state(sysn.get("metadata"), domain, ontology, did)
            turns.append(GoldTurn(did, t + 1, gold, (prev_sys.strip(), usr_text.strip())))
        if turns:
            out.append(CorpusDialogue(did, tuple(turns)))
    return out


def _paired(preds, golds):
    p, g = dict(preds), dict(golds)
    if len(p) != len(preds) or len(g) != len(golds):
        raise KeyMismatch("duplicate turn keys")
    if p.keys() != g.keys():
        raise KeyMismatch(f"prediction/gold turn keys differ ({len(p.keys() ^ g.keys())} unmatched)")
    if not p:
        raise ValueError("no turns to score")
    return [(materialize(p[k]), materialize(g[k])) for k in g]


def joint_goal_accuracy(preds: Sequence[Tuple[Hashable, DialogueState]],
                        golds: Sequence[Tuple[Hashable, DialogueState]]) -> float:
    pairs = _paired(preds, golds)
    return sum(p == g for p, g in pairs) / len(pairs)


def slot_accuracy(preds, golds, ontology: Ontology, domains=None) -> float:
    """Fraction of (turn, tracked slot) cells where prediction equals gold; absent == absent."""
    pairs = _paired(preds, golds)
    cells = [(d, s) for d in (domains or ontology.domains) for s in ontology.tracked_slots(d)]
    correct = 0
    for p, g in pairs:
        correct += sum(p.get(d, {}).get(s) == g.get(d, {}).get(s) for d, s in cells)
    return correct / (len(pairs) * len(cells))


@dataclass
class MetricsReport:
    per_domain_jga: Dict[str, float] = field(default_factory=dict)
    per_domain_slot_accuracy: Dict[str, float] = field(default_factory=dict)
    avg_jga: float = 0.0
    slot_accuracy: float = 0.0
    turns: int = 0
    dialogues: int = 0
    errored_turns: int = 0
    skipped_domains: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def format_table(self) -> str:
        lines = [f"{'domain':<12}{'JGA':>10}{'slot acc':>10}"]
        for d, jga in self.per_domain_jga.items():
            lines.append(f"{d:<12}{100 * jga:>10.2f}{100 * self.per_domain_slot_accuracy[d]:>10.2f}")
        lines.append(f"{'AVG':<12}{100 * self.avg_jga:>10.2f}{100 * self.slot_accuracy:>10.2f}")
        lines.append(f"turns={self.turns} dialogues={self.dialogues} errored_turns={self.errored_turns}")
        return "\n".join(lines)


class BenchmarkFailed(ParsingDSTError):
    """Some dialogues failed and errors were not being skipped."""

    def __init__(self, report, errors):
        self.report = report
        self.errors = errors
        super().__init__(f"{len(errors)} dialogue(s) failed; first: {errors[0]}")


def _write_ndjson(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def run_benchmark(corpus_path, domains: Sequence[str], *, ontology: Ontology, examples, backend,
                  templates=None, use_filter: bool = True, use_framework: bool = True,
                  workers: int = 1, skip_errors: bool = False, out_dir=None) -> MetricsReport:
    """Score each domain independently and average the per-domain JGA.

    Turns the pipeline never reached (a failed turn and everything after it)
    are scored as empty-state predictions. Unless ``skip_errors`` is set, any
    failure raises :class:`BenchmarkFailed` after outputs are written.
    """
    report = MetricsReport()
    predictions, traces, errors = [], [], []

    for domain in domains:
        corpus = load_corpus(corpus_path, domain, ontology)
        if not corpus:
            logger.warning("no dialogues for domain %s; skipped", domain)
            report.skipped_domains.append(domain)
            continue
        deps = PipelineDeps(ontology=ontology, examples=examples, backend=backend, domains=(domain,),
                            templates=templates, use_filter=use_filter, use_framework=use_framework)

        def run_one(dial: CorpusDialogue) -> DialogueRun:
            return run_dialogue(dial.utterances, deps, dialogue_id=dial.dialogue_id)

        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            runs = list(pool.map(run_one, corpus))

        preds, golds = [], []
        for dial, run in zip(corpus, runs):
            if run.error is not None:
                errors.append(f"{domain}/{dial.dialogue_id}: {run.error}")
                report.errored_turns += len(dial.turns) - len(run.turns)
            for gold in dial.turns:
                key = (dial.dialogue_id, gold.turn_index)
                if gold.turn_index <= len(run.turns):
                    rec = run.turns[gold.turn_index - 1]
                    state = project(materialize(rec.final_state), [domain])
                    traces.append({"domain": domain, "dialogue_id": dial.dialogue_id, **rec.to_dict()})
                else:
                    state = {}
                preds.append((key, state))
                golds.append((key, gold.gold_state))
                predictions.append({"domain": domain, "dialogue_id": dial.dialogue_id,
                                    "turn": gold.turn_index, "state": state})
        report.per_domain_jga[domain] = joint_goal_accuracy(preds, golds)
        report.per_domain_slot_accuracy[domain] = slot_accuracy(preds, golds, ontology, [domain])
        report.turns += len(golds)
        report.dialogues += len(corpus)

    if report.per_domain_jga:
        n = len(report.per_domain_jga)
        report.avg_jga = sum(report.per_domain_jga.values()) / n
        report.slot_accuracy = sum(report.per_domain_slot_accuracy.values()) / n

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_ndjson(out / "predictions.ndjson", predictions)
        _write_ndjson(out / "trace.ndjson", traces)
        (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")

    if errors and not skip_errors:
        raise BenchmarkFailed(report, errors)
    return report
