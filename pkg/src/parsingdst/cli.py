"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 dialogue failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .backend import BackendConfig, make_backend
from .context import merge_context, state_to_context_json
from .errors import ParsingDSTError, PipelineError
from .evaluation import BenchmarkFailed, run_benchmark
from .ontology import load_ontology, validate_state
from .prompts import TOKEN_RE, build_prompt, load_domain_examples, load_templates
from .pipeline import PipelineDeps, run_dialogue
from .schema import EMPTY_SYSTEM, Speaker, parse_json_payload

EXIT_OK, EXIT_CONFIG, EXIT_DIALOGUE = 0, 1, 2

# fallbacks for options that may also come from --config
DEFAULTS = {
    "backend": "replay",
    "model": "gpt-3.5-turbo",
    "endpoint": "https://api.openai.com/v1/chat/completions",
    "max_retries": 3,
    "timeout": 60.0,
    "workers": 1,
    "max_in_flight": 4,
    "out": "out",
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_resources(p):
    p.add_argument("--config", help="JSON file of option defaults; flags override it")
    p.add_argument("--ontology", help="ontology config (default: bundled five-domain ontology)")
    p.add_argument("--templates", help="directory holding system_prompt.txt and user_prompt.txt")
    p.add_argument("--examples", help="per-domain all-slots example file")


def _add_backend(p):
    p.add_argument("--backend", choices=["remote", "replay"])
    p.add_argument("--fixtures", help="replay fixture file (NDJSON)")
    p.add_argument("--model")
    p.add_argument("--endpoint")
    p.add_argument("--cache", help="append remote completions here as replay fixtures")
    p.add_argument("--max-retries", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--max-in-flight", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="parsingdst", description="Zero-shot DST via text-to-JSON parsing.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ev = sub.add_parser("eval", help="run the per-domain benchmark on a MultiWOZ-format corpus")
    ev.add_argument("--corpus", required=True)
    ev.add_argument("--domain", default="all", help="domain name or 'all'")
    ev.add_argument("--out", help="output directory (default: out)")
    ev.add_argument("--no-filter", action="store_true", help="skip the System JSON filter")
    ev.add_argument("--no-framework", action="store_true", help="translate both utterances in one prompt")
    ev.add_argument("--workers", type=int)
    ev.add_argument("--skip-errors", action="store_true", help="score failed turns as empty states")
    _add_resources(ev)
    _add_backend(ev)

    ip = sub.add_parser("inspect-prompt", help="print a fully substituted prompt")
    ip.add_argument("--side", choices=["user", "system"], required=True)
    ip.add_argument("--domain", required=True, help="domain name, or several joined by commas")
    ip.add_argument("--state", default="{}", help="prior dialogue state as JSON")
    ip.add_argument("--system-json", help="filtered System JSON to merge into the user-side context")
    ip.add_argument("--utterance", required=True)
    _add_resources(ip)

    rd = sub.add_parser("run-dialogue", help="trace one dialogue turn by turn")
    rd.add_argument("--turns", required=True, help='JSON list of [system, user] pairs')
    rd.add_argument("--domain", required=True, help="domain name, or several joined by commas")
    rd.add_argument("--no-filter", action="store_true")
    rd.add_argument("--no-framework", action="store_true")
    _add_resources(rd)
    _add_backend(rd)
    return parser


def _apply_config(args):
    values = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            values = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON: {e}") from None
    for key, value in values.items():
        key = key.replace("-", "_")
        if getattr(args, key, None) in (None, False):
            setattr(args, key, value)
    for key, value in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)


def _resources(args):
    ontology = load_ontology(args.ontology)
    templates = load_templates(args.templates)
    examples = load_domain_examples(ontology, args.examples)
    return ontology, templates, examples


def _backend(args):
    if args.backend == "replay" and not args.fixtures:
        raise ConfigError("--fixtures is required with --backend replay")
    try:
        cfg = BackendConfig(kind=args.backend, model=args.model, endpoint=args.endpoint,
                            max_retries=args.max_retries, timeout=args.timeout,
                            fixture_path=args.fixtures, cache_path=args.cache,
                            max_in_flight=args.max_in_flight)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return make_backend(cfg)


def _domains(arg, ontology):
    names = list(ontology.domains) if arg == "all" else [d.strip() for d in arg.split(",") if d.strip()]
    unknown = [d for d in names if not ontology.has_domain(d)]
    if unknown or not names:
        raise ConfigError(f"unknown domain(s): {', '.join(unknown) or arg!r}")
    return names


def cmd_eval(args) -> int:
    ontology, templates, examples = _resources(args)
    domains = _domains(args.domain, ontology)
    backend = _backend(args)
    try:
        report = run_benchmark(args.corpus, domains, ontology=ontology, examples=examples, backend=backend,
                               templates=templates, use_filter=not args.no_filter,
                               use_framework=not args.no_framework, workers=args.workers,
                               skip_errors=args.skip_errors, out_dir=args.out)
    except BenchmarkFailed as e:
        print(e.report.format_table())
        for err in e.errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_DIALOGUE
    print(report.format_table())
    return EXIT_OK


def cmd_inspect_prompt(args) -> int:
    ontology, templates, examples = _resources(args)
    domains = _domains(args.domain, ontology)
    try:
        state = json.loads(args.state)
    except json.JSONDecodeError as e:
        raise ConfigError(f"--state is not valid JSON: {e}") from None
    if not isinstance(state, dict) or not all(isinstance(v, dict) for v in state.values()):
        raise ConfigError("--state must be an object of domain -> {slot: value}")
    validate_state(state, ontology)
    ctx = state_to_context_json(state, ontology)
    side = Speaker(args.side)
    if side is Speaker.USER:
        sys_json = EMPTY_SYSTEM
        if args.system_json:
            sys_json = parse_json_payload(args.system_json, Speaker.SYSTEM, ontology, domains=domains)
        ctx = merge_context(ctx, sys_json)
    prompt = build_prompt(side, domains, ctx, args.utterance, ontology, examples, templates)
    leftover = [t for t in TOKEN_RE.findall(prompt) if t != "END"]
    if leftover:
        print(f"error: unresolved tokens {leftover}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(prompt + "\n")
    return EXIT_OK


def _load_turns(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"turns file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8") or "null")
    except json.JSONDecodeError as e:
        raise ConfigError(f"turns file is not valid JSON: {e}") from None
    if not isinstance(doc, list) or not doc:
        raise ConfigError("turns file must hold a non-empty list of [system, user] pairs")
    turns = []
    for item in doc:
        if isinstance(item, dict):
            item = (item.get("system", ""), item.get("user", ""))
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ConfigError(f"bad turn entry: {item!r}")
        turns.append((item[0] or "", item[1] or ""))
    return turns


def cmd_run_dialogue(args) -> int:
    ontology, templates, examples = _resources(args)
    domains = _domains(args.domain, ontology)
    turns = _load_turns(args.turns)
    deps = PipelineDeps(ontology=ontology, examples=examples, backend=_backend(args), domains=tuple(domains),
                        templates=templates, use_filter=not args.no_filter, use_framework=not args.no_framework)
    try:
        run = run_dialogue(turns, deps, dialogue_id=Path(args.turns).stem)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    for rec in run.turns:
        print(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True))
    if run.error is not None:
        print(f"error: {run.error}", file=sys.stderr)
        return EXIT_DIALOGUE
    return EXIT_OK


COMMANDS = {"eval": cmd_eval, "inspect-prompt": cmd_inspect_prompt, "run-dialogue": cmd_run_dialogue}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_config(args)
        return COMMANDS[args.command](args)
    except PipelineError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIALOGUE
    except (ConfigError, ParsingDSTError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
