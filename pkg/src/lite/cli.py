"""The ``lite`` command line tool.

Subcommands: check, blank, refresh, translate, compile, count,
enumerate, sign, serve.  Diagnostics go to standard error as
``path:line: severity code message``; exit status 1 signals errors.
"""
from __future__ import annotations

import argparse
import sys

from .assembler import (
    generate_blank_targets,
    load_project,
    refresh_blank_targets,
)
from .engine import NoMatch, OutputFailure, tokenize, translate
from .errors import LiteError
from .formalism import parse_rule_file, target_role
from .grammar import compile_grammar, count_language, emit_grammar, enumerate_language
from .sign import load_sign_lexicon, render_sigml, sign_translate


def _report(diags) -> bool:
    errors = False
    for d in diags:
        print(d, file=sys.stderr)
        errors = errors or d.severity == "error"
    return errors


def _load_or_die(manifest: str):
    project, diags = load_project(manifest)
    _report(diags)
    if project is None:
        sys.exit(1)
    return project


def cmd_check(args) -> int:
    project, diags = load_project(args.manifest)
    errors = _report(diags)
    if project is None or errors:
        return 1
    print(f"ok: {len(project.units.get('top', []))} top phrases, "
          f"{sum(len(v) for v in project.units.values())} units, "
          f"{sum(len(v) for v in project.lexemes.values())} lexical entries")
    return 0


def cmd_blank(args) -> int:
    project = _load_or_die(args.manifest)
    text = generate_blank_targets(project, args.lang)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_refresh(args) -> int:
    project = _load_or_die(args.manifest)
    paths = [project.manifest.resolve(p) for lang, p in project.manifest.target_files
             if lang == args.lang]
    if not paths:
        print(f"no target files for language {args.lang!r} in manifest", file=sys.stderr)
        return 1
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            existing, diags = parse_rule_file(fh.read(), target_role(args.lang), path)
        if _report(diags):
            return 1
        text = refresh_blank_targets(existing, project, args.lang)
        if args.in_place:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
            print(f"refreshed {path}", file=sys.stderr)
        else:
            sys.stdout.write(text)
    return 0


def cmd_translate(args) -> int:
    project = _load_or_die(args.manifest)
    langs = args.lang or list(project.target_languages)
    for raw in sys.stdin:
        raw = raw.strip()
        if not raw:
            continue
        try:
            result = translate(project, tokenize(raw), langs)
        except (NoMatch, LiteError):
            print("NOMATCH")
            continue
        columns = []
        if args.show_canonical:
            columns.append("key=" + _matched_key(project, raw))
        columns.append(result.paraphrase)
        for lang in langs:
            value = result.outputs[lang]
            text = f"<ERROR:{value.code}>" if isinstance(value, OutputFailure) else value
            columns.append(f"{lang}={text}")
        print("\t".join(columns))
    return 0


def _matched_key(project, raw: str) -> str:
    from .engine import match_source

    return match_source(project, tokenize(raw))[0].unit.canonical_key


def cmd_compile(args) -> int:
    project = _load_or_die(args.manifest)
    scope = set(args.scope.split(",")) if args.scope else None
    grammar = compile_grammar(project, scope)
    text = emit_grammar(grammar, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_count(args) -> int:
    project = _load_or_die(args.manifest)
    scope = set(args.scope.split(",")) if args.scope else None
    size = count_language(compile_grammar(project, scope))
    print(f"derivations: {size.count}")
    print(f"vocabulary: {size.vocabulary}")
    return 0


def cmd_enumerate(args) -> int:
    project = _load_or_die(args.manifest)
    for sentence in enumerate_language(compile_grammar(project), args.limit):
        print(sentence)
    return 0


def cmd_sign(args) -> int:
    project = _load_or_die(args.manifest)
    lexicon, diags = load_sign_lexicon(project, args.lang)
    if _report(diags):
        return 1
    first = True
    for raw in sys.stdin:
        raw = raw.strip()
        if not raw:
            continue
        if not first:
            print()
        first = False
        try:
            table = sign_translate(project, raw, args.lang)
        except LiteError as e:
            print(f"ERROR {e.code}: {e}", file=sys.stderr)
            continue
        if args.table:
            for stream, values in table.streams.items():
                print("\t".join([stream, *values]))
        else:
            sys.stdout.write(render_sigml(table, lexicon))
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    config = ServiceConfig(
        manifest_path=args.manifest,
        questionnaire_paths=tuple(args.questionnaire or ()),
        journal_path=args.journal,
        max_sessions=args.max_sessions,
        host=args.host,
        port=args.port,
    )
    try:
        serve(config)
    except LiteError as e:
        print(f"startup failed: {e}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lite", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="assemble and validate a project")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("blank", help="generate a blank target-language file")
    p.add_argument("manifest")
    p.add_argument("--lang", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_blank)

    p = sub.add_parser("refresh", help="update target files with new blanks")
    p.add_argument("manifest")
    p.add_argument("--lang", required=True)
    p.add_argument("--in-place", action="store_true")
    p.set_defaults(func=cmd_refresh)

    p = sub.add_parser("translate", help="translate utterances from standard input")
    p.add_argument("manifest")
    p.add_argument("--lang", action="append")
    p.add_argument("--show-canonical", action="store_true")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("compile", help="emit a recognition grammar")
    p.add_argument("manifest")
    p.add_argument("--format", choices=["lite-bnf", "srgs-xml"], default="lite-bnf")
    p.add_argument("--out")
    p.add_argument("--scope", help="comma-separated canonical keys")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("count", help="count the defined language analytically")
    p.add_argument("manifest")
    p.add_argument("--scope")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("enumerate", help="enumerate sentences of the defined language")
    p.add_argument("manifest")
    p.add_argument("--limit", type=int, required=True)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("sign", help="translate utterances to SiGML (or tables)")
    p.add_argument("manifest")
    p.add_argument("--lang", required=True)
    p.add_argument("--table", action="store_true")
    p.set_defaults(func=cmd_sign)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("manifest")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8099)
    p.add_argument("--questionnaire", action="append")
    p.add_argument("--journal")
    p.add_argument("--max-sessions", type=int, default=200)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    sys.exit(args.func(args))


if __name__ == "__main__":
    main()
