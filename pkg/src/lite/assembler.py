"""Project assembly: manifests, merging split rule files, blank targets.

Source-side and target-side fragments of the same rule are linked by the
canonical key -- the normalized text of the unit's canonical template
(single spaces, lowercased literals, ``$$var`` / ``?$$var`` markers).
Assembly merges fragments with equal keys, builds the category
dependency graph, and rejects projects whose grammar would be cyclic.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from typing import Iterator

from .formalism import (
    STREAM_NAMES,
    Diagnostic,
    LexFragment,
    Origin,
    Pattern,
    PatternSyntaxError,
    Role,
    RuleFile,
    SOURCE,
    Template,
    Token,
    UnitFragment,
    canonical_key_for_tokens,
    derive_template,
    has_errors,
    mandatory_variables,
    parse_rule_file,
    pattern_variables,
    target_role,
)

_ABSENT = object()


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

@dataclass
class ProjectManifest:
    """Parsed project manifest.

    The manifest is a line-oriented ``key: value`` file (``#`` comments).
    Repeatable keys accumulate.  Recognized keys:

        id: <name>                          optional, defaults to file stem
        source_language: <tag>              required
        target_languages: <tag> ...
        sign_languages: <tag> ...
        source_files: <path> ...
        target_files: <tag> <path> ...
        sign_files: <tag> <path> ...
        sign_lexicons: <tag> <kind> <path>  kind: manual|nonmanual|mouthing
        questionnaires: <path> ...

    Paths are relative to the manifest's directory.
    """

    id: str
    source_language: str
    target_languages: tuple[str, ...] = ()
    sign_languages: tuple[str, ...] = ()
    source_files: tuple[str, ...] = ()
    target_files: tuple[tuple[str, str], ...] = ()
    sign_files: tuple[tuple[str, str], ...] = ()
    sign_lexicons: tuple[tuple[str, str, str], ...] = ()
    questionnaire_files: tuple[str, ...] = ()
    base_dir: str = "."
    path: str = "<manifest>"

    def resolve(self, rel: str) -> str:
        return os.path.normpath(os.path.join(self.base_dir, rel))


_TAG_OK = re.compile(r"[A-Za-z][A-Za-z0-9_-]*$")


def parse_manifest(text: str, path: str = "<manifest>") -> tuple[ProjectManifest | None, list[Diagnostic]]:
    diags: list[Diagnostic] = []
    values: dict[str, list[tuple[int, str]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, rest = line.partition(":")
        if not sep:
            diags.append(Diagnostic("error", "BadManifestLine", f"expected 'key: value', got {line!r}", path, lineno))
            continue
        values.setdefault(key.strip(), []).append((lineno, rest.strip()))

    def err(lineno: int, code: str, message: str) -> None:
        diags.append(Diagnostic("error", code, message, path, lineno))

    known = {
        "id", "source_language", "target_languages", "sign_languages",
        "source_files", "target_files", "sign_files", "sign_lexicons",
        "questionnaires",
    }
    for key, entries in values.items():
        if key not in known:
            diags.append(Diagnostic("warning", "UnknownManifestKey", f"ignoring key {key!r}", path, entries[0][0]))

    if "source_language" not in values:
        err(1, "MissingSourceLanguage", "manifest must name a source_language")
        return None, diags
    source_language = values["source_language"][-1][1]

    def tags(key: str) -> tuple[str, ...]:
        out: list[str] = []
        for lineno, v in values.get(key, []):
            for t in v.replace(",", " ").split():
                if not _TAG_OK.match(t):
                    err(lineno, "BadLanguageTag", f"bad language tag {t!r}")
                else:
                    out.append(t)
        return tuple(dict.fromkeys(out))

    def paths(key: str) -> tuple[str, ...]:
        out: list[str] = []
        for _, v in values.get(key, []):
            out.extend(v.split())
        return tuple(out)

    def tagged_paths(key: str) -> tuple[tuple[str, str], ...]:
        out: list[tuple[str, str]] = []
        for lineno, v in values.get(key, []):
            parts = v.split()
            if len(parts) < 2:
                err(lineno, "BadManifestLine", f"{key} expects '<tag> <path>...', got {v!r}")
                continue
            for p in parts[1:]:
                out.append((parts[0], p))
        return tuple(out)

    lexicons: list[tuple[str, str, str]] = []
    for lineno, v in values.get("sign_lexicons", []):
        parts = v.split()
        if len(parts) != 3 or parts[1] not in ("manual", "nonmanual", "mouthing"):
            err(lineno, "BadManifestLine", f"sign_lexicons expects '<tag> manual|nonmanual|mouthing <path>', got {v!r}")
            continue
        lexicons.append((parts[0], parts[1], parts[2]))

    manifest = ProjectManifest(
        id=values.get("id", [(0, os.path.splitext(os.path.basename(path))[0])])[-1][1],
        source_language=source_language,
        target_languages=tags("target_languages"),
        sign_languages=tags("sign_languages"),
        source_files=paths("source_files"),
        target_files=tagged_paths("target_files"),
        sign_files=tagged_paths("sign_files"),
        sign_lexicons=tuple(lexicons),
        questionnaire_files=paths("questionnaires"),
        base_dir=os.path.dirname(os.path.abspath(path)) if path != "<manifest>" else ".",
        path=path,
    )

    if manifest.source_language in manifest.target_languages:
        err(1, "SourceIsTarget", f"source language {manifest.source_language!r} also listed as target")
    all_paths = [*manifest.source_files, *(p for _, p in manifest.sign_files),
                 *(p for _, p in manifest.target_files)]
    dupes = {p for p in all_paths if all_paths.count(p) > 1}
    for p in sorted(dupes):
        err(1, "DuplicatePath", f"file {p!r} listed more than once")
    return (None, diags) if has_errors(diags) else (manifest, diags)


# ---------------------------------------------------------------------------
# Assembled rules
# ---------------------------------------------------------------------------

@dataclass
class TrPhraseUnit:
    category: str
    source_lines: tuple[Pattern, ...]
    canonical: Template
    canonical_key: str
    targets: dict[str, Template | None]
    sign_streams: dict[str, dict[str, Template]]
    origin: Origin = field(compare=False)
    declaration_index: int = 0
    canonical_derived: bool = False


@dataclass
class TrLexEntry:
    category: str
    source_pattern: Pattern | None
    canonical: tuple[Token, ...]
    canonical_key: str
    targets: dict[str, tuple[Token, ...] | None]
    sign_streams: dict[str, dict[str, tuple[str, ...]]]
    origin: Origin = field(compare=False)
    declaration_index: int = 0
    canonical_derived: bool = False


@dataclass
class AssembledProject:
    manifest: ProjectManifest
    units: dict[str, list[TrPhraseUnit]]
    lexemes: dict[str, list[TrLexEntry]]
    target_index: dict[tuple[str, str], object]
    variable_graph: dict[str, frozenset[str]]
    sign_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def source_language(self) -> str:
        return self.manifest.source_language

    @property
    def target_languages(self) -> tuple[str, ...]:
        return self.manifest.target_languages

    def categories(self) -> set[str]:
        return set(self.units) | set(self.lexemes)

    def declarations(self) -> list[TrPhraseUnit | TrLexEntry]:
        """All units and lexemes in source declaration order."""
        items: list[TrPhraseUnit | TrLexEntry] = []
        for members in self.units.values():
            items.extend(members)
        for members in self.lexemes.values():
            items.extend(members)
        return sorted(items, key=lambda x: x.declaration_index)

    def top_units(self) -> list[TrPhraseUnit]:
        return self.units.get("top", [])


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def assemble(manifest: ProjectManifest, files: list[RuleFile]) -> tuple[AssembledProject | None, list[Diagnostic]]:
    """Merge parsed rule files into one validated project.

    Fragments carrying Source lines define rules; fragments without them
    attach translations to existing rules via the canonical key.  Fatal
    problems (cycles, unknown variables, duplicate canonicals, missing
    canonicals) yield a None project.
    """
    diags: list[Diagnostic] = []
    units: dict[str, list[TrPhraseUnit]] = {}
    lexemes: dict[str, list[TrLexEntry]] = {}
    unit_by_key: dict[tuple[str, str], TrPhraseUnit] = {}
    lex_by_key: dict[tuple[str, str], TrLexEntry] = {}
    target_index: dict[tuple[str, str], object] = {}
    src = manifest.source_language
    sign_lang_of = {manifest.resolve(p): lang for lang, p in manifest.sign_files}
    sign_lang_of.update({p: lang for lang, p in manifest.sign_files})
    decl = 0

    def warn(origin: Origin, code: str, message: str) -> None:
        diags.append(Diagnostic("warning", code, message, origin.path, origin.line_start))

    def err(origin: Origin, code: str, message: str) -> None:
        diags.append(Diagnostic("error", code, message, origin.path, origin.line_start))

    def register_target(key: str, lang: str, value: object) -> None:
        if value is None:
            return
        existing = target_index.get((key, lang), _ABSENT)
        if existing is _ABSENT:
            target_index[(key, lang)] = value

    for rf in files:
        file_sign_lang = sign_lang_of.get(rf.path)
        if file_sign_lang is None and len(manifest.sign_languages) == 1:
            file_sign_lang = manifest.sign_languages[0]
        spoken_target_file = (rf.role.kind == "target"
                              and rf.role.language in manifest.target_languages)
        fragments = sorted([*rf.units, *rf.lexemes], key=lambda f: f.declaration_index)
        for frag in fragments:
            if isinstance(frag, UnitFragment):
                decl = _assemble_unit(frag, rf, file_sign_lang, src, units, unit_by_key,
                                      register_target, warn, err, decl)
            else:
                decl = _assemble_lexeme(frag, spoken_target_file, file_sign_lang, src,
                                        lexemes, lex_by_key, register_target, warn, err, decl)

    graph = _variable_graph(units)
    defined = set(units) | set(lexemes)
    for cat, refs in sorted(graph.items()):
        for ref in sorted(refs - defined):
            unit = units[cat][0]
            err(unit.origin, "UnknownVariable", f"$${ref} referenced from $${cat} is not defined")
    for cycle in _find_cycles(graph):
        first = units[cycle[0]][0]
        err(first.origin, "CyclicVariable", "cycle: " + " -> ".join(f"$${c}" for c in cycle + (cycle[0],)))
    if not units.get("top"):
        diags.append(Diagnostic("error", "MissingTop", "project defines no $$top phrases", manifest.path, 1))

    if has_errors(diags):
        return None, diags
    project = AssembledProject(manifest, units, lexemes, target_index,
                               {c: frozenset(r) for c, r in graph.items()})
    return project, diags


def _split_targets(frag_targets: dict, file_sign_lang: str | None, warn, origin):
    spoken: dict[str, object] = {}
    streams: dict[str, object] = {}
    for tag, value in frag_targets.items():
        if tag in STREAM_NAMES:
            if file_sign_lang is None:
                warn(origin, "UnassignedStream", f"Target/{tag} in a file with no sign language; ignored")
            else:
                streams[tag] = value
        else:
            spoken[tag] = value
    return spoken, streams


def _assemble_unit(frag: UnitFragment, rf: RuleFile, file_sign_lang: str | None, src: str,
                   units, unit_by_key, register_target, warn, err, decl: int) -> int:
    spoken, streams = _split_targets(frag.targets, file_sign_lang, warn, frag.origin)
    for stream, value in list(streams.items()):
        if value is None:
            warn(frag.origin, "UnassignedStream", f"Target/{stream} placeholder ignored")
            del streams[stream]

    if frag.source_lines:
        tmpl = spoken.pop(src, _ABSENT)
        derived = False
        if tmpl is _ABSENT:
            try:
                tmpl = derive_template(frag.source_lines[0])
            except PatternSyntaxError as e:
                err(frag.origin, e.code, f"cannot derive canonical: {e.message}")
                return decl
            warn(frag.origin, "DerivedCanonical",
                 f"no Target/{src} line; canonical derived from first Source line")
            derived = True
        elif tmpl is None:
            err(frag.origin, "MissingCanonical", f"Target/{src} is an unfilled placeholder")
            return decl
        key = (frag.category, tmpl.key())
        if key in unit_by_key:
            err(frag.origin, "DuplicateCanonical",
                f"$${frag.category} already defines canonical '{key[1]}'")
            return decl
        unit = TrPhraseUnit(frag.category, tuple(frag.source_lines), tmpl, tmpl.key(),
                            dict(spoken), {file_sign_lang: dict(streams)} if streams else {},
                            frag.origin, decl, derived)
        units.setdefault(frag.category, []).append(unit)
        unit_by_key[key] = unit
        for lang, value in spoken.items():
            register_target(unit.canonical_key, lang, value)
        return decl + 1

    # Target-side fragment: link by canonical key.
    tmpl = spoken.pop(src, _ABSENT)
    if tmpl is _ABSENT or tmpl is None:
        err(frag.origin, "MissingCanonical", f"target fragment lacks a Target/{src} line")
        return decl
    key = tmpl.key()
    unit = unit_by_key.get((frag.category, key))
    if unit is None:
        warn(frag.origin, "OrphanTarget", f"no source rule has canonical '{key}'")
        for lang, value in spoken.items():
            register_target(key, lang, value)
        return decl
    for lang, value in spoken.items():
        _merge_target(unit.targets, lang, value, frag.origin, warn, err)
        register_target(unit.canonical_key, lang, unit.targets.get(lang))
    if streams and file_sign_lang is not None:
        merged = unit.sign_streams.setdefault(file_sign_lang, {})
        for stream, value in streams.items():
            if stream in merged and merged[stream] != value:
                err(frag.origin, "ConflictingTarget", f"stream {stream} already defined for '{key}'")
            else:
                merged[stream] = value
    return decl


def _assemble_lexeme(frag: LexFragment, spoken_target_file: bool, file_sign_lang: str | None,
                     src: str, lexemes, lex_by_key, register_target, warn, err, decl: int) -> int:
    values = dict(frag.values)
    streams: dict[str, tuple[str, ...]] = {}
    for tag in list(values):
        if tag in STREAM_NAMES:
            v = values.pop(tag)
            if v is not None:
                streams[tag] = tuple(t.display for t in v)
            if file_sign_lang is None:
                warn(frag.origin, "UnassignedStream", f"{tag}= in a file with no sign language; ignored")
                streams.pop(tag, None)

    source_pattern = frag.source_pattern
    canonical = values.pop(src, _ABSENT)
    # Blank files historically spell the canonical as source="..."; accept
    # that in spoken-target files, where a real source pattern is meaningless.
    if spoken_target_file and source_pattern is not None and canonical is _ABSENT:
        flat = _flatten_literals(source_pattern)
        if flat is not None:
            canonical = flat
            source_pattern = None

    if source_pattern is not None:
        derived = False
        if canonical is _ABSENT:
            flat = _flatten_literals(source_pattern, first_alternative=True)
            if not flat:
                err(frag.origin, "MissingCanonical", "cannot derive a canonical for this TrLex")
                return decl
            canonical = flat
            warn(frag.origin, "DerivedCanonical", f"no {src}= value; canonical derived from source pattern")
            derived = True
        elif canonical is None:
            err(frag.origin, "MissingCanonical", f"{src}= is an unfilled placeholder")
            return decl
        key = (frag.category, canonical_key_for_tokens(canonical))
        if key in lex_by_key:
            err(frag.origin, "DuplicateCanonical",
                f"$${frag.category} already defines lexical canonical '{key[1]}'")
            return decl
        entry = TrLexEntry(frag.category, source_pattern, canonical, key[1], dict(values),
                           {file_sign_lang: streams} if streams else {}, frag.origin, decl, derived)
        lexemes.setdefault(frag.category, []).append(entry)
        lex_by_key[key] = entry
        for lang, value in values.items():
            register_target(entry.canonical_key, lang, value)
        return decl + 1

    if canonical is _ABSENT or canonical is None:
        err(frag.origin, "MissingCanonical", f"target TrLex lacks an {src}= value")
        return decl
    key = (frag.category, canonical_key_for_tokens(canonical))
    entry = lex_by_key.get(key)
    if entry is None:
        warn(frag.origin, "OrphanTarget", f"no source TrLex has canonical '{key[1]}'")
        for lang, value in values.items():
            register_target(key[1], lang, value)
        return decl
    for lang, value in values.items():
        _merge_target(entry.targets, lang, value, frag.origin, warn, err)
        register_target(entry.canonical_key, lang, entry.targets.get(lang))
    if streams and file_sign_lang is not None:
        merged = entry.sign_streams.setdefault(file_sign_lang, {})
        for stream, value in streams.items():
            if stream in merged and merged[stream] != value:
                err(frag.origin, "ConflictingTarget", f"stream {stream} already defined for '{key[1]}'")
            else:
                merged[stream] = value
    return decl


def _merge_target(targets: dict, lang: str, value, origin: Origin, warn, err) -> None:
    existing = targets.get(lang, _ABSENT)
    if existing is _ABSENT or existing is None:
        targets[lang] = value
    elif value is None:
        pass  # placeholder never overwrites a filled translation
    elif value == existing:
        warn(origin, "DuplicateTarget", f"identical {lang} translation given twice")
    else:
        err(origin, "ConflictingTarget", f"conflicting {lang} translations for the same canonical")


def _flatten_literals(pattern: Pattern, first_alternative: bool = False) -> tuple[Token, ...] | None:
    """Token list for a pattern without structure; with
    ``first_alternative`` groups collapse to their first branch and
    optionals are dropped (used to derive lexical canonicals)."""
    out: list[Token] = []
    from .formalism import Group, Literal, Opt

    def walk(elements) -> bool:
        for el in elements:
            if isinstance(el, Literal):
                out.append(el.token)
            elif isinstance(el, Group) and first_alternative:
                if not walk(el.alternatives[0]):
                    return False
            elif isinstance(el, Opt) and first_alternative:
                continue
            else:
                return False
        return True

    return tuple(out) if walk(pattern.elements) else None


def _variable_graph(units: dict[str, list[TrPhraseUnit]]) -> dict[str, set[str]]:
    graph: dict[str, set[str]] = {}
    for cat, members in units.items():
        refs = graph.setdefault(cat, set())
        for unit in members:
            for line in unit.source_lines:
                refs |= pattern_variables(line.elements)
    return graph


def _find_cycles(graph: dict[str, set[str]]) -> list[tuple[str, ...]]:
    cycles: list[tuple[str, ...]] = []
    color: dict[str, int] = {}
    stack: list[str] = []

    def visit(node: str) -> None:
        color[node] = 1
        stack.append(node)
        for nxt in sorted(graph.get(node, ())):
            if color.get(nxt, 0) == 1:
                cycles.append(tuple(stack[stack.index(nxt):]))
            elif color.get(nxt, 0) == 0 and nxt in graph:
                visit(nxt)
        stack.pop()
        color[node] = 2

    for node in sorted(graph):
        if color.get(node, 0) == 0:
            visit(node)
    return cycles


# ---------------------------------------------------------------------------
# Blank target files
# ---------------------------------------------------------------------------

def generate_blank_targets(project: AssembledProject, lang: str) -> str:
    """A fresh target file for ``lang``: every canonical filled in, every
    translation a ``?`` placeholder, in source declaration order."""
    from .formalism import serialize_rule_file

    src = project.source_language
    rf = RuleFile(target_role(lang), "<blank>", [], [])
    for item in project.declarations():
        if isinstance(item, TrPhraseUnit):
            rf.units.append(UnitFragment(item.category, [], {src: item.canonical, lang: None},
                                         item.origin, item.declaration_index))
        else:
            rf.lexemes.append(LexFragment(item.category, None, {src: item.canonical, lang: None},
                                          item.origin, item.declaration_index))
    return serialize_rule_file(rf, canonical_language=src)


def refresh_blank_targets(existing: RuleFile, project: AssembledProject, lang: str) -> str:
    """Update a translator's file against the current source rules.

    Filled translations are kept; canonicals that vanished from the
    source are kept too but flagged with a ``# ORPHAN`` comment; new
    canonicals are appended as blanks.
    """
    from .formalism import _serialize_fragment  # canonical block formatting

    src = project.source_language
    unit_keys = {(u.category, u.canonical_key) for members in project.units.values() for u in members}
    lex_keys = {(e.category, e.canonical_key) for members in project.lexemes.values() for e in members}
    seen_units: set[tuple[str, str]] = set()
    seen_lex: set[tuple[str, str]] = set()
    blocks: list[str] = []

    for frag in sorted([*existing.units, *existing.lexemes], key=lambda f: f.declaration_index):
        if isinstance(frag, UnitFragment):
            tmpl = frag.targets.get(src)
            key = (frag.category, tmpl.key()) if tmpl is not None else None
            orphan = key is None or key not in unit_keys
            if key is not None:
                seen_units.add(key)
        else:
            tokens = frag.values.get(src)
            key = (frag.category, canonical_key_for_tokens(tokens)) if tokens else None
            orphan = key is None or key not in lex_keys
            if key is not None:
                seen_lex.add(key)
        text = _serialize_fragment(frag, src)
        blocks.append(("# ORPHAN\n" + text) if orphan else text)

    for item in project.declarations():
        if isinstance(item, TrPhraseUnit):
            if (item.category, item.canonical_key) in seen_units:
                continue
            frag = UnitFragment(item.category, [], {src: item.canonical, lang: None},
                                item.origin, item.declaration_index)
        else:
            if (item.category, item.canonical_key) in seen_lex:
                continue
            frag = LexFragment(item.category, None, {src: item.canonical, lang: None},
                               item.origin, item.declaration_index)
        blocks.append(_serialize_fragment(frag, src))

    return "\n\n".join(blocks) + "\n"


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(project: AssembledProject) -> list[Diagnostic]:
    """Deployment-gate checks: coverage, reachability, nullable top rules."""
    diags: list[Diagnostic] = []

    def warn(origin: Origin, code: str, message: str) -> None:
        diags.append(Diagnostic("warning", code, message, origin.path, origin.line_start))

    def err(origin: Origin, code: str, message: str) -> None:
        diags.append(Diagnostic("error", code, message, origin.path, origin.line_start))

    for item in project.declarations():
        if not isinstance(item, TrPhraseUnit):
            continue
        source_vars: set[str] = set()
        for line in item.source_lines:
            source_vars |= pattern_variables(line.elements)
        template_vars = set(item.canonical.variables())
        for tmpl in item.targets.values():
            if tmpl is not None:
                template_vars |= set(tmpl.variables())
        for name in sorted(template_vars - source_vars):
            err(item.origin, "UncoveredVariable",
                f"$${name} used in a template but never matched by a Source line")
        for name in sorted(item.canonical.mandatory()):
            for i, line in enumerate(item.source_lines):
                if name not in mandatory_variables(line.elements):
                    err(item.origin, "MandatoryCoverage",
                        f"$${name} is mandatory in the canonical but optional or absent "
                        f"in Source line {i + 1}")

    for lang in project.manifest.target_languages:
        for item in project.declarations():
            if item.targets.get(lang) is None:  # absent or placeholder
                warn(item.origin, "MissingTarget",
                     f"no {lang} translation for '{item.canonical_key}'")

    reachable = {"top"}
    frontier = ["top"]
    while frontier:
        cat = frontier.pop()
        for nxt in project.variable_graph.get(cat, ()):
            if nxt not in reachable:
                reachable.add(nxt)
                frontier.append(nxt)
    for cat in sorted(project.categories() - reachable):
        origin = (project.units.get(cat) or project.lexemes.get(cat))[0].origin
        warn(origin, "UnreachableCategory", f"$${cat} is never referenced from $$top")

    nullable = _nullable_categories(project)
    for unit in project.top_units():
        for i, line in enumerate(unit.source_lines):
            if _seq_nullable(line.elements, nullable):
                err(unit.origin, "NullableTop",
                    f"Source line {i + 1} of $$top can match the empty utterance")

    return diags


def _nullable_categories(project: AssembledProject) -> dict[str, bool]:
    memo: dict[str, bool] = {}

    def cat_nullable(cat: str) -> bool:
        if cat in memo:
            return memo[cat]
        memo[cat] = False  # acyclic, so a placeholder value is never read
        result = any(
            _seq_nullable(line.elements, None, cat_nullable)
            for unit in project.units.get(cat, [])
            for line in unit.source_lines
        ) or any(
            entry.source_pattern is not None and _seq_nullable(entry.source_pattern.elements, None, cat_nullable)
            for entry in project.lexemes.get(cat, [])
        )
        memo[cat] = result
        return result

    for cat in project.categories():
        cat_nullable(cat)
    return memo


def _seq_nullable(elements, memo, cat_fn=None) -> bool:
    from .formalism import Group, Literal, Opt, Var

    def el_nullable(el) -> bool:
        if isinstance(el, Opt):
            return True
        if isinstance(el, Literal):
            return False
        if isinstance(el, Var):
            if memo is not None:
                return memo.get(el.name, False)
            return cat_fn(el.name) if cat_fn else False
        return any(all(el_nullable(e) for e in alt) for alt in el.alternatives)

    return all(el_nullable(el) for el in elements)


# ---------------------------------------------------------------------------
# Loading from disk
# ---------------------------------------------------------------------------

def load_project(manifest_path: str) -> tuple[AssembledProject | None, list[Diagnostic]]:
    """Read manifest and rule files, assemble and validate.

    Returns (None, diagnostics) when anything error-severity occurred.
    """
    diags: list[Diagnostic] = []
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        return None, [Diagnostic("error", "UnreadableFile", str(e), manifest_path, 1)]
    manifest, mdiags = parse_manifest(text, manifest_path)
    diags.extend(mdiags)
    if manifest is None:
        return None, diags

    files: list[RuleFile] = []

    def read_rules(rel: str, role: Role) -> None:
        path = manifest.resolve(rel)
        try:
            with open(path, encoding="utf-8") as fh:
                content = fh.read()
        except OSError as e:
            diags.append(Diagnostic("error", "UnreadableFile", str(e), path, 1))
            return
        rf, fdiags = parse_rule_file(content, role, path)
        diags.extend(fdiags)
        files.append(rf)

    for rel in manifest.source_files:
        read_rules(rel, SOURCE)
    for lang, rel in manifest.sign_files:
        read_rules(rel, target_role(lang))
    for lang, rel in manifest.target_files:
        read_rules(rel, target_role(lang))
    if has_errors(diags):
        return None, diags

    project, adiags = assemble(manifest, files)
    diags.extend(adiags)
    if project is None:
        return None, diags
    vdiags = validate(project)
    diags.extend(vdiags)
    if has_errors(vdiags):
        return None, diags
    return project, diags
