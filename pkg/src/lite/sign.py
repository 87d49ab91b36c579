"""Sign translation: six aligned symbol streams, slot inheritance, SiGML.

A signed utterance is a sign table: six equal-length symbol lists named
gloss, head, gaze, eyebrows, aperture and mouthing.  Sign target rules
give one slot per stream per column; a slot is either a symbol or a
variable.  When a variable column is filled by a lexical sign of width
k, streams the sign provides contribute their k symbols and every other
stream inherits the rule's slot value at that column, repeated k times.

``Neutral`` is the no-op symbol: it never needs a lexicon entry and
produces no nonmanual XML element.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from xml.sax.saxutils import escape, quoteattr

from .assembler import AssembledProject, TrLexEntry, TrPhraseUnit, assemble
from .engine import LexValue, MatchResult, UnitValue, Utterance, match_source, tokenize
from .errors import LiteError
from .formalism import (
    MONOLITHIC,
    STREAM_NAMES,
    Diagnostic,
    Literal,
    Opt,
    Origin,
    Role,
    Template,
    Var,
    has_errors,
    parse_rule_file,
)

NONMANUAL_STREAMS = ("head", "gaze", "eyebrows", "aperture")
NEUTRAL = "Neutral"
LEXICON_KINDS = ("manual", "nonmanual", "mouthing")
_LEXICON_HEADERS = {
    "manual": ["gloss", "hamnosys"],
    "nonmanual": ["stream", "symbol", "tag"],
    "mouthing": ["symbol", "picture"],
}
_XML_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.-]*$")


class MissingSignTarget(LiteError):
    code = "MissingSignTarget"


class MissingSignStream(LiteError):
    code = "MissingSignStream"


class MissingLexiconEntry(LiteError):
    code = "MissingLexiconEntry"


class SignRulesInvalid(LiteError):
    code = "SignRulesInvalid"


# ---------------------------------------------------------------------------
# Rule set
# ---------------------------------------------------------------------------

Slot = str | Var  # literal symbol or variable


@dataclass
class SignTargetRule:
    category: str
    canonical_key: str
    streams: dict[str, tuple[Slot, ...]]
    origin: Origin = field(compare=False)

    @property
    def width(self) -> int:
        return len(self.streams["gloss"])


@dataclass
class SignLexEntry:
    category: str
    canonical_key: str
    streams: dict[str, tuple[str, ...]]
    origin: Origin = field(compare=False)

    @property
    def width(self) -> int:
        return len(self.streams["gloss"])


@dataclass
class SignTable:
    streams: dict[str, tuple[str, ...]]

    @property
    def width(self) -> int:
        return len(self.streams["gloss"])

    def column(self, i: int) -> dict[str, str]:
        return {s: self.streams[s][i] for s in STREAM_NAMES}


@dataclass
class SignRuleSet:
    language: str | None
    rules: dict[tuple[str, str], SignTargetRule]
    lexemes: dict[tuple[str, str], SignLexEntry]


def _template_slots(tmpl: Template) -> tuple[Slot, ...]:
    slots: list[Slot] = []
    for el in tmpl.elements:
        if isinstance(el, Literal):
            slots.append(el.token.display)
        elif isinstance(el, Var):
            slots.append(el)
        else:
            raise ValueError("optional slots are not allowed in sign streams")
    return tuple(slots)


def _validate_rule(category: str, key: str, streams: dict[str, Template],
                   canonical_vars: set[str], origin: Origin,
                   diags: list[Diagnostic]) -> SignTargetRule | None:
    def err(code: str, message: str) -> None:
        diags.append(Diagnostic("error", code, message, origin.path, origin.line_start))

    missing = [s for s in STREAM_NAMES if s not in streams]
    if missing:
        err("MissingStream", f"'{key}': no Target/{'/'.join(missing)} line")
        return None
    slot_streams: dict[str, tuple[Slot, ...]] = {}
    for name in STREAM_NAMES:
        try:
            slot_streams[name] = _template_slots(streams[name])
        except ValueError as e:
            err("BadSignSlot", f"'{key}' stream {name}: {e}")
            return None
    widths = {name: len(slots) for name, slots in slot_streams.items()}
    if len(set(widths.values())) != 1:
        err("StreamLengthMismatch",
            f"'{key}': stream lengths differ: " + ", ".join(f"{n}={w}" for n, w in widths.items()))
        return None
    ok = True
    for col in range(widths["gloss"]):
        names = {slot.name for slot in (slot_streams[s][col] for s in STREAM_NAMES)
                 if isinstance(slot, Var)}
        if len(names) > 1:
            err("InconsistentVarColumn",
                f"'{key}' column {col + 1} mixes variables: " + ", ".join(sorted(f"$${n}" for n in names)))
            ok = False
        elif names and next(iter(names)) not in canonical_vars:
            err("UnknownSignVariable",
                f"'{key}' column {col + 1} uses $${next(iter(names))} which is not in the canonical")
            ok = False
    if not ok:
        return None
    return SignTargetRule(category, key, slot_streams, origin)


def _validate_lexeme(category: str, key: str, streams: dict[str, tuple[str, ...]],
                     origin: Origin, diags: list[Diagnostic]) -> SignLexEntry | None:
    def err(code: str, message: str) -> None:
        diags.append(Diagnostic("error", code, message, origin.path, origin.line_start))

    if "gloss" not in streams:
        err("MissingStream", f"sign for '{key}' provides no gloss")
        return None
    widths = {name: len(v) for name, v in streams.items()}
    if len(set(widths.values())) != 1:
        err("StreamLengthMismatch",
            f"sign for '{key}': stream lengths differ: " + ", ".join(f"{n}={w}" for n, w in widths.items()))
        return None
    if widths["gloss"] < 1:
        err("StreamLengthMismatch", f"sign for '{key}' is empty")
        return None
    return SignLexEntry(category, key, dict(streams), origin)


def build_sign_rules(project: AssembledProject, lang: str) -> tuple[SignRuleSet, list[Diagnostic]]:
    """Extract and validate the aligned sign rules for one sign language."""
    diags: list[Diagnostic] = []
    rules: dict[tuple[str, str], SignTargetRule] = {}
    lexemes: dict[tuple[str, str], SignLexEntry] = {}
    for item in project.declarations():
        streams = item.sign_streams.get(lang)
        if not streams:
            continue
        if isinstance(item, TrPhraseUnit):
            rule = _validate_rule(item.category, item.canonical_key, streams,
                                  set(item.canonical.variables()), item.origin, diags)
            if rule is not None:
                rules[(item.category, item.canonical_key)] = rule
        else:
            entry = _validate_lexeme(item.category, item.canonical_key, streams,
                                     item.origin, diags)
            if entry is not None:
                lexemes[(item.category, item.canonical_key)] = entry
    return SignRuleSet(lang, rules, lexemes), diags


def sign_rules_for(project: AssembledProject, lang: str) -> SignRuleSet:
    cached = project.sign_cache.get(lang)
    if cached is None:
        cached, diags = build_sign_rules(project, lang)
        if has_errors(diags):
            raise SignRulesInvalid("; ".join(str(d) for d in diags if d.severity == "error"))
        project.sign_cache[lang] = cached
    return cached


# ---------------------------------------------------------------------------
# Standalone parsing (rule-file text or spreadsheet CSV)
# ---------------------------------------------------------------------------

def parse_sign_rules(text: str, role: Role = MONOLITHIC, source_language: str | None = None,
                     fmt: str = "auto", path: str = "<string>",
                     language: str | None = None) -> tuple[SignRuleSet, list[Diagnostic]]:
    """Parse sign rules from rule-file text or from CSV (one row per
    stream, first cell the stream name).  Both forms yield identical
    rule sets."""
    if fmt == "auto":
        fmt = "csv" if _looks_like_csv(text) else "lite"
    if fmt == "csv":
        text = _csv_to_rule_text(text)
    rf, diags = parse_rule_file(text, role, path)

    from .assembler import ProjectManifest

    manifest = ProjectManifest(id="<sign>", source_language=source_language or "source",
                               sign_languages=(language or "sign",), path=path)
    project, adiags = assemble(manifest, [rf])
    diags.extend(adiags)
    if project is None:
        return SignRuleSet(language, {}, {}), diags
    ruleset, bdiags = build_sign_rules(project, language or "sign")
    diags.extend(bdiags)
    return ruleset, diags


def _looks_like_csv(text: str) -> bool:
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head = line.split(",")[0].strip()
        return "," in line and head in ("TrPhrase", "TrLex", "Source", *STREAM_NAMES)
    return False


def _csv_to_rule_text(text: str) -> str:
    lines: list[str] = []
    for row in csv.reader(io.StringIO(text)):
        cells = [c.strip() for c in row]
        while cells and not cells[-1]:
            cells.pop()
        if not cells or cells[0].startswith("#"):
            lines.append("")
            continue
        head = cells[0]
        if head in ("TrPhrase", "Source"):
            lines.append(f"{head} {' '.join(cells[1:])}")
        elif head == "EndTrPhrase":
            lines.append("EndTrPhrase")
        elif head in STREAM_NAMES:
            lines.append(f"Target/{head} {' '.join(cells[1:])}")
        elif head == "TrLex":
            attrs = []
            for cell in cells[2:]:
                key, sep, value = cell.partition("=")
                attrs.append(f'{key}="{value}"' if sep else cell)
            lines.append(f"TrLex {cells[1]} {' '.join(attrs)}")
        else:
            lines.append(" ".join(cells))  # surface as a parse diagnostic
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Translation to sign tables
# ---------------------------------------------------------------------------

def sign_translate(project: AssembledProject, utt: Utterance | str, lang: str) -> SignTable:
    """Stage-1 match, then expand the matched rule's columns."""
    if isinstance(utt, str):
        utt = tokenize(utt)
    ruleset = sign_rules_for(project, lang)
    best = match_source(project, utt)[0]
    table = _expand_match(ruleset, best.unit, best.bindings)
    widths = {len(v) for v in table.streams.values()}
    assert len(widths) == 1, "sign table streams diverged"
    return table


def _expand_match(ruleset: SignRuleSet, unit: TrPhraseUnit, bindings: dict) -> SignTable:
    rule = ruleset.rules.get((unit.category, unit.canonical_key))
    if rule is None:
        raise MissingSignTarget(f"no sign rule for '{unit.canonical_key}'")
    out: dict[str, list[str]] = {s: [] for s in STREAM_NAMES}
    for col in range(rule.width):
        slots = {s: rule.streams[s][col] for s in STREAM_NAMES}
        var_names = {slot.name for slot in slots.values() if isinstance(slot, Var)}
        if not var_names:
            for s in STREAM_NAMES:
                out[s].append(slots[s])  # type: ignore[arg-type]
            continue
        name = next(iter(var_names))
        bound = bindings.get(name)
        if bound is None:
            continue  # optional variable left unbound: column omitted
        value = bound.value
        if isinstance(value, UnitValue):
            nested = _expand_match(ruleset, value.unit, dict(value.bindings))
            for s in STREAM_NAMES:
                out[s].extend(nested.streams[s])
            continue
        entry = value.entry
        sign = ruleset.lexemes.get((entry.category, entry.canonical_key))
        if sign is None:
            raise MissingSignTarget(f"no sign for lexical entry '{entry.canonical_key}'")
        for s in STREAM_NAMES:
            provided = sign.streams.get(s)
            if provided is not None:
                out[s].extend(provided)
            elif isinstance(slots[s], Var):
                raise MissingSignStream(
                    f"sign for '{entry.canonical_key}' does not provide {s}, "
                    f"required by '{rule.canonical_key}'")
            else:
                out[s].extend([slots[s]] * sign.width)  # slot inheritance
    return SignTable({s: tuple(v) for s, v in out.items()})


# ---------------------------------------------------------------------------
# Lexicon spreadsheets and SiGML
# ---------------------------------------------------------------------------

@dataclass
class SignLexicon:
    manual: dict[str, str] = field(default_factory=dict)
    nonmanual: dict[tuple[str, str], str] = field(default_factory=dict)
    mouthing: dict[str, str] = field(default_factory=dict)


def parse_sign_lexicon_csv(text: str, kind: str, path: str = "<csv>"
                           ) -> tuple[dict, list[Diagnostic]]:
    if kind not in LEXICON_KINDS:
        raise ValueError(f"unknown lexicon kind {kind!r}")
    diags: list[Diagnostic] = []
    width = len(_LEXICON_HEADERS[kind])
    out: dict = {}
    rows = list(csv.reader(io.StringIO(text)))
    for lineno, row in enumerate(rows, start=1):
        cells = [c.strip() for c in row]
        if not any(cells) or cells[0].startswith("#"):
            continue
        if lineno == 1 and cells[: width] == _LEXICON_HEADERS[kind]:
            continue
        if len(cells) < width:
            diags.append(Diagnostic("error", "BadLexiconRow",
                                    f"expected {width} columns, got {len(cells)}", path, lineno))
            continue
        key = (cells[0], cells[1]) if kind == "nonmanual" else cells[0]
        value = cells[width - 1]
        if key in out:
            diags.append(Diagnostic("warning", "DuplicateLexiconRow",
                                    f"duplicate entry for {key!r}", path, lineno))
            continue
        if kind == "nonmanual" and value != "?" and not _XML_NAME.match(value):
            diags.append(Diagnostic("error", "BadLexiconRow",
                                    f"{value!r} is not a valid XML element name", path, lineno))
            continue
        out[key] = value
    return out, diags


def load_sign_lexicon(project: AssembledProject, lang: str) -> tuple[SignLexicon, list[Diagnostic]]:
    lexicon = SignLexicon()
    diags: list[Diagnostic] = []
    for tag, kind, rel in project.manifest.sign_lexicons:
        if tag != lang:
            continue
        path = project.manifest.resolve(rel)
        with open(path, encoding="utf-8") as fh:
            table, tdiags = parse_sign_lexicon_csv(fh.read(), kind, path)
        diags.extend(tdiags)
        getattr(lexicon, kind).update(table)
    return lexicon, diags


def render_sigml(table: SignTable, lexicon: SignLexicon) -> str:
    """One sign element per column; Neutral stream values are silent."""
    out = io.StringIO()
    out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    out.write("<sigml>\n")
    for col in range(table.width):
        cells = table.column(col)
        gloss = cells["gloss"]
        manual = lexicon.manual.get(gloss)
        if manual is None or manual == "?":
            raise MissingLexiconEntry(f"no manual entry for gloss '{gloss}'")
        out.write(f"  <hns_sign gloss={quoteattr(gloss)}>\n")
        nonmanual: list[str] = []
        for stream in NONMANUAL_STREAMS:
            symbol = cells[stream]
            if symbol == NEUTRAL:
                continue
            tag = lexicon.nonmanual.get((stream, symbol))
            if tag is None or tag == "?":
                raise MissingLexiconEntry(f"no nonmanual entry for {stream} '{symbol}'")
            nonmanual.append(f"      <{tag}/>")
        mouth = cells["mouthing"]
        if mouth != NEUTRAL:
            picture = lexicon.mouthing.get(mouth)
            if picture is None or picture == "?":
                raise MissingLexiconEntry(f"no mouthing entry for '{mouth}'")
            nonmanual.append(f"      <hnm_mouthpicture picture={quoteattr(picture)}/>")
        if nonmanual:
            out.write("    <hamnosys_nonmanual>\n")
            out.write("\n".join(nonmanual) + "\n")
            out.write("    </hamnosys_nonmanual>\n")
        out.write(f"    <hamnosys_manual>{escape(manual)}</hamnosys_manual>\n")
        out.write("  </hns_sign>\n")
    out.write("</sigml>\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# Lexicon refresh
# ---------------------------------------------------------------------------

def collect_symbols(ruleset: SignRuleSet) -> dict[str, set]:
    """Every symbol a complete lexicon must cover, by lexicon kind."""
    needed: dict[str, set] = {"manual": set(), "nonmanual": set(), "mouthing": set()}

    def take(stream: str, symbol: str) -> None:
        if symbol == NEUTRAL:
            return
        if stream == "gloss":
            needed["manual"].add(symbol)
        elif stream == "mouthing":
            needed["mouthing"].add(symbol)
        else:
            needed["nonmanual"].add((stream, symbol))

    for rule in ruleset.rules.values():
        for stream in STREAM_NAMES:
            for slot in rule.streams[stream]:
                if isinstance(slot, str):
                    take(stream, slot)
    for entry in ruleset.lexemes.values():
        for stream, symbols in entry.streams.items():
            for symbol in symbols:
                take(stream, symbol)
    return needed


def refresh_sign_lexicon(text: str, kind: str, ruleset: SignRuleSet) -> str:
    """Append a ``?`` placeholder row for every symbol the rules use that
    the spreadsheet does not cover.  Existing lines are kept verbatim."""
    existing, _ = parse_sign_lexicon_csv(text, kind)
    needed = collect_symbols(ruleset)[kind]
    missing = sorted(needed - set(existing))
    if not missing:
        return text
    buf = io.StringIO()
    if text.strip():
        buf.write(text if text.endswith("\n") else text + "\n")
    else:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_LEXICON_HEADERS[kind])
    writer = csv.writer(buf, lineterminator="\n")
    for key in missing:
        writer.writerow([*key, "?"] if kind == "nonmanual" else [key, "?"])
    return buf.getvalue()
