"""Rule-file formalism: phrase patterns, rule files, parsing, serialization.

A rule file is line-oriented UTF-8 text built from two constructs:

    TrPhrase $$category
    Source <pattern>
    Target/<tag> <template>
    EndTrPhrase

    TrLex $$category source="<pattern>" <tag>="<token list>" ...

Lines starting with ``#`` are comments; blank lines are ignored.

Patterns are regular expressions over whitespace-separated tokens:

    pattern  = element+
    element  = "?" element | "(" pattern ("|" pattern)* ")" | "$$" name | token
    name     = [A-Za-z0-9_-]+

``?`` makes the immediately following token, group or variable optional.
Templates (``Target`` lines and ``TrLex`` values) are flat: tokens,
``$$var`` and ``?$$var`` only -- no groups, no optional tokens.  A bare
``?`` as a Target line or attribute value is the unfilled-translation
placeholder used by generated blank files.

Token matching is case-insensitive: every token keeps its original
``display`` form for output and a lowercased, NFC-normalized ``norm``
used for matching and canonical keys.
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field

from .errors import LiteError

# Tags usable on Target lines of sign-language rules.  They live here so
# the parser and assembler can classify Target lines without importing
# the sign module.
STREAM_NAMES = ("gloss", "head", "gaze", "eyebrows", "aperture", "mouthing")

VARIABLE_NAME_RE = re.compile(r"[A-Za-z0-9_-]+")
TAG_RE = re.compile(r"[A-Za-z][A-Za-z0-9_-]*")


class PatternSyntaxError(LiteError):
    """Raised by :func:`parse_pattern`; ``code`` names the defect."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# Tokens and pattern elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    display: str
    norm: str

    @classmethod
    def from_display(cls, display: str) -> "Token":
        norm = normalize_token(display)
        if not norm or any(ch.isspace() for ch in norm):
            raise ValueError(f"invalid token {display!r}")
        return cls(display, norm)


def normalize_token(display: str) -> str:
    return unicodedata.normalize("NFC", display).lower()


@dataclass(frozen=True)
class Literal:
    token: Token


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Group:
    alternatives: tuple[tuple["Element", ...], ...]


@dataclass(frozen=True)
class Opt:
    """An optional element, written ``?x``."""

    inner: "Element"


Element = Literal | Var | Group | Opt


@dataclass(frozen=True)
class Pattern:
    elements: tuple[Element, ...]

    def is_nullable(self) -> bool:
        """True if the pattern itself can match the empty token sequence.

        Variable references count as non-nullable here; whether a
        referenced category can match the empty string is a project-level
        question answered during validation.
        """
        return all(_element_nullable(el) for el in self.elements)


def _element_nullable(el: Element) -> bool:
    if isinstance(el, Opt):
        return True
    if isinstance(el, Group):
        return any(all(_element_nullable(e) for e in alt) for alt in el.alternatives)
    return False


def pattern_variables(elements: tuple[Element, ...]) -> set[str]:
    out: set[str] = set()
    for el in elements:
        if isinstance(el, Var):
            out.add(el.name)
        elif isinstance(el, Opt):
            out |= pattern_variables((el.inner,))
        elif isinstance(el, Group):
            for alt in el.alternatives:
                out |= pattern_variables(alt)
    return out


def element_norm_key(elements: tuple[Element, ...]) -> tuple:
    """Structural identity of an element sequence up to token
    normalization; defines when two alternatives count as identical."""
    out: list[tuple] = []
    for el in elements:
        if isinstance(el, Literal):
            out.append(("lit", el.token.norm))
        elif isinstance(el, Var):
            out.append(("var", el.name))
        elif isinstance(el, Opt):
            out.append(("opt", element_norm_key((el.inner,))))
        else:
            out.append(("group", tuple(element_norm_key(alt) for alt in el.alternatives)))
    return tuple(out)


def mandatory_variables(elements: tuple[Element, ...]) -> set[str]:
    """Variables bound by every derivation of the element sequence."""
    out: set[str] = set()
    for el in elements:
        if isinstance(el, Var):
            out.add(el.name)
        elif isinstance(el, Group):
            sets = [mandatory_variables(alt) for alt in el.alternatives]
            common = sets[0]
            for s in sets[1:]:
                common = common & s
            out |= common
    return out


# ---------------------------------------------------------------------------
# Templates (canonical and target lines)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Template:
    """A flat element sequence: Literal, Var and Opt(Var) only."""

    elements: tuple[Element, ...]

    def variables(self) -> list[str]:
        names = []
        for el in self.elements:
            if isinstance(el, Var):
                names.append(el.name)
            elif isinstance(el, Opt):
                names.append(el.inner.name)  # type: ignore[union-attr]
        return names

    def mandatory(self) -> set[str]:
        return {el.name for el in self.elements if isinstance(el, Var)}

    def key(self) -> str:
        return " ".join(_key_part(el) for el in self.elements)


def _key_part(el: Element) -> str:
    if isinstance(el, Literal):
        return el.token.norm
    if isinstance(el, Var):
        return f"$${el.name}"
    if isinstance(el, Opt) and isinstance(el.inner, Var):
        return f"?$${el.inner.name}"
    raise ValueError(f"non-template element {el!r}")


def canonical_key_for_tokens(tokens: tuple[Token, ...]) -> str:
    return " ".join(t.norm for t in tokens)


def template_from_elements(elements: tuple[Element, ...]) -> Template:
    """Validate template shape; raises PatternSyntaxError('BadTemplate')."""
    seen: set[str] = set()
    for el in elements:
        if isinstance(el, Literal):
            continue
        if isinstance(el, Var):
            name = el.name
        elif isinstance(el, Opt) and isinstance(el.inner, Var):
            name = el.inner.name
        else:
            raise PatternSyntaxError(
                "BadTemplate", "templates allow tokens, $$var and ?$$var only"
            )
        if name in seen:
            raise PatternSyntaxError("BadTemplate", f"duplicate variable $${name}")
        seen.add(name)
    return Template(elements)


def derive_template(pattern: Pattern) -> Template:
    """Flatten a pattern into a template: first alternative of every
    group, optionals dropped.  Used when a unit carries no explicit
    canonical line."""
    return template_from_elements(tuple(_derive_elements(pattern.elements)))


def _derive_elements(elements: tuple[Element, ...]) -> list[Element]:
    out: list[Element] = []
    for el in elements:
        if isinstance(el, Opt):
            continue
        if isinstance(el, Group):
            out.extend(_derive_elements(el.alternatives[0]))
        else:
            out.append(el)
    return out


# ---------------------------------------------------------------------------
# Pattern parsing
# ---------------------------------------------------------------------------

_SPECIALS = "()|?"


def _lex_pattern(text: str) -> list[tuple[str, str]]:
    toks: list[tuple[str, str]] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _SPECIALS:
            toks.append((ch, ch))
            i += 1
            continue
        if text.startswith("$$", i):
            m = VARIABLE_NAME_RE.match(text, i + 2)
            if not m:
                raise PatternSyntaxError(
                    "BadVariableName", f"expected variable name after $$ at column {i + 1}"
                )
            toks.append(("VAR", m.group()))
            i = m.end()
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in _SPECIALS:
            j += 1
        toks.append(("TOKEN", text[i:j]))
        i = j
    return toks


def parse_pattern(text: str) -> Pattern:
    """Parse a source pattern.

    Raises PatternSyntaxError with codes UnbalancedParenthesis,
    EmptyAlternative, DanglingOptional, BadVariableName or EmptyPattern.
    """
    toks = _lex_pattern(text)
    if not toks:
        raise PatternSyntaxError("EmptyPattern", "pattern is empty")
    elements, pos = _parse_seq(toks, 0)
    if pos != len(toks):
        raise PatternSyntaxError("UnbalancedParenthesis", "unexpected ')'")
    if not elements:
        raise PatternSyntaxError("EmptyPattern", "pattern is empty")
    return Pattern(tuple(elements))


def _parse_seq(toks: list[tuple[str, str]], i: int) -> tuple[list[Element], int]:
    elements: list[Element] = []
    while i < len(toks) and toks[i][0] not in (")", "|"):
        el, i = _parse_element(toks, i)
        elements.append(el)
    return elements, i


def _parse_element(toks: list[tuple[str, str]], i: int) -> tuple[Element, int]:
    kind, value = toks[i]
    if kind == "?":
        if i + 1 >= len(toks) or toks[i + 1][0] in (")", "|"):
            raise PatternSyntaxError("DanglingOptional", "'?' must precede an element")
        inner, i = _parse_element(toks, i + 1)
        if isinstance(inner, Opt):  # ??x collapses to ?x
            return inner, i
        return Opt(inner), i
    if kind == "(":
        alternatives: list[tuple[Element, ...]] = []
        i += 1
        while True:
            seq, i = _parse_seq(toks, i)
            if i >= len(toks):
                raise PatternSyntaxError("UnbalancedParenthesis", "missing ')'")
            if not seq:
                raise PatternSyntaxError("EmptyAlternative", "empty alternative in group")
            alternatives.append(tuple(seq))
            if toks[i][0] == "|":
                i += 1
                continue
            break  # toks[i][0] == ")"
        return Group(tuple(alternatives)), i + 1
    if kind == "VAR":
        return Var(value), i + 1
    return Literal(Token.from_display(value)), i + 1


def parse_template(text: str) -> Template:
    return template_from_elements(parse_pattern(text).elements)


# ---------------------------------------------------------------------------
# Pattern serialization
# ---------------------------------------------------------------------------

def serialize_element(el: Element) -> str:
    if isinstance(el, Literal):
        return el.token.display
    if isinstance(el, Var):
        return f"$${el.name}"
    if isinstance(el, Opt):
        return "?" + serialize_element(el.inner)
    alts = " | ".join(" ".join(serialize_element(e) for e in alt) for alt in el.alternatives)
    return f"( {alts} )"


def serialize_pattern(pattern: Pattern) -> str:
    return " ".join(serialize_element(el) for el in pattern.elements)


def serialize_template(template: Template) -> str:
    return " ".join(serialize_element(el) for el in template.elements)


# ---------------------------------------------------------------------------
# Rule files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Origin:
    path: str
    line_start: int
    line_end: int


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    path: str
    line: int

    def __str__(self) -> str:
        return f"{self.path}:{self.line}: {self.severity} {self.code} {self.message}"


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)


@dataclass(frozen=True)
class Role:
    kind: str  # "source" | "target" | "monolithic"
    language: str | None = None

    def __str__(self) -> str:
        return f"target({self.language})" if self.kind == "target" else self.kind


SOURCE = Role("source")
MONOLITHIC = Role("monolithic")


def target_role(language: str) -> Role:
    return Role("target", language)


@dataclass
class UnitFragment:
    """One TrPhrase block as it appears in a single file."""

    category: str
    source_lines: list[Pattern]
    targets: dict[str, Template | None]  # tag -> template, None = "?" placeholder
    origin: Origin = field(compare=False)
    declaration_index: int = field(compare=False, default=0)


@dataclass
class LexFragment:
    """One TrLex line as it appears in a single file."""

    category: str
    source_pattern: Pattern | None
    values: dict[str, tuple[Token, ...] | None]  # tag -> tokens, None = "?"
    origin: Origin = field(compare=False)
    declaration_index: int = field(compare=False, default=0)


@dataclass
class RuleFile:
    role: Role
    path: str
    units: list[UnitFragment]
    lexemes: list[LexFragment]


_ATTR_RE = re.compile(r'([A-Za-z][A-Za-z0-9_-]*)\s*=\s*"([^"]*)"')


def parse_rule_file(text: str, role: Role, path: str = "<string>") -> tuple[RuleFile, list[Diagnostic]]:
    """Parse rule-file text into unit and lexeme fragments.

    Never raises on malformed input; problems are reported as
    diagnostics and the offending construct is skipped.
    """
    diags: list[Diagnostic] = []
    units: list[UnitFragment] = []
    lexemes: list[LexFragment] = []
    decl = 0

    def err(line: int, code: str, message: str) -> None:
        diags.append(Diagnostic("error", code, message, path, line))

    block: UnitFragment | None = None
    block_start = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        directive, _, rest = line.partition(" ")
        rest = rest.strip()

        if directive == "TrPhrase":
            if block is not None:
                err(block_start, "UnterminatedBlock", "TrPhrase block not closed before next TrPhrase")
                units.append(block)
            category = _parse_category(rest, lineno, err)
            block = UnitFragment(category or "", [], {}, Origin(path, lineno, lineno), decl)
            block_start = lineno
            decl += 1
            continue

        if directive == "EndTrPhrase":
            if block is None:
                err(lineno, "UnknownDirective", "EndTrPhrase outside a TrPhrase block")
                continue
            block.origin = Origin(path, block_start, lineno)
            units.append(block)
            block = None
            continue

        if directive == "Source":
            if block is None:
                err(lineno, "UnknownDirective", "Source line outside a TrPhrase block")
                continue
            try:
                block.source_lines.append(parse_pattern(rest))
            except PatternSyntaxError as e:
                err(lineno, e.code, e.message)
            continue

        if directive.startswith("Target/"):
            tag = directive[len("Target/"):]
            if not TAG_RE.fullmatch(tag):
                err(lineno, "UnknownDirective", f"bad Target tag {tag!r}")
                continue
            if block is None:
                err(lineno, "UnknownDirective", "Target line outside a TrPhrase block")
                continue
            if tag in block.targets:
                err(lineno, "DuplicateAttributeKey", f"duplicate Target/{tag} in block")
                continue
            if rest == "?":
                block.targets[tag] = None
                continue
            try:
                block.targets[tag] = parse_template(rest)
            except PatternSyntaxError as e:
                err(lineno, e.code, e.message)
            continue

        if directive == "TrLex":
            category_text, _, attr_text = rest.partition(" ")
            category = _parse_category(category_text, lineno, err)
            if category is None:
                continue
            values: dict[str, tuple[Token, ...] | None] = {}
            source_pattern: Pattern | None = None
            consumed = 0
            for m in _ATTR_RE.finditer(attr_text):
                if attr_text[consumed:m.start()].strip():
                    err(lineno, "BadAttribute", f"unparsable attribute text {attr_text[consumed:m.start()].strip()!r}")
                consumed = m.end()
                key, value = m.group(1), m.group(2)
                if key in values or (key == "source" and source_pattern is not None):
                    err(lineno, "DuplicateAttributeKey", f"duplicate attribute {key!r}")
                    continue
                if key == "source":
                    try:
                        source_pattern = parse_pattern(value)
                        if pattern_variables(source_pattern.elements):
                            err(lineno, "VarInLexSource", "TrLex source patterns may not reference variables")
                            source_pattern = None
                    except PatternSyntaxError as e:
                        err(lineno, e.code, e.message)
                    continue
                if value == "?":
                    values[key] = None
                    continue
                try:
                    values[key] = _parse_token_list(value)
                except PatternSyntaxError as e:
                    err(lineno, e.code, e.message)
            if attr_text[consumed:].strip():
                err(lineno, "BadAttribute", f"unparsable attribute text {attr_text[consumed:].strip()!r}")
            lexemes.append(LexFragment(category, source_pattern, values, Origin(path, lineno, lineno), decl))
            decl += 1
            continue

        err(lineno, "UnknownDirective", f"unknown directive {directive!r}")

    if block is not None:
        err(block_start, "UnterminatedBlock", "TrPhrase block missing EndTrPhrase")
        units.append(block)

    return RuleFile(role, path, units, lexemes), diags


def _parse_category(text: str, lineno: int, err) -> str | None:
    text = text.strip()
    if not text.startswith("$$") or not VARIABLE_NAME_RE.fullmatch(text[2:]):
        err(lineno, "MissingCategory", f"expected $$category, got {text!r}")
        return None
    return text[2:]


def _parse_token_list(value: str) -> tuple[Token, ...]:
    parts = value.split()
    if not parts:
        raise PatternSyntaxError("EmptyPattern", "empty token list")
    for p in parts:
        if any(ch in _SPECIALS for ch in p) or p.startswith("$$"):
            raise PatternSyntaxError("BadTemplate", f"token list may not contain {p!r}")
    return tuple(Token.from_display(p) for p in parts)


# ---------------------------------------------------------------------------
# Rule-file serialization
# ---------------------------------------------------------------------------

def serialize_rule_file(rule_file: RuleFile, canonical_language: str | None = None) -> str:
    """Canonical text form: single spaces, source attribute first, the
    canonical-language attribute next, remaining tags alphabetical.
    Fragments are emitted in declaration order; output ends with one
    trailing newline."""
    fragments: list[UnitFragment | LexFragment] = sorted(
        [*rule_file.units, *rule_file.lexemes], key=lambda f: f.declaration_index
    )
    blocks = [_serialize_fragment(f, canonical_language) for f in fragments]
    return "\n\n".join(blocks) + "\n"


def _tag_sort_key(canonical_language: str | None):
    def key(tag: str) -> tuple[int, str]:
        return (0 if tag == canonical_language else 1, tag)

    return key


def _serialize_fragment(frag: UnitFragment | LexFragment, canonical_language: str | None) -> str:
    if isinstance(frag, UnitFragment):
        lines = [f"TrPhrase $${frag.category}"]
        for pat in frag.source_lines:
            lines.append(f"Source {serialize_pattern(pat)}")
        for tag in sorted(frag.targets, key=_tag_sort_key(canonical_language)):
            tmpl = frag.targets[tag]
            body = "?" if tmpl is None else serialize_template(tmpl)
            lines.append(f"Target/{tag} {body}")
        lines.append("EndTrPhrase")
        return "\n".join(lines)
    parts = [f"TrLex $${frag.category}"]
    if frag.source_pattern is not None:
        parts.append(f'source="{serialize_pattern(frag.source_pattern)}"')
    for tag in sorted(frag.values, key=_tag_sort_key(canonical_language)):
        tokens = frag.values[tag]
        body = "?" if tokens is None else " ".join(t.display for t in tokens)
        parts.append(f'{tag}="{body}"')
    return " ".join(parts)
