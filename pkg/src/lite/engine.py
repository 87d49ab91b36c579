"""Utterance matching and translation through the canonical pivot.

Translation runs in two decoupled stages.  Stage 1 matches the utterance
against the Source lines of ``$$top`` phrases and realizes the matched
unit's canonical template -- the paraphrase shown to the speaker for
confirmation.  Stage 2 re-matches that canonical string against the
canonical templates and realizes the requested target-language template.

Matching is anchored: a pattern must consume the whole utterance.
Ambiguity is resolved by a strict priority order: unit declaration
order, then Source line order, then the declaration order of the bound
entries left to right, then the parse's choice path.  A variable may
bind at most once per pattern; parses that would bind it twice are
discarded.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

from .assembler import AssembledProject, TrLexEntry, TrPhraseUnit
from .errors import LiteError
from .formalism import Element, Group, Literal, Opt, Pattern, Token, Var

_EDGE_PUNCT = "?!.,"


class EmptyUtterance(LiteError):
    code = "EmptyUtterance"


class NoMatch(LiteError):
    code = "NoMatch"


class NoCanonicalMatch(LiteError):
    code = "NoCanonicalMatch"


class MissingTarget(LiteError):
    code = "MissingTarget"

    def __init__(self, lang: str, key: str):
        super().__init__(f"no {lang} translation for '{key}'", lang=lang, key=key)


class UnboundMandatoryVariable(LiteError):
    code = "UnboundMandatoryVariable"


# ---------------------------------------------------------------------------
# Utterances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Utterance:
    raw: str
    tokens: tuple[Token, ...]


def tokenize(raw: str) -> Utterance:
    """Whitespace tokenization; ``? ! . ,`` are stripped from token edges
    and tokens reduced to nothing are dropped."""
    tokens = []
    for part in raw.split():
        part = part.strip(_EDGE_PUNCT)
        if part:
            tokens.append(Token.from_display(part))
    if not tokens:
        raise EmptyUtterance(f"no tokens in {raw!r}")
    return Utterance(raw, tuple(tokens))


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LexValue:
    entry: TrLexEntry
    choices: tuple[int, ...]

    def priority(self):
        return ("L", self.entry.declaration_index, self.choices)

    def signature(self):
        return ("L", self.entry.declaration_index)


@dataclass(frozen=True)
class UnitValue:
    unit: TrPhraseUnit
    line_index: int
    bindings: tuple[tuple[str, "CatMatch"], ...]
    choices: tuple[int, ...]

    def priority(self):
        return ("U", self.unit.declaration_index, self.line_index,
                tuple(m.value.priority() for _, m in self.bindings), self.choices)

    def signature(self):
        return ("U", self.unit.declaration_index, self.line_index,
                tuple((name, m.signature()) for name, m in self.bindings))


@dataclass(frozen=True)
class CatMatch:
    start: int
    end: int
    value: LexValue | UnitValue

    def signature(self):
        return (self.start, self.end, self.value.signature())


@dataclass
class MatchResult:
    unit: TrPhraseUnit
    line_index: int
    bindings: dict[str, CatMatch]
    priority: tuple


class _View:
    """How the matcher sees the grammar: the source view matches Source
    patterns, the canonical view matches canonical templates/tokens."""

    def __init__(self, project: AssembledProject):
        self.project = project
        self._members: dict[str, list] = {}

    def members(self, cat: str) -> list:
        got = self._members.get(cat)
        if got is None:
            got = sorted(
                [*self.project.units.get(cat, []), *self.project.lexemes.get(cat, [])],
                key=lambda m: m.declaration_index,
            )
            self._members[cat] = got
        return got

    def unit_lines(self, unit: TrPhraseUnit) -> tuple[Pattern, ...]:
        raise NotImplementedError

    def lex_elements(self, entry: TrLexEntry) -> tuple[Element, ...]:
        raise NotImplementedError


class SourceView(_View):
    def unit_lines(self, unit):
        return unit.source_lines

    def lex_elements(self, entry):
        return entry.source_pattern.elements if entry.source_pattern else ()


class CanonicalView(_View):
    def unit_lines(self, unit):
        return (Pattern(unit.canonical.elements),)

    def lex_elements(self, entry):
        return tuple(Literal(t) for t in entry.canonical)


class Matcher:
    def __init__(self, tokens: tuple[Token, ...], view: _View):
        self.tokens = tokens
        self.view = view
        self._memo: dict[tuple[str, int], list[CatMatch]] = {}

    def category_matches(self, cat: str, i: int) -> list[CatMatch]:
        key = (cat, i)
        got = self._memo.get(key)
        if got is not None:
            return got
        results: list[CatMatch] = []
        for member in self.view.members(cat):
            if isinstance(member, TrLexEntry):
                elements = self.view.lex_elements(member)
                if not elements:
                    continue
                for end, _, choices in self.match_seq(elements, 0, i, frozenset()):
                    results.append(CatMatch(i, end, LexValue(member, choices)))
            else:
                for li, line in enumerate(self.view.unit_lines(member)):
                    for end, bindings, choices in self.match_seq(line.elements, 0, i, frozenset()):
                        results.append(CatMatch(i, end, UnitValue(member, li, bindings, choices)))
        self._memo[key] = results
        return results

    def match_seq(self, elements, k: int, i: int, bound: frozenset
                  ) -> Iterator[tuple[int, tuple, tuple]]:
        if k == len(elements):
            yield i, (), ()
            return
        for end1, b1, c1 in self._match_element(elements[k], i, bound):
            new_bound = bound | {name for name, _ in b1} if b1 else bound
            for end2, b2, c2 in self.match_seq(elements, k + 1, end1, new_bound):
                yield end2, b1 + b2, c1 + c2

    def _match_element(self, el: Element, i: int, bound: frozenset
                       ) -> Iterator[tuple[int, tuple, tuple]]:
        if isinstance(el, Literal):
            if i < len(self.tokens) and self.tokens[i].norm == el.token.norm:
                yield i + 1, (), ()
        elif isinstance(el, Var):
            if el.name in bound:
                return
            for idx, m in enumerate(self.category_matches(el.name, i)):
                yield m.end, ((el.name, m),), (idx,)
        elif isinstance(el, Group):
            for ai, alt in enumerate(el.alternatives):
                for end, b, c in self.match_seq(alt, 0, i, bound):
                    yield end, b, (ai,) + c
        else:  # Opt: take first, then skip
            for end, b, c in self._match_element(el.inner, i, bound):
                yield end, b, (0,) + c
            yield i, (), (1,)


def match_source(project: AssembledProject, utt: Utterance,
                 scope: set[str] | None = None) -> list[MatchResult]:
    """All full-utterance matches of ``$$top`` Source lines, best first.

    ``scope`` restricts matching to top units whose canonical key is in
    the set (the questionnaire's per-field grammar slice).
    """
    matcher = Matcher(utt.tokens, SourceView(project))
    n = len(utt.tokens)
    results: list[MatchResult] = []
    for unit in project.top_units():
        if scope is not None and unit.canonical_key not in scope:
            continue
        for li, line in enumerate(unit.source_lines):
            for end, bindings, choices in matcher.match_seq(line.elements, 0, 0, frozenset()):
                if end == n:
                    value = UnitValue(unit, li, bindings, choices)
                    results.append(MatchResult(unit, li, dict(bindings), value.priority()))
    results.sort(key=lambda r: r.priority)
    deduped: list[MatchResult] = []
    seen = set()
    for r in results:
        sig = (r.unit.declaration_index, r.line_index,
               tuple((name, m.signature()) for name, m in r.bindings.items()))
        if sig not in seen:
            seen.add(sig)
            deduped.append(r)
    if not deduped:
        raise NoMatch(f"no rule matches {utt.raw!r}")
    return deduped


# ---------------------------------------------------------------------------
# Realization
# ---------------------------------------------------------------------------

def _realize(template, bindings: dict[str, CatMatch],
             value_text: Callable[[LexValue | UnitValue], str]) -> str:
    parts: list[str] = []
    for el in template.elements:
        if isinstance(el, Literal):
            parts.append(el.token.display)
        elif isinstance(el, Var):
            m = bindings.get(el.name)
            if m is None:
                raise UnboundMandatoryVariable(f"$${el.name} is unbound")
            parts.append(value_text(m.value))
        else:  # Opt(Var)
            m = bindings.get(el.inner.name)
            if m is not None:
                parts.append(value_text(m.value))
    return " ".join(p for p in parts if p)


def _canonical_text(value: LexValue | UnitValue) -> str:
    if isinstance(value, LexValue):
        return " ".join(t.display for t in value.entry.canonical)
    return _realize(value.unit.canonical, dict(value.bindings), _canonical_text)


def realize_canonical(match: MatchResult) -> str:
    """The canonical paraphrase of a stage-1 match."""
    return _realize(match.unit.canonical, match.bindings, _canonical_text)


def _target_text(value: LexValue | UnitValue, lang: str) -> str:
    if isinstance(value, LexValue):
        tokens = value.entry.targets.get(lang)
        if tokens is None:
            raise MissingTarget(lang, value.entry.canonical_key)
        return " ".join(t.display for t in tokens)
    return _realize_unit_target(value, lang)


def _realize_unit_target(value: UnitValue, lang: str) -> str:
    tmpl = value.unit.targets.get(lang)
    if tmpl is None:
        raise MissingTarget(lang, value.unit.canonical_key)
    return _realize(tmpl, dict(value.bindings), lambda v: _target_text(v, lang))


def translate_canonical(project: AssembledProject, canonical: str, lang: str) -> str:
    """Stage 2: re-match a canonical string and realize the target."""
    utt = tokenize(canonical)
    matcher = Matcher(utt.tokens, CanonicalView(project))
    n = len(utt.tokens)
    candidates: list[tuple[tuple, UnitValue]] = []
    for unit in project.top_units():
        tmpl = Pattern(unit.canonical.elements)
        for end, bindings, choices in matcher.match_seq(tmpl.elements, 0, 0, frozenset()):
            if end == n:
                value = UnitValue(unit, 0, bindings, choices)
                candidates.append((value.priority(), value))
    if not candidates:
        raise NoCanonicalMatch(f"no canonical template matches {canonical!r}")
    candidates.sort(key=lambda c: c[0])
    return _realize_unit_target(candidates[0][1], lang)


# ---------------------------------------------------------------------------
# End-to-end translation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutputFailure:
    code: str
    message: str


@dataclass
class TranslationResult:
    paraphrase: str
    outputs: dict[str, str | OutputFailure]


def translate(project: AssembledProject, utt: Utterance,
              langs: list[str] | tuple[str, ...]) -> TranslationResult:
    """Match, paraphrase, then translate per language; a language failing
    (say, a missing translation) is recorded without failing the rest."""
    best = match_source(project, utt)[0]
    paraphrase = realize_canonical(best)
    outputs: dict[str, str | OutputFailure] = {}
    for lang in langs:
        try:
            outputs[lang] = translate_canonical(project, paraphrase, lang)
        except LiteError as e:
            outputs[lang] = OutputFailure(e.code, e.message)
    return TranslationResult(paraphrase, outputs)
