"""Recognition-grammar artifacts: compilation, counting, enumeration, emission.

A compiled grammar has one rule per category over a small regular
expression algebra (terminal, rule reference, sequence, alternation,
optional).  The reference graph is acyclic, so the language is finite:
its size is computed analytically (sequence multiplies, alternation
adds, optional adds one) and never by enumeration.

Counts are derivation counts.  Within a single lexical entry, identical
alternative branches are deduplicated at compile time, so a sloppy
``( coke | coke )`` does not inflate the count; overlap between
different rules is intentionally not deduplicated.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterator
from xml.sax.saxutils import escape, quoteattr

from .assembler import AssembledProject, TrLexEntry
from .errors import LiteError
from .formalism import Element, Group, Literal, Opt, Var, element_norm_key


class EmptyScope(LiteError):
    code = "EmptyScope"


class GrammarSyntaxError(LiteError):
    code = "GrammarSyntax"


# ---------------------------------------------------------------------------
# Grammar algebra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GTerm:
    symbol: str


@dataclass(frozen=True)
class GRef:
    name: str


@dataclass(frozen=True)
class GSeq:
    items: tuple["GExpr", ...]


@dataclass(frozen=True)
class GAlt:
    items: tuple["GExpr", ...]


@dataclass(frozen=True)
class GOpt:
    inner: "GExpr"


GExpr = GTerm | GRef | GSeq | GAlt | GOpt


@dataclass
class RecognitionGrammar:
    rules: dict[str, GExpr]
    start: str
    terminals: frozenset[str]
    language: str | None = None


@dataclass(frozen=True)
class LanguageSize:
    count: int
    vocabulary: int


def _seq(items: list[GExpr]) -> GExpr:
    return items[0] if len(items) == 1 else GSeq(tuple(items))


def _alt(items: list[GExpr]) -> GExpr:
    flat: list[GExpr] = []
    for it in items:
        if isinstance(it, GAlt):
            flat.extend(it.items)
        else:
            flat.append(it)
    return flat[0] if len(flat) == 1 else GAlt(tuple(flat))


def _var_sites(elements: tuple[Element, ...], counts: dict[str, int]) -> None:
    for el in elements:
        if isinstance(el, Var):
            counts[el.name] = counts.get(el.name, 0) + 1
        elif isinstance(el, Opt):
            _var_sites((el.inner,), counts)
        elif isinstance(el, Group):
            for alt in el.alternatives:
                _var_sites(alt, counts)


def _convert(elements: tuple[Element, ...], dedup: bool) -> GExpr | None:
    """Pattern to grammar expression.

    A variable may bind at most once per pattern, so occurrences of a
    repeated variable are expanded symbolically: branches where a second
    occurrence would have to match are dropped, which keeps the compiled
    language equal to the set of utterances the matcher accepts.
    Returns None for a pattern with no derivations at all (a mandatory
    repeated variable).
    """
    counts: dict[str, int] = {}
    _var_sites(elements, counts)
    repeated = frozenset(v for v, c in counts.items() if c > 1)
    branches = _conv_seq(elements, frozenset(), repeated, dedup)
    if not branches:
        return None
    return _alt([expr for expr, _ in branches])


def _conv_seq(elements, bound: frozenset, repeated: frozenset, dedup: bool
              ) -> list[tuple[GExpr, frozenset]]:
    states: list[tuple[list[GExpr], frozenset]] = [([], bound)]
    for el in elements:
        next_states: list[tuple[list[GExpr], frozenset]] = []
        for items, b in states:
            for expr, b2 in _conv_el(el, b, repeated, dedup):
                next_states.append((items + ([expr] if expr is not None else []), b2))
        states = next_states
    return [(_seq(items) if items else GSeq(()), b) for items, b in states]


def _conv_el(el: Element, bound: frozenset, repeated: frozenset, dedup: bool
             ) -> list[tuple[GExpr | None, frozenset]]:
    if isinstance(el, Literal):
        return [(GTerm(el.token.norm), bound)]
    if isinstance(el, Var):
        if el.name in repeated:
            if el.name in bound:
                return []
            return [(GRef(el.name), bound | {el.name})]
        return [(GRef(el.name), bound)]
    if isinstance(el, Opt):
        inner = _conv_el(el.inner, bound, repeated, dedup)
        if inner and all(b2 == bound for _, b2 in inner):
            exprs = [e for e, _ in inner if e is not None]
            return [(GOpt(_alt(exprs)), bound)] if exprs else [(None, bound)]
        return [*inner, (None, bound)]
    # Group: convert each alternative, then merge consecutive branches
    # with the same binding state so var-free groups stay one alternation.
    entries: list[tuple[GExpr, frozenset]] = []
    seen: set = set()
    for alt in el.alternatives:
        if dedup:
            key = element_norm_key(alt)
            if key in seen:
                continue
            seen.add(key)
        for expr, b2 in _conv_seq(alt, bound, repeated, dedup):
            entries.append((expr, b2))
    merged: list[tuple[GExpr, frozenset]] = []
    for expr, b2 in entries:
        if merged and merged[-1][1] == b2:
            merged[-1] = (_alt([merged[-1][0], expr]), b2)
        else:
            merged.append((expr, b2))
    return merged


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

def compile_grammar(project: AssembledProject,
                    scope: set[str] | None = None) -> RecognitionGrammar:
    """One rule per reachable category; ``$$top`` is restricted to units
    whose canonical key is in ``scope`` when one is given."""
    top_alts: list[GExpr] = []
    for unit in project.top_units():
        if scope is not None and unit.canonical_key not in scope:
            continue
        for line in unit.source_lines:
            expr = _convert(line.elements, dedup=False)
            if expr is not None:
                top_alts.append(expr)
    if not top_alts:
        raise EmptyScope("scope selects no $$top phrases")

    rules: dict[str, GExpr] = {"top": _alt(top_alts)}
    pending = _refs(rules["top"])
    while pending:
        cat = pending.pop()
        if cat in rules:
            continue
        alts: list[GExpr] = []
        for member in sorted([*project.units.get(cat, []), *project.lexemes.get(cat, [])],
                             key=lambda m: m.declaration_index):
            if isinstance(member, TrLexEntry):
                if member.source_pattern is not None:
                    expr = _convert(member.source_pattern.elements, dedup=True)
                    if expr is not None:
                        alts.append(expr)
            else:
                for line in member.source_lines:
                    expr = _convert(line.elements, dedup=False)
                    if expr is not None:
                        alts.append(expr)
        rules[cat] = _alt(alts) if alts else GAlt(())
        pending |= _refs(rules[cat]) - set(rules)

    terminals = frozenset(t for expr in rules.values() for t in _terms(expr))
    return RecognitionGrammar(rules, "top", terminals, project.source_language)


def _refs(expr: GExpr) -> set[str]:
    if isinstance(expr, GRef):
        return {expr.name}
    if isinstance(expr, (GSeq, GAlt)):
        out: set[str] = set()
        for it in expr.items:
            out |= _refs(it)
        return out
    if isinstance(expr, GOpt):
        return _refs(expr.inner)
    return set()


def _terms(expr: GExpr) -> set[str]:
    if isinstance(expr, GTerm):
        return {expr.symbol}
    if isinstance(expr, (GSeq, GAlt)):
        out: set[str] = set()
        for it in expr.items:
            out |= _terms(it)
        return out
    if isinstance(expr, GOpt):
        return _terms(expr.inner)
    return set()


# ---------------------------------------------------------------------------
# Counting and enumeration
# ---------------------------------------------------------------------------

def count_language(grammar: RecognitionGrammar) -> LanguageSize:
    """Analytic derivation count; linear in grammar size."""
    memo: dict[str, int] = {}

    def count(expr: GExpr) -> int:
        if isinstance(expr, GTerm):
            return 1
        if isinstance(expr, GRef):
            if expr.name not in memo:
                memo[expr.name] = count(grammar.rules[expr.name])
            return memo[expr.name]
        if isinstance(expr, GSeq):
            total = 1
            for it in expr.items:
                total *= count(it)
            return total
        if isinstance(expr, GAlt):
            return sum(count(it) for it in expr.items)
        return 1 + count(expr.inner)

    return LanguageSize(count(grammar.rules[grammar.start]), len(grammar.terminals))


def enumerate_language(grammar: RecognitionGrammar, limit: int) -> Iterator[str]:
    """Sentences in deterministic derivation order, at most ``limit``."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    produced = 0
    for tokens in _expand(grammar, grammar.rules[grammar.start]):
        yield " ".join(tokens)
        produced += 1
        if produced >= limit:
            return


def _expand(grammar: RecognitionGrammar, expr: GExpr) -> Iterator[tuple[str, ...]]:
    if isinstance(expr, GTerm):
        yield (expr.symbol,)
    elif isinstance(expr, GRef):
        yield from _expand(grammar, grammar.rules[expr.name])
    elif isinstance(expr, GSeq):
        if not expr.items:
            yield ()
            return
        for head in _expand(grammar, expr.items[0]):
            for tail in _expand(grammar, GSeq(expr.items[1:])):
                yield head + tail
    elif isinstance(expr, GAlt):
        for it in expr.items:
            yield from _expand(grammar, it)
    else:  # GOpt: present first, then absent
        yield from _expand(grammar, expr.inner)
        yield ()


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def rule_order(grammar: RecognitionGrammar) -> list[str]:
    """Start rule first, then breadth-first reference order."""
    order = [grammar.start]
    queue = [grammar.start]
    while queue:
        name = queue.pop(0)
        for ref in sorted(_refs(grammar.rules[name])):
            if ref not in order:
                order.append(ref)
                queue.append(ref)
    for name in sorted(grammar.rules):
        if name not in order:
            order.append(name)
    return order


def _rule_id(name: str) -> str:
    return name.replace("-", "_")


def emit_grammar(grammar: RecognitionGrammar, format: str) -> str:
    if format == "lite-bnf":
        return _emit_bnf(grammar)
    if format == "srgs-xml":
        return _emit_srgs(grammar)
    raise ValueError(f"unknown grammar format {format!r}")


def _bnf_expr(expr: GExpr, top: bool = False) -> str:
    if isinstance(expr, GTerm):
        return expr.symbol
    if isinstance(expr, GRef):
        return "$" + _rule_id(expr.name)
    if isinstance(expr, GOpt):
        return f"[ {_bnf_expr(expr.inner, top=True)} ]"
    if isinstance(expr, GSeq):
        return " ".join(_bnf_expr(it) for it in expr.items)
    body = " | ".join(_bnf_expr(it, top=True) for it in expr.items)
    return body if top else f"( {body} )"


def _emit_bnf(grammar: RecognitionGrammar) -> str:
    lines = []
    for name in rule_order(grammar):
        lines.append(f"{_rule_id(name)} = {_bnf_expr(grammar.rules[name], top=True)} ;")
    return "\n".join(lines) + "\n"


def _emit_srgs(grammar: RecognitionGrammar) -> str:
    out = io.StringIO()
    out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    lang = f' xml:lang={quoteattr(grammar.language)}' if grammar.language else ""
    out.write(f'<grammar xmlns="http://www.w3.org/2001/06/grammar" version="1.0"{lang}'
              f' root={quoteattr(_rule_id(grammar.start))} mode="voice">\n')
    for name in rule_order(grammar):
        scope = ' scope="public"' if name == grammar.start else ""
        out.write(f'  <rule id={quoteattr(_rule_id(name))}{scope}>\n')
        out.write("    " + _srgs_expr(grammar.rules[name]) + "\n")
        out.write("  </rule>\n")
    out.write("</grammar>\n")
    return out.getvalue()


def _srgs_expr(expr: GExpr) -> str:
    if isinstance(expr, GTerm):
        return escape(expr.symbol)
    if isinstance(expr, GRef):
        return f'<ruleref uri={quoteattr("#" + _rule_id(expr.name))}/>'
    if isinstance(expr, GOpt):
        return f'<item repeat="0-1">{_srgs_expr(expr.inner)}</item>'
    if isinstance(expr, GSeq):
        return " ".join(_srgs_expr(it) for it in expr.items)
    items = "".join(f"<item>{_srgs_expr(it)}</item>" for it in expr.items)
    return f"<one-of>{items}</one-of>"


# ---------------------------------------------------------------------------
# lite-bnf parsing (round-trip support)
# ---------------------------------------------------------------------------

def parse_lite_bnf(text: str) -> RecognitionGrammar:
    """Parse the ``name = body ;`` format produced by emit_grammar."""
    rules: dict[str, GExpr] = {}
    start: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, sep, body = line.partition("=")
        name = name.strip()
        if not sep or not body.rstrip().endswith(";"):
            raise GrammarSyntaxError(f"line {lineno}: expected 'name = body ;'")
        toks = _lex_bnf(body.rstrip()[:-1])
        expr, pos = _parse_bnf_alt(toks, 0)
        if pos != len(toks):
            raise GrammarSyntaxError(f"line {lineno}: trailing tokens in rule {name!r}")
        rules[name] = expr
        if start is None:
            start = name
    if start is None:
        raise GrammarSyntaxError("no rules")
    for name, expr in rules.items():
        for ref in _refs(expr):
            if ref not in rules:
                raise GrammarSyntaxError(f"rule {name!r} references undefined {ref!r}")
    terminals = frozenset(t for expr in rules.values() for t in _terms(expr))
    return RecognitionGrammar(rules, start, terminals)


def _lex_bnf(text: str) -> list[str]:
    toks: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()[]|":
            toks.append(ch)
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()[]|":
                j += 1
            toks.append(text[i:j])
            i = j
    return toks


def _parse_bnf_alt(toks: list[str], i: int) -> tuple[GExpr, int]:
    branches = []
    while True:
        expr, i = _parse_bnf_seq(toks, i)
        branches.append(expr)
        if i < len(toks) and toks[i] == "|":
            i += 1
            continue
        break
    return _alt(branches), i


def _parse_bnf_seq(toks: list[str], i: int) -> tuple[GExpr, int]:
    items: list[GExpr] = []
    while i < len(toks) and toks[i] not in (")", "]", "|"):
        tok = toks[i]
        if tok == "(":
            expr, i = _parse_bnf_alt(toks, i + 1)
            if i >= len(toks) or toks[i] != ")":
                raise GrammarSyntaxError("missing ')'")
            items.append(expr)
            i += 1
        elif tok == "[":
            expr, i = _parse_bnf_alt(toks, i + 1)
            if i >= len(toks) or toks[i] != "]":
                raise GrammarSyntaxError("missing ']'")
            items.append(GOpt(expr))
            i += 1
        elif tok.startswith("$"):
            items.append(GRef(tok[1:]))
            i += 1
        else:
            items.append(GTerm(tok))
            i += 1
    if not items:
        raise GrammarSyntaxError("empty alternative")
    return _seq(items), i
