from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lite.formalism import (
    Group,
    LexFragment,
    Literal,
    Opt,
    Pattern,
    PatternSyntaxError,
    RuleFile,
    SOURCE,
    Template,
    Token,
    UnitFragment,
    Var,
    Origin,
    derive_template,
    parse_pattern,
    parse_rule_file,
    parse_template,
    serialize_pattern,
    serialize_rule_file,
    target_role,
)


def lit(text: str) -> Literal:
    return Literal(Token.from_display(text))


# ---------------------------------------------------------------------------
# parse_pattern
# ---------------------------------------------------------------------------

def test_parse_alternation():
    assert parse_pattern("( hello | hi )") == Pattern(
        (Group(((lit("hello"),), (lit("hi"),))),))


def test_parse_optional_group_before_literals():
    assert parse_pattern("?(est-ce que) la douleur") == Pattern((
        Opt(Group(((lit("est-ce"), lit("que")),))),
        lit("la"),
        lit("douleur"),
    ))


def test_parse_empty_alternative_is_an_error():
    with pytest.raises(PatternSyntaxError) as exc:
        parse_pattern("(a | )")
    assert exc.value.code == "EmptyAlternative"


def test_parse_optional_variable_and_token():
    pat = parse_pattern("i ( want | would like ) $$food-or-drink ?please")
    assert pat.elements[0] == lit("i")
    assert isinstance(pat.elements[1], Group)
    assert pat.elements[2] == Var("food-or-drink")
    assert pat.elements[3] == Opt(lit("please"))


@pytest.mark.parametrize("text,code", [
    ("( a | b", "UnbalancedParenthesis"),
    ("a ) b", "UnbalancedParenthesis"),
    ("hello ?", "DanglingOptional"),
    ("? | x", "DanglingOptional"),
    ("$$", "BadVariableName"),
    ("$$(x)", "BadVariableName"),
    ("", "EmptyPattern"),
    ("   ", "EmptyPattern"),
])
def test_parse_pattern_errors(text, code):
    with pytest.raises(PatternSyntaxError) as exc:
        parse_pattern(text)
    assert exc.value.code == code


def test_double_optional_collapses():
    assert parse_pattern("? ?please") == parse_pattern("?please")


def test_token_norm_is_case_insensitive_nfc():
    token = Token.from_display("Genève")
    assert token.norm == "genève"
    assert token.display == "Genève"


def test_nullable_pattern_detection():
    assert parse_pattern("?a ?b").is_nullable()
    assert parse_pattern("( ?a | b )").is_nullable()
    assert not parse_pattern("a ?b").is_nullable()


def test_template_rejects_groups_and_duplicate_vars():
    with pytest.raises(PatternSyntaxError):
        parse_template("je ( veux | voudrais )")
    with pytest.raises(PatternSyntaxError):
        parse_template("$$a encore $$a")
    with pytest.raises(PatternSyntaxError):
        parse_template("?bare-optional-token")


def test_template_key_normalizes_case_and_spacing():
    assert parse_template("I  Want $$x ?$$y").key() == "i want $$x ?$$y"


def test_derive_template_takes_first_alternative_drops_optionals():
    tmpl = derive_template(parse_pattern("( hello | hi ) ?there $$x"))
    assert tmpl.key() == "hello $$x"


# ---------------------------------------------------------------------------
# parse_rule_file
# ---------------------------------------------------------------------------

CAFE_SOURCE_PIECES = """\
TrPhrase $$top
Source i ( want | would like ) $$food-or-drink ?please
Source ( could | can ) i have $$food-or-drink ?please
Target/english i want $$food-or-drink please
EndTrPhrase

TrLex $$food-or-drink source="a (coca-cola | coke)" english="a coke"
"""


def test_parse_source_side_file():
    rf, diags = parse_rule_file(CAFE_SOURCE_PIECES, SOURCE, "cafe.lite")
    assert diags == []
    assert len(rf.units) == 1 and len(rf.lexemes) == 1
    unit = rf.units[0]
    assert unit.category == "top"
    assert len(unit.source_lines) == 2
    assert unit.targets["english"].key() == "i want $$food-or-drink please"
    lex = rf.lexemes[0]
    assert lex.category == "food-or-drink"
    assert lex.values["english"] == (Token.from_display("a"), Token.from_display("coke"))
    assert lex.source_pattern is not None


def test_parse_empty_file():
    rf, diags = parse_rule_file("", SOURCE)
    assert diags == []
    assert rf.units == [] and rf.lexemes == []


def test_unterminated_block_reported_at_block_start():
    rf, diags = parse_rule_file("# intro\nTrPhrase $$top\nSource hello\n", SOURCE, "f.lite")
    assert [d.code for d in diags] == ["UnterminatedBlock"]
    assert diags[0].line == 2


def test_placeholder_and_comment_handling():
    text = "# comment\nTrPhrase $$top\nTarget/english hello\nTarget/french ?\nEndTrPhrase\n"
    rf, diags = parse_rule_file(text, target_role("french"))
    assert diags == []
    assert rf.units[0].targets["french"] is None
    assert rf.units[0].targets["english"] is not None


@pytest.mark.parametrize("text,code", [
    ("Banana $$top\n", "UnknownDirective"),
    ("Source hello\n", "UnknownDirective"),
    ("TrPhrase top\nEndTrPhrase\n", "MissingCategory"),
    ("TrLex $$x source=\"a\" source=\"b\"\n", "DuplicateAttributeKey"),
    ("TrPhrase $$a\nTarget/fr x\nTarget/fr y\nEndTrPhrase\n", "DuplicateAttributeKey"),
    ("TrLex $$x source=\"$$y\"\n", "VarInLexSource"),
])
def test_rule_file_diagnostics(text, code):
    _, diags = parse_rule_file(text, SOURCE, "f.lite")
    assert code in [d.code for d in diags]


def test_diagnostic_locations_exist_in_input():
    text = "TrPhrase $$top\nSource (a | )\nEndTrPhrase\nJunk here\n"
    _, diags = parse_rule_file(text, SOURCE, "f.lite")
    lines = text.splitlines()
    assert diags
    for d in diags:
        assert 1 <= d.line <= len(lines)


# ---------------------------------------------------------------------------
# serialize_rule_file
# ---------------------------------------------------------------------------

def test_serialize_empty_file_is_single_newline():
    assert serialize_rule_file(RuleFile(SOURCE, "<f>", [], [])) == "\n"


def test_round_trip_is_fixpoint_on_french_pieces():
    text = """\
TrPhrase $$top
Target/english i want $$food-or-drink please
Target/french je voudrais $$food-or-drink s'il vous plaît
EndTrPhrase

TrLex $$food-or-drink english="a coke" french="un coca"
"""
    rf1, diags = parse_rule_file(text, target_role("french"))
    assert diags == []
    out1 = serialize_rule_file(rf1, canonical_language="english")
    rf2, diags2 = parse_rule_file(out1, target_role("french"))
    assert diags2 == []
    assert rf2.units == rf1.units and rf2.lexemes == rf1.lexemes
    assert serialize_rule_file(rf2, canonical_language="english") == out1


def test_serialized_attribute_order_source_then_canonical_then_alpha():
    text = 'TrLex $$x german="g" source="s" english="e" arabic="a"\n'
    rf, _ = parse_rule_file(text, SOURCE)
    out = serialize_rule_file(rf, canonical_language="english")
    assert out == 'TrLex $$x source="s" english="e" arabic="a" german="g"\n'


# ---------------------------------------------------------------------------
# Property tests
# ---------------------------------------------------------------------------

WORDS = ["hello", "hi", "want", "coke", "please", "douleur", "vive", "s'il",
         "Genève", "matin", "coca-cola", "une"]
VAR_NAMES = ["food-or-drink", "qual", "PP_time", "adv", "x1"]

tokens_st = st.sampled_from(WORDS)
var_names_st = st.sampled_from(VAR_NAMES)


def elements_st(depth: int):
    base = st.one_of(
        tokens_st.map(lit),
        var_names_st.map(Var),
    )
    if depth <= 0:
        inner = base
    else:
        group = st.lists(
            st.lists(elements_st(depth - 1), min_size=1, max_size=3).map(tuple),
            min_size=1, max_size=3,
        ).map(lambda alts: Group(tuple(alts)))
        inner = st.one_of(base, group)
    return st.one_of(inner, inner.map(Opt))


patterns_st = st.lists(elements_st(2), min_size=1, max_size=4).map(lambda els: Pattern(tuple(els)))


@given(patterns_st)
@settings(max_examples=200)
def test_pattern_serialize_parse_round_trip(pattern):
    assert parse_pattern(serialize_pattern(pattern)) == pattern


@st.composite
def templates_st(draw):
    parts = draw(st.lists(st.one_of(tokens_st.map(lit), var_names_st.map(Var)),
                          min_size=1, max_size=5))
    seen: set[str] = set()
    elements = []
    for el in parts:
        if isinstance(el, Var):
            if el.name in seen:
                continue
            seen.add(el.name)
            if draw(st.booleans()):
                el = Opt(el)
        elements.append(el)
    return Template(tuple(elements))


@st.composite
def rule_files_st(draw):
    units = []
    lexemes = []
    n = draw(st.integers(min_value=0, max_value=4))
    for idx in range(n):
        origin = Origin("<gen>", idx + 1, idx + 1)
        if draw(st.booleans()):
            source_lines = draw(st.lists(patterns_st, min_size=0, max_size=2))
            tags = draw(st.sets(st.sampled_from(["english", "french", "german"]),
                                min_size=1, max_size=3))
            targets = {}
            for tag in tags:
                targets[tag] = draw(st.one_of(st.none(), templates_st()))
            units.append(UnitFragment(draw(var_names_st), source_lines, targets, origin, idx))
        else:
            pat = draw(patterns_st.filter(lambda p: not _has_vars(p.elements)))
            values = {"english": draw(st.one_of(
                st.none(),
                st.lists(tokens_st, min_size=1, max_size=3).map(
                    lambda ws: tuple(Token.from_display(w) for w in ws)),
            ))}
            lexemes.append(LexFragment(draw(var_names_st), pat, values, origin, idx))
    return RuleFile(SOURCE, "<gen>", units, lexemes)


def _has_vars(elements) -> bool:
    from lite.formalism import pattern_variables

    return bool(pattern_variables(tuple(elements)))


@given(rule_files_st())
@settings(max_examples=100)
def test_rule_file_round_trip_random(rf):
    text = serialize_rule_file(rf, canonical_language="english")
    parsed, diags = parse_rule_file(text, SOURCE)
    assert diags == []
    assert parsed.units == rf.units
    assert parsed.lexemes == rf.lexemes
    assert serialize_rule_file(parsed, canonical_language="english") == text
