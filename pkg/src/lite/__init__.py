"""Phrasal translation grammars: compiler and deterministic runtime.

Rule files written in a two-construct DSL (``TrPhrase`` phrases and
``TrLex`` lexical entries) are assembled into projects, compiled into
finite recognition grammars, and executed by a translation runtime with
a canonical-paraphrase pivot.  Extensions cover six-stream sign tables
with SiGML output and branching voice questionnaires served over HTTP.
"""
from .assembler import (
    AssembledProject,
    ProjectManifest,
    TrLexEntry,
    TrPhraseUnit,
    assemble,
    generate_blank_targets,
    load_project,
    parse_manifest,
    refresh_blank_targets,
    validate,
)
from .engine import (
    MatchResult,
    TranslationResult,
    Utterance,
    match_source,
    realize_canonical,
    tokenize,
    translate,
    translate_canonical,
)
from .errors import LiteError
from .formalism import (
    Diagnostic,
    Pattern,
    RuleFile,
    Template,
    Token,
    parse_pattern,
    parse_rule_file,
    parse_template,
    serialize_pattern,
    serialize_rule_file,
)
from .grammar import (
    LanguageSize,
    RecognitionGrammar,
    compile_grammar,
    count_language,
    emit_grammar,
    enumerate_language,
    parse_lite_bnf,
)
from .questionnaire import (
    QuestionnaireDef,
    SessionState,
    confirm,
    export_responses,
    load_questionnaire,
    propose_utterance,
    record_answer,
    replay_export,
    start_session,
)
from .sign import (
    SignLexicon,
    SignRuleSet,
    SignTable,
    parse_sign_rules,
    refresh_sign_lexicon,
    render_sigml,
    sign_translate,
)

__version__ = "0.1.0"
