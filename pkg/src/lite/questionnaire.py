"""Branching voice questionnaires.

A questionnaire is a JSON document:

    {
      "id": "survey-id",
      "title": {"english": "..."},
      "start_field": "f1",
      "fields": [
        {"id": "f1",
         "heading": "Shown to the interviewer",
         "keys": ["canonical question text", ...],
         "answers": [
           {"id": "yes", "labels": {"french": "Oui"},
            "icon": "icons/yes.png", "audio": "audio/yes.mp3",
            "route": "f2"},
           ...
         ],
         "require_rephrase_once": false},
        ...
      ]
    }

``keys`` are canonical keys of ``$$top`` phrases; ``route`` is a field
id or the literal ``END``.  During an interview only the grammar slice
for the active field's keys is matched, so an in-coverage utterance
belonging to another field is still answered with a rephrase prompt.

Sessions are single-writer state machines over an append-only event
transcript: FieldEntered, UtteranceProposed, Confirmed, Rejected,
Answered.  An answer may only be recorded after a confirmation, and a
re-entered field overwrites its earlier answer.
"""
from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable

from .assembler import AssembledProject
from .engine import NoMatch, match_source, realize_canonical, tokenize, translate_canonical
from .errors import LiteError
from .formalism import Diagnostic, PatternSyntaxError, parse_template

END = "END"


class UnknownQuestionnaire(LiteError):
    code = "UnknownQuestionnaire"


class UnknownLanguage(LiteError):
    code = "UnknownLanguage"


class SessionEnded(LiteError):
    code = "SessionEnded"


class NothingToConfirm(LiteError):
    code = "NothingToConfirm"


class AnswerBeforeConfirm(LiteError):
    code = "AnswerBeforeConfirm"


class UnknownAnswer(LiteError):
    code = "UnknownAnswer"


# ---------------------------------------------------------------------------
# Definition
# ---------------------------------------------------------------------------

@dataclass
class AnswerOption:
    id: str
    labels: dict[str, str]
    icon_ref: str
    audio_ref: str | None
    route: str

    def label_for(self, lang: str) -> str:
        return self.labels.get(lang, self.id)


@dataclass
class FieldDef:
    id: str
    heading: str
    question_keys: tuple[str, ...]
    answers: list[AnswerOption]
    routing: dict[str, str]
    require_rephrase_once: bool = False


@dataclass
class QuestionnaireDef:
    id: str
    title: dict[str, str]
    start_field: str
    fields: list[FieldDef]
    fields_by_id: dict[str, FieldDef] = field(default_factory=dict)

    def field_def(self, field_id: str) -> FieldDef:
        return self.fields_by_id[field_id]


def load_questionnaire(text: str, project: AssembledProject,
                       path: str = "<questionnaire>") -> tuple[QuestionnaireDef | None, list[Diagnostic]]:
    """Parse and validate a questionnaire against the project's coverage."""
    diags: list[Diagnostic] = []

    def err(code: str, message: str) -> None:
        diags.append(Diagnostic("error", code, message, path, 1))

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        err("BadQuestionnaire", f"not valid JSON: {e}")
        return None, diags
    if not isinstance(doc, dict):
        err("BadQuestionnaire", "top level must be an object")
        return None, diags

    known_keys = {u.canonical_key for u in project.top_units()}
    fields: list[FieldDef] = []
    ids: set[str] = set()
    for fdoc in doc.get("fields", []):
        fid = str(fdoc.get("id", ""))
        if not fid:
            err("BadQuestionnaire", "field without id")
            continue
        if fid in ids:
            err("BadQuestionnaire", f"duplicate field id {fid!r}")
            continue
        ids.add(fid)
        keys: list[str] = []
        for key_text in fdoc.get("keys", []):
            try:
                key = parse_template(str(key_text)).key()
            except PatternSyntaxError as e:
                err("UnknownQuestionKey", f"field {fid!r}: malformed key {key_text!r}: {e.message}")
                continue
            if key not in known_keys:
                err("UnknownQuestionKey", f"field {fid!r}: no rule has canonical '{key}'")
                continue
            keys.append(key)
        if not keys:
            err("UnknownQuestionKey", f"field {fid!r} has no usable question keys")
        answers: list[AnswerOption] = []
        routing: dict[str, str] = {}
        for adoc in fdoc.get("answers", []):
            aid = str(adoc.get("id", ""))
            if not aid:
                err("BadQuestionnaire", f"field {fid!r}: answer without id")
                continue
            route = adoc.get("route")
            if not route:
                err("RoutingGap", f"field {fid!r}: answer {aid!r} has no route")
                route = END
            answers.append(AnswerOption(aid, dict(adoc.get("labels", {})),
                                        str(adoc.get("icon", "")), adoc.get("audio"), str(route)))
            routing[aid] = str(route)
        if not answers:
            err("BadQuestionnaire", f"field {fid!r} has no answers")
        fields.append(FieldDef(fid, str(fdoc.get("heading", fid)), tuple(keys), answers,
                               routing, bool(fdoc.get("require_rephrase_once", False))))

    qdef = QuestionnaireDef(str(doc.get("id", "questionnaire")), dict(doc.get("title", {})),
                            str(doc.get("start_field", "")), fields,
                            {f.id: f for f in fields})

    if qdef.start_field not in qdef.fields_by_id:
        err("RoutingGap", f"start_field {qdef.start_field!r} does not exist")
    for f in fields:
        for aid, target in f.routing.items():
            if target != END and target not in qdef.fields_by_id:
                err("RoutingGap", f"field {f.id!r}: answer {aid!r} routes to unknown {target!r}")
    if qdef.start_field in qdef.fields_by_id:
        reachable = {qdef.start_field}
        frontier = [qdef.start_field]
        while frontier:
            f = qdef.fields_by_id[frontier.pop()]
            for target in f.routing.values():
                if target != END and target in qdef.fields_by_id and target not in reachable:
                    reachable.add(target)
                    frontier.append(target)
        for f in fields:
            if f.id not in reachable:
                err("UnreachableField", f"field {f.id!r} can never be reached")

    if any(d.severity == "error" for d in diags):
        return None, diags
    return qdef, diags


def active_slice(qdef: QuestionnaireDef, field_id: str, project: AssembledProject):
    """The recognition grammar restricted to the field's question keys."""
    from .grammar import compile_grammar

    return compile_grammar(project, scope=set(qdef.field_def(field_id).question_keys))


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------

@dataclass
class SessionEvent:
    kind: str  # FieldEntered | UtteranceProposed | Confirmed | Rejected | Answered
    timestamp: float
    field: str | None = None
    raw: str | None = None
    paraphrase: str | None = None  # None on a NoMatch proposal
    answer: str | None = None

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "t": self.timestamp}
        for name in ("field", "raw", "paraphrase", "answer"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.kind == "UtteranceProposed" and self.paraphrase is None:
            out["nomatch"] = True
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "SessionEvent":
        return cls(doc["kind"], doc.get("t", 0.0), doc.get("field"), doc.get("raw"),
                   doc.get("paraphrase"), doc.get("answer"))


@dataclass
class ProposalResult:
    paraphrase: str | None
    translation: str | None
    nomatch: bool

    @property
    def rephrase_prompt(self) -> str | None:
        return None if not self.nomatch else "Not understood. Please rephrase the question."


@dataclass
class SessionState:
    session_id: str
    questionnaire: QuestionnaireDef
    project: AssembledProject
    respondent_language: str
    current_field: str
    transcript: list[SessionEvent] = field(default_factory=list)
    responses: dict[str, str] = field(default_factory=dict)
    clock: Callable[[], float] = time.time

    @property
    def ended(self) -> bool:
        return self.current_field == END

    def awaiting(self) -> str:
        """What the session expects next: proposal, confirmation, answer
        or nothing (ended)."""
        if self.ended:
            return "ended"
        last = self.transcript[-1] if self.transcript else None
        if last and last.kind == "UtteranceProposed" and last.paraphrase is not None:
            return "confirmation"
        if last and last.kind == "Confirmed":
            return "answer"
        return "proposal"

    def _append(self, event: SessionEvent) -> SessionEvent:
        self.transcript.append(event)
        return event


def start_session(qdef: QuestionnaireDef, project: AssembledProject, respondent_lang: str,
                  clock: Callable[[], float] = time.time,
                  session_id: str | None = None) -> SessionState:
    if respondent_lang not in project.target_languages:
        raise UnknownLanguage(f"{respondent_lang!r} is not a target language of this project")
    session = SessionState(session_id or uuid.uuid4().hex, qdef, project, respondent_lang,
                           qdef.start_field, clock=clock)
    session._append(SessionEvent("FieldEntered", clock(), field=qdef.start_field))
    return session


def propose_utterance(session: SessionState, raw: str) -> ProposalResult:
    """Match against the active field's slice only.  Out-of-slice but
    in-coverage utterances get a rephrase prompt, same as gibberish."""
    if session.ended:
        raise SessionEnded("the interview is over")
    fdef = session.questionnaire.field_def(session.current_field)
    scope = set(fdef.question_keys)
    try:
        utt = tokenize(raw)
        matches = match_source(session.project, utt, scope=scope)
    except (NoMatch, LiteError):
        session._append(SessionEvent("UtteranceProposed", session.clock(),
                                     field=session.current_field, raw=raw))
        return ProposalResult(None, None, nomatch=True)
    paraphrase = realize_canonical(matches[0])
    translation = translate_canonical(session.project, paraphrase, session.respondent_language)
    session._append(SessionEvent("UtteranceProposed", session.clock(),
                                 field=session.current_field, raw=raw, paraphrase=paraphrase))
    return ProposalResult(paraphrase, translation, nomatch=False)


def confirm(session: SessionState, accept: bool) -> list[AnswerOption] | None:
    """Approve or reject the pending paraphrase.  On approval the
    field's answer options are returned for the respondent."""
    if session.awaiting() != "confirmation":
        raise NothingToConfirm("no utterance is awaiting confirmation")
    if accept:
        session._append(SessionEvent("Confirmed", session.clock(), field=session.current_field))
        return list(session.questionnaire.field_def(session.current_field).answers)
    session._append(SessionEvent("Rejected", session.clock(), field=session.current_field))
    return None


def record_answer(session: SessionState, answer_id: str) -> SessionState:
    if session.ended:
        raise SessionEnded("the interview is over")
    if session.awaiting() != "answer":
        raise AnswerBeforeConfirm("answers require a confirmed question")
    fdef = session.questionnaire.field_def(session.current_field)
    if answer_id not in fdef.routing:
        raise UnknownAnswer(f"{answer_id!r} is not an answer of field {fdef.id!r}")
    session._append(SessionEvent("Answered", session.clock(),
                                 field=session.current_field, answer=answer_id))
    session.responses[fdef.id] = answer_id
    target = fdef.routing[answer_id]
    session.current_field = target
    if target != END:
        session._append(SessionEvent("FieldEntered", session.clock(), field=target))
    return session


# ---------------------------------------------------------------------------
# Export and replay
# ---------------------------------------------------------------------------

def export_responses(session: SessionState) -> dict:
    """One record per field visit that saw any activity, in visit order,
    plus the full transcript.  Deterministic for a given session."""
    records: list[dict] = []
    current: dict | None = None
    pending: str | None = None
    for ev in session.transcript:
        if ev.kind == "FieldEntered":
            if current is not None and (current["utterances"] or current["answer"]):
                records.append(current)
            current = {"field": ev.field, "answer": None, "paraphrase": None,
                       "utterances": [], "entered_at": ev.timestamp, "answered_at": None}
            pending = None
        elif current is not None:
            if ev.kind == "UtteranceProposed":
                current["utterances"].append(ev.raw)
                pending = ev.paraphrase
            elif ev.kind == "Confirmed":
                current["paraphrase"] = pending
            elif ev.kind == "Answered":
                current["answer"] = ev.answer
                current["answered_at"] = ev.timestamp
    if current is not None and (current["utterances"] or current["answer"]):
        records.append(current)
    return {
        "session_id": session.session_id,
        "questionnaire": session.questionnaire.id,
        "respondent_language": session.respondent_language,
        "completed": session.ended,
        "responses": dict(session.responses),
        "records": records,
        "transcript": [ev.to_dict() for ev in session.transcript],
    }


def export_json(session: SessionState) -> str:
    return json.dumps(export_responses(session), ensure_ascii=False, indent=2) + "\n"


def replay_export(qdef: QuestionnaireDef, project: AssembledProject, export: dict,
                  clock: Callable[[], float] = time.time) -> SessionState:
    """Drive a fresh session with the inputs recorded in an export; used
    to check that interviews replay deterministically."""
    session = start_session(qdef, project, export["respondent_language"], clock=clock)
    for ev in export["transcript"]:
        kind = ev["kind"]
        if kind == "UtteranceProposed":
            propose_utterance(session, ev["raw"])
        elif kind == "Confirmed":
            confirm(session, True)
        elif kind == "Rejected":
            confirm(session, False)
        elif kind == "Answered":
            record_answer(session, ev["answer"])
    return session
