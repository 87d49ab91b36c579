"""HTTP+JSON service exposing translation and interview sessions.

The project is loaded once at startup and shared immutably between
requests; ``POST /reload`` builds a fresh project from disk and swaps it
in atomically, so no request ever sees a half-loaded grammar.  Sessions
live in memory, each serialized by its own lock; an optional append-only
journal (one JSON line per event) allows sessions to be recovered after
a crash.

Clients send recognized text; an optional ``nbest`` list is accepted for
interface compatibility but only its first entry is used.
"""
from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field as dc_field
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import questionnaire as q
from .assembler import AssembledProject, load_project
from .engine import OutputFailure, tokenize, translate, translate_canonical
from .errors import LiteError
from .formalism import has_errors
from .sign import load_sign_lexicon, render_sigml, sign_translate

_STATUS_BY_CODE = {
    "NoMatch": 422,
    "NoCanonicalMatch": 422,
    "EmptyUtterance": 422,
    "MissingTarget": 422,
    "MissingSignTarget": 422,
    "MissingSignStream": 422,
    "MissingLexiconEntry": 422,
    "SignRulesInvalid": 422,
    "EmptyScope": 422,
    "UnknownLanguage": 422,
    "UnknownAnswer": 422,
    "UnknownQuestionnaire": 404,
    "UnknownSession": 404,
    "SessionEnded": 409,
    "NothingToConfirm": 409,
    "AnswerBeforeConfirm": 409,
    "TooManySessions": 429,
    "BadRequest": 400,
}


class UnknownSession(LiteError):
    code = "UnknownSession"


class TooManySessions(LiteError):
    code = "TooManySessions"


class BadRequest(LiteError):
    code = "BadRequest"


class ProjectLoadError(LiteError):
    code = "ProjectLoadError"


@dataclass
class ServiceConfig:
    manifest_path: str
    questionnaire_paths: tuple[str, ...] = ()
    journal_path: str | None = None
    max_sessions: int = 200
    host: str = "127.0.0.1"
    port: int = 8099
    clock: Callable[[], float] = time.time


@dataclass
class _Session:
    state: q.SessionState
    lock: threading.Lock = dc_field(default_factory=threading.Lock)


class ServiceState:
    """Mutable service state; the project reference is swapped atomically
    on reload while sessions keep the project they started with."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.lock = threading.Lock()
        self.sessions: dict[str, _Session] = {}
        self.project: AssembledProject = None  # type: ignore[assignment]
        self.questionnaires: dict[str, q.QuestionnaireDef] = {}
        self.load()
        if config.journal_path:
            self._recover_journal()

    def load(self) -> None:
        project, diags = load_project(self.config.manifest_path)
        if project is None:
            raise ProjectLoadError(
                "project failed to load:\n" + "\n".join(str(d) for d in diags))
        questionnaires: dict[str, q.QuestionnaireDef] = {}
        qpaths = list(self.config.questionnaire_paths)
        qpaths += [project.manifest.resolve(p) for p in project.manifest.questionnaire_files]
        for path in qpaths:
            with open(path, encoding="utf-8") as fh:
                qdef, qdiags = q.load_questionnaire(fh.read(), project, path)
            if qdef is None or has_errors(qdiags):
                raise ProjectLoadError(
                    f"questionnaire {path} failed to load:\n" + "\n".join(map(str, qdiags)))
            questionnaires[qdef.id] = qdef
        # Swap both references under the lock only after everything loaded.
        with self.lock:
            self.project = project
            self.questionnaires = questionnaires

    # -- journal ------------------------------------------------------------

    def journal(self, record: dict) -> None:
        if not self.config.journal_path:
            return
        with self.lock:
            with open(self.config.journal_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def journal_events(self, state: q.SessionState, start: int) -> None:
        for ev in state.transcript[start:]:
            self.journal({"op": "event", "session": state.session_id, "event": ev.to_dict()})

    def _recover_journal(self) -> None:
        path = self.config.journal_path
        if not path or not os.path.exists(path):
            return
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if rec["op"] == "start":
                    qdef = self.questionnaires.get(rec["questionnaire"])
                    if qdef is None:
                        continue
                    state = q.SessionState(rec["session"], qdef, self.project,
                                           rec["respondent_language"], qdef.start_field,
                                           clock=self.config.clock)
                    self.sessions[rec["session"]] = _Session(state)
                elif rec["op"] == "event":
                    sess = self.sessions.get(rec["session"])
                    if sess is None:
                        continue
                    self._apply_journaled(sess.state, q.SessionEvent.from_dict(rec["event"]))

    @staticmethod
    def _apply_journaled(state: q.SessionState, ev: q.SessionEvent) -> None:
        state.transcript.append(ev)
        if ev.kind == "FieldEntered":
            state.current_field = ev.field or state.current_field
        elif ev.kind == "Answered" and ev.field is not None:
            state.responses[ev.field] = ev.answer or ""
            target = state.questionnaire.field_def(ev.field).routing.get(ev.answer or "")
            if target is not None:
                state.current_field = target

    # -- sessions -----------------------------------------------------------

    def create_session(self, questionnaire_id: str, respondent_lang: str) -> q.SessionState:
        with self.lock:
            qdef = self.questionnaires.get(questionnaire_id)
            project = self.project
            if qdef is None:
                raise q.UnknownQuestionnaire(f"no questionnaire {questionnaire_id!r} is loaded")
            if len(self.sessions) >= self.config.max_sessions:
                raise TooManySessions(f"session limit {self.config.max_sessions} reached")
        state = q.start_session(qdef, project, respondent_lang, clock=self.config.clock)
        with self.lock:
            self.sessions[state.session_id] = _Session(state)
        self.journal({"op": "start", "session": state.session_id,
                      "questionnaire": qdef.id, "respondent_language": respondent_lang})
        self.journal_events(state, 0)
        return state

    def session(self, session_id: str) -> _Session:
        with self.lock:
            sess = self.sessions.get(session_id)
        if sess is None:
            raise UnknownSession(f"no session {session_id!r}")
        return sess


# ---------------------------------------------------------------------------
# App
# ---------------------------------------------------------------------------

def _field_view(qdef: q.QuestionnaireDef, field_id: str) -> dict | None:
    if field_id == q.END:
        return None
    fdef = qdef.field_def(field_id)
    return {"id": fdef.id, "heading": fdef.heading, "keys": list(fdef.question_keys)}


def _answers_view(answers: list[q.AnswerOption], lang: str) -> list[dict]:
    return [{"id": a.id, "label": a.label_for(lang), "icon": a.icon_ref, "audio": a.audio_ref}
            for a in answers]


def _session_view(state: q.SessionState) -> dict:
    qdef = state.questionnaire
    awaiting = state.awaiting()
    pending = None
    if awaiting == "confirmation":
        last = state.transcript[-1]
        pending = {"paraphrase": last.paraphrase,
                   "translation": translate_canonical(state.project, last.paraphrase,
                                                      state.respondent_language)}
    answers = None
    respondent_question = None
    if awaiting == "answer":
        fdef = qdef.field_def(state.current_field)
        answers = _answers_view(fdef.answers, state.respondent_language)
        confirmed = next((ev for ev in reversed(state.transcript)
                          if ev.kind == "UtteranceProposed" and ev.paraphrase), None)
        if confirmed is not None:
            respondent_question = translate_canonical(state.project, confirmed.paraphrase,
                                                      state.respondent_language)
    return {
        "session_id": state.session_id,
        "questionnaire": qdef.id,
        "respondent_language": state.respondent_language,
        "current_field": _field_view(qdef, state.current_field),
        "ended": state.ended,
        "awaiting": awaiting,
        "pending": pending,
        "answers": answers,
        "respondent_question": respondent_question,
        "responses": dict(state.responses),
        "progress": {"visited": len(state.responses), "total": len(qdef.fields)},
        "transcript": [ev.to_dict() for ev in state.transcript],
    }


def create_app(config: ServiceConfig) -> FastAPI:
    state = ServiceState(config)
    app = FastAPI(title="lite translation service", docs_url=None, redoc_url=None)
    app.state.lite = state

    @app.exception_handler(LiteError)
    async def _lite_error(_request: Request, exc: LiteError):
        status = _STATUS_BY_CODE.get(exc.code, 500)
        return JSONResponse({"code": exc.code, "message": exc.message}, status_code=status)

    async def _body(request: Request) -> dict:
        try:
            doc = json.loads(await request.body() or b"{}")
        except json.JSONDecodeError as e:
            raise BadRequest(f"request body is not valid JSON: {e}")
        if not isinstance(doc, dict):
            raise BadRequest("request body must be a JSON object")
        return doc

    def _text_of(doc: dict) -> str:
        text = doc.get("text")
        if text is None:
            nbest = doc.get("nbest")
            if isinstance(nbest, list) and nbest:
                text = nbest[0]  # single-best only
        if not isinstance(text, str) or not text.strip():
            raise BadRequest("missing 'text'")
        return text

    @app.get("/health")
    async def health():
        return {"status": "ok", "project": state.project.manifest.id}

    @app.post("/reload")
    async def reload():
        state.load()
        return {"status": "reloaded", "project": state.project.manifest.id}

    @app.post("/translate")
    async def do_translate(request: Request):
        doc = await _body(request)
        langs = doc.get("langs") or list(state.project.target_languages)
        if not isinstance(langs, list) or not all(isinstance(l, str) for l in langs):
            raise BadRequest("'langs' must be a list of language tags")
        result = translate(state.project, tokenize(_text_of(doc)), langs)
        outputs: dict[str, object] = {}
        for lang, value in result.outputs.items():
            if isinstance(value, OutputFailure):
                outputs[lang] = {"error": value.code}
            else:
                outputs[lang] = value
        return {"paraphrase": result.paraphrase, "outputs": outputs}

    @app.post("/sign/translate")
    async def do_sign(request: Request):
        doc = await _body(request)
        lang = doc.get("lang")
        if not isinstance(lang, str):
            raise BadRequest("missing 'lang'")
        project = state.project
        table = sign_translate(project, _text_of(doc), lang)
        lexicon, _ = load_sign_lexicon(project, lang)
        sigml = render_sigml(table, lexicon)
        return {"table": {s: list(v) for s, v in table.streams.items()}, "sigml": sigml}

    @app.post("/sessions")
    async def create_session(request: Request):
        doc = await _body(request)
        qid = doc.get("questionnaire")
        lang = doc.get("respondent_lang")
        if not isinstance(qid, str) or not isinstance(lang, str):
            raise BadRequest("need 'questionnaire' and 'respondent_lang'")
        s = state.create_session(qid, lang)
        return {"session_id": s.session_id,
                "field": _field_view(s.questionnaire, s.current_field)}

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        sess = state.session(session_id)
        with sess.lock:
            return _session_view(sess.state)

    @app.post("/sessions/{session_id}/utterance")
    async def post_utterance(session_id: str, request: Request):
        doc = await _body(request)
        sess = state.session(session_id)
        with sess.lock:
            mark = len(sess.state.transcript)
            result = q.propose_utterance(sess.state, _text_of(doc))
            state.journal_events(sess.state, mark)
        if result.nomatch:
            return {"nomatch": True, "rephrase": result.rephrase_prompt}
        return {"paraphrase": result.paraphrase, "translation": result.translation}

    @app.post("/sessions/{session_id}/confirm")
    async def post_confirm(session_id: str, request: Request):
        doc = await _body(request)
        accept = doc.get("accept")
        if not isinstance(accept, bool):
            raise BadRequest("'accept' must be true or false")
        sess = state.session(session_id)
        with sess.lock:
            mark = len(sess.state.transcript)
            answers = q.confirm(sess.state, accept)
            state.journal_events(sess.state, mark)
            if answers is None:
                return {"answers": None}
            return {"answers": _answers_view(answers, sess.state.respondent_language)}

    @app.post("/sessions/{session_id}/answer")
    async def post_answer(session_id: str, request: Request):
        doc = await _body(request)
        answer_id = doc.get("answer_id")
        if not isinstance(answer_id, str):
            raise BadRequest("missing 'answer_id'")
        sess = state.session(session_id)
        with sess.lock:
            mark = len(sess.state.transcript)
            q.record_answer(sess.state, answer_id)
            state.journal_events(sess.state, mark)
            if sess.state.ended:
                return {"next_field": None, "end": True}
            return {"next_field": _field_view(sess.state.questionnaire, sess.state.current_field),
                    "end": False}

    @app.get("/sessions/{session_id}/export")
    async def get_export(session_id: str):
        sess = state.session(session_id)
        with sess.lock:
            text = q.export_json(sess.state)
        return Response(content=text, media_type="application/json")

    return app


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
