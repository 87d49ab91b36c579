"""Scripted request/response steps shared by the fixture recorder and the
service contract test.  ``{SID}`` in a path is replaced by the session id
created earlier in the script; session ids in responses are normalized
back to ``<SID>`` before comparison."""
from __future__ import annotations

import itertools
import re

_SID_RE = re.compile(r"[0-9a-f]{32}")

# (name, method, path, body) -- bodies are None for GET
DEMO_STEPS = [
    ("health", "GET", "/health", None),
    ("translate-hi", "POST", "/translate", {"text": "hi", "langs": ["french"]}),
    ("translate-cocacola", "POST", "/translate",
     {"text": "could i have a coca-cola please", "langs": ["french"]}),
    ("translate-nomatch", "POST", "/translate", {"text": "good evening", "langs": ["french"]}),
    ("translate-nbest-first-only", "POST", "/translate",
     {"nbest": ["hi", "could i have a coke"], "langs": ["french"]}),
    ("translate-missing-language", "POST", "/translate", {"text": "hi", "langs": ["german"]}),
    ("session-create", "POST", "/sessions",
     {"questionnaire": "clinic-intake", "respondent_lang": "french"}),
    ("session-propose", "POST", "/sessions/{SID}/utterance", {"text": "are you in pain"}),
    ("session-confirm", "POST", "/sessions/{SID}/confirm", {"accept": True}),
    ("session-answer", "POST", "/sessions/{SID}/answer", {"answer_id": "yes"}),
    ("session-out-of-slice", "POST", "/sessions/{SID}/utterance",
     {"text": "could i have a coke"}),
    ("session-propose-fever", "POST", "/sessions/{SID}/utterance",
     {"text": "do you have a fever"}),
    ("session-reject", "POST", "/sessions/{SID}/confirm", {"accept": False}),
    ("session-get", "GET", "/sessions/{SID}", None),
    ("session-propose-fever-2", "POST", "/sessions/{SID}/utterance",
     {"text": "how long have you had the fever"}),
    ("session-confirm-2", "POST", "/sessions/{SID}/confirm", {"accept": True}),
    ("session-answer-2", "POST", "/sessions/{SID}/answer", {"answer_id": "no"}),
    ("session-propose-meds", "POST", "/sessions/{SID}/utterance",
     {"text": "are you taking any medicine"}),
    ("session-confirm-3", "POST", "/sessions/{SID}/confirm", {"accept": True}),
    ("session-answer-end", "POST", "/sessions/{SID}/answer", {"answer_id": "no"}),
    ("session-export", "GET", "/sessions/{SID}/export", None),
    ("session-after-end", "POST", "/sessions/{SID}/utterance", {"text": "do you have pain"}),
    ("unknown-session", "GET", "/sessions/deadbeef", None),
    ("unknown-questionnaire", "POST", "/sessions",
     {"questionnaire": "nope", "respondent_lang": "french"}),
    ("unknown-language", "POST", "/sessions",
     {"questionnaire": "clinic-intake", "respondent_lang": "klingon"}),
    ("reload", "POST", "/reload", None),
    ("health-after-reload", "GET", "/health", None),
]

TRAINS_STEPS = [
    ("sign-translate", "POST", "/sign/translate",
     {"text": "ce train ne circule pas via genève", "lang": "lsf"}),
    ("sign-nomatch", "POST", "/sign/translate", {"text": "bonjour", "lang": "lsf"}),
]


def ticking_clock():
    counter = itertools.count(1)
    return lambda: float(next(counter))


def normalize(text: str) -> str:
    return _SID_RE.sub("<SID>", text)


def run_steps(client, steps) -> list[dict]:
    """Execute the script, returning one record per step with the
    normalized response body."""
    records = []
    sid: str | None = None
    for name, method, path, body in steps:
        real_path = path.replace("{SID}", sid or "")
        if method == "GET":
            response = client.get(real_path)
        else:
            response = client.post(real_path, json=body)
        if name == "session-create" and response.status_code == 200:
            sid = response.json()["session_id"]
        records.append({
            "name": name,
            "method": method,
            "path": path,
            "body": body,
            "status": response.status_code,
            "response": normalize(response.content.decode("utf-8")),
        })
    return records
