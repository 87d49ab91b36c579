// Browser entry point.  Query parameters:
//   ?service=http://host:port   service base URL (default: same origin)
//   ?questionnaire=<id>         questionnaire to run
//   ?lang=<tag>                 respondent language
//   ?session=<id>               resume an existing session after a reload

import { InterviewApp } from "./app.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

const root = document.getElementById("app");
if (root) {
  const app = new InterviewApp(param("service", ""), root);
  const sessionId = param("session", "");
  void app
    .start({
      questionnaire: param("questionnaire", "clinic-intake"),
      respondentLang: param("lang", "french"),
      sessionId: sessionId || undefined,
    })
    .then(() => {
      if (app.sessionId && !sessionId) {
        const url = new URL(window.location.href);
        url.searchParams.set("session", app.sessionId);
        window.history.replaceState(null, "", url.toString());
      }
    });
}
