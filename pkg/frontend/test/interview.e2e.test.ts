// End-to-end: drives the interviewer console in a DOM against a live
// service process, through a full 3-field interview with one rejected
// paraphrase and one out-of-slice rephrase prompt, then downloads the
// export and checks it against GET /sessions/{id}/export.
//
// @vitest-environment jsdom

import { afterAll, beforeAll, expect, test } from "vitest";
import { spawn, ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";
import path from "node:path";

import { InterviewApp } from "../src/app.js";

const PORT = 18731;
const BASE = `http://127.0.0.1:${PORT}`;
const HERE = path.dirname(fileURLToPath(import.meta.url));
const MANIFEST = path.resolve(HERE, "../../tests/data/clinic/clinic.manifest");

let service: ChildProcess;

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const response = await fetch(`${BASE}/health`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  service = spawn("python3", ["-m", "lite", "serve", MANIFEST, "--port", String(PORT)], {
    stdio: "ignore",
  });
  await waitForHealth();
}, 30_000);

afterAll(() => {
  service?.kill();
});

function q<T extends Element>(root: HTMLElement, selector: string): T {
  const el = root.querySelector<T>(selector);
  if (!el) throw new Error(`missing ${selector}; html: ${root.innerHTML.slice(0, 400)}`);
  return el;
}

async function typeAndPropose(app: InterviewApp, root: HTMLElement, text: string) {
  const input = q<HTMLInputElement>(root, "[data-testid=utterance-input]");
  input.value = text;
  await app.proposeUtterance(text);
}

test("full three-field interview with rejection and rephrase", async () => {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = new InterviewApp(BASE, root);
  await app.start({ questionnaire: "clinic-intake", respondentLang: "french" });

  // field 1: pain
  expect(q<HTMLElement>(root, "[data-testid=field-heading]").textContent).toBe("Pain present?");

  // out-of-slice question (covered by the grammar, but belongs to field 2)
  await typeAndPropose(app, root, "do you have a fever");
  expect(q<HTMLElement>(root, "[data-testid=rephrase]").textContent).toContain("rephrase");
  expect(root.querySelector("[data-testid=answers]")).toBeNull();

  // proper question, but reject the paraphrase once
  await typeAndPropose(app, root, "are you in pain");
  expect(q<HTMLElement>(root, "[data-testid=paraphrase]").textContent).toContain(
    "do you have pain",
  );
  (q<HTMLButtonElement>(root, "[data-testid=reject]")).click();
  await new Promise((resolve) => setTimeout(resolve, 200));
  // after rejection the input is back and the transcript shows it
  expect(root.querySelector("[data-testid=utterance-input]")).not.toBeNull();
  expect(q<HTMLElement>(root, "[data-testid=transcript]").textContent).toContain("rejected");

  // propose again and approve
  await typeAndPropose(app, root, "do you have any pain");
  (q<HTMLButtonElement>(root, "[data-testid=approve]")).click();
  await new Promise((resolve) => setTimeout(resolve, 200));
  // the respondent-language question appears only after approval
  expect(q<HTMLElement>(root, "[data-testid=respondent-question]").textContent).toContain(
    "avez-vous mal",
  );
  (q<HTMLButtonElement>(root, "[data-testid=answer-yes]")).click();
  await new Promise((resolve) => setTimeout(resolve, 200));

  // field 2: fever
  expect(q<HTMLElement>(root, "[data-testid=field-heading]").textContent).toBe("Fever present?");
  await typeAndPropose(app, root, "are you feverish");
  (q<HTMLButtonElement>(root, "[data-testid=approve]")).click();
  await new Promise((resolve) => setTimeout(resolve, 200));
  (q<HTMLButtonElement>(root, "[data-testid=answer-no]")).click();
  await new Promise((resolve) => setTimeout(resolve, 200));

  // a page reload must reconstruct the view from the session id alone
  const resumed = new InterviewApp(BASE, document.createElement("div"));
  await resumed.start({
    questionnaire: "clinic-intake",
    respondentLang: "french",
    sessionId: app.sessionId!,
  });
  expect(resumed.view?.current_field?.id).toBe("meds");
  expect(resumed.view?.responses).toEqual({ pain: "yes", fever: "no" });

  // field 3: meds, to the end
  await typeAndPropose(app, root, "do you take medicine");
  (q<HTMLButtonElement>(root, "[data-testid=approve]")).click();
  await new Promise((resolve) => setTimeout(resolve, 200));
  (q<HTMLButtonElement>(root, "[data-testid=answer-yes]")).click();
  await new Promise((resolve) => setTimeout(resolve, 200));

  expect(root.querySelector("[data-testid=end]")).not.toBeNull();
  (q<HTMLButtonElement>(root, "[data-testid=export]")).click();
  await new Promise((resolve) => setTimeout(resolve, 300));

  // the downloaded export is identical to the service's export resource
  const downloaded = app.lastExport ?? (await app.downloadExport());
  const direct = await (await fetch(`${BASE}/sessions/${app.sessionId}/export`)).text();
  expect(downloaded).toBe(direct);
  const doc = JSON.parse(downloaded);
  expect(doc.completed).toBe(true);
  expect(doc.records.map((r: { field: string }) => r.field)).toEqual(["pain", "fever", "meds"]);
  expect(doc.responses).toEqual({ pain: "yes", fever: "no", meds: "yes" });
}, 60_000);

test("service errors surface with their code", async () => {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = new InterviewApp(BASE, root);
  await expect(
    app.start({ questionnaire: "does-not-exist", respondentLang: "french" }),
  ).rejects.toMatchObject({ code: "UnknownQuestionnaire" });
});
