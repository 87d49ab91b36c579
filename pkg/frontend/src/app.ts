// Interviewer console: one live questionnaire session per page.
//
// The server is authoritative: every control fires a request and the
// whole view re-renders from the response (no optimistic updates), so a
// page reload with ?session=<id> reconstructs the exact same screen
// from GET /sessions/{id}.

import {
  AnswerView,
  ApiError,
  FieldView,
  ServiceClient,
  SessionView,
  UtteranceAccepted,
} from "./api.js";

export interface AppOptions {
  questionnaire: string;
  respondentLang: string;
  sessionId?: string;
}

export class InterviewApp {
  client: ServiceClient;
  root: HTMLElement;
  sessionId: string | null = null;
  view: SessionView | null = null;
  rephrasePrompt: string | null = null;
  lastError: string | null = null;
  lastExport: string | null = null;

  constructor(baseUrl: string, root: HTMLElement) {
    this.client = new ServiceClient(baseUrl);
    this.root = root;
  }

  async start(options: AppOptions): Promise<void> {
    if (options.sessionId) {
      this.sessionId = options.sessionId;
    } else {
      const created = await this.client.createSession(
        options.questionnaire,
        options.respondentLang,
      );
      this.sessionId = created.session_id;
    }
    await this.refresh();
  }

  async refresh(): Promise<void> {
    if (!this.sessionId) throw new Error("no session");
    this.view = await this.client.getSession(this.sessionId);
    this.render();
  }

  private async guard(action: () => Promise<void>): Promise<void> {
    this.lastError = null;
    try {
      await action();
    } catch (err) {
      if (err instanceof ApiError) {
        // service errors are surfaced verbatim with their code
        this.lastError = `${err.code}: ${err.message}`;
        this.render();
      } else {
        // network failure: keep the session id, offer a retry render
        this.lastError = `NetworkError: ${String(err)}`;
        this.render();
      }
    }
  }

  async proposeUtterance(text: string): Promise<void> {
    await this.guard(async () => {
      const result = await this.client.propose(this.sessionId!, text);
      this.rephrasePrompt = "nomatch" in result && result.nomatch
        ? (result as { rephrase: string }).rephrase
        : null;
      await this.refresh();
    });
  }

  async confirm(accept: boolean): Promise<void> {
    await this.guard(async () => {
      await this.client.confirm(this.sessionId!, accept);
      await this.refresh();
    });
  }

  async answer(answerId: string): Promise<void> {
    await this.guard(async () => {
      await this.client.answer(this.sessionId!, answerId);
      await this.refresh();
    });
  }

  async downloadExport(): Promise<string> {
    const text = await this.client.exportDocument(this.sessionId!);
    this.lastExport = text;
    const anchor = this.root.querySelector<HTMLAnchorElement>("[data-testid=export-link]");
    if (anchor && typeof URL.createObjectURL === "function") {
      const blob = new Blob([text], { type: "application/json" });
      anchor.href = URL.createObjectURL(blob);
      anchor.download = `${this.sessionId}.json`;
    }
    return text;
  }

  // -- rendering ----------------------------------------------------------

  render(): void {
    const view = this.view;
    if (!view) {
      this.root.innerHTML = `<p data-testid="loading">Connecting…</p>`;
      return;
    }
    const parts: string[] = [];
    parts.push(`<header>
      <h1>${esc(view.questionnaire)}</h1>
      <span data-testid="progress">${view.progress.visited} / ${view.progress.total} fields</span>
    </header>`);
    if (this.lastError) {
      parts.push(`<div class="error" data-testid="error">${esc(this.lastError)}</div>`);
    }
    if (view.ended) {
      parts.push(this.renderEnd());
    } else {
      parts.push(this.renderField(view.current_field!, view));
    }
    parts.push(this.renderTranscript(view));
    this.root.innerHTML = parts.join("\n");
    this.bind();
  }

  private renderField(field: FieldView, view: SessionView): string {
    const parts: string[] = [];
    parts.push(`<section class="field">
      <h2 data-testid="field-heading">${esc(field.heading)}</h2>`);
    if (view.awaiting === "proposal") {
      const options = field.keys
        .map((k) => `<option value="${esc(k)}">${esc(k)}</option>`)
        .join("");
      parts.push(`
      <p>Ask the question in your own words, or pick one:</p>
      <input type="text" data-testid="utterance-input" placeholder="Type the question…" />
      <select data-testid="question-select"><option value="">— suggested questions —</option>${options}</select>
      <button data-testid="propose">Submit question</button>`);
      if (this.rephrasePrompt) {
        parts.push(`<div class="rephrase" data-testid="rephrase">${esc(this.rephrasePrompt)}</div>`);
      }
    } else if (view.awaiting === "confirmation" && view.pending) {
      parts.push(`
      <div class="paraphrase" data-testid="paraphrase">
        <p>Understood as: <strong>${esc(view.pending.paraphrase)}</strong></p>
        <p class="respondent-preview">Respondent will see: ${esc(view.pending.translation)}</p>
        <button data-testid="approve">Approve</button>
        <button data-testid="reject">Reject</button>
      </div>`);
    } else if (view.awaiting === "answer" && view.answers) {
      // only after approval does the respondent-language question show
      parts.push(`
      <div class="respondent" data-testid="respondent-question">${esc(view.respondent_question ?? "")}</div>
      <div class="answers" data-testid="answers">${view.answers
        .map((a) => this.renderAnswer(a))
        .join("")}</div>`);
    }
    parts.push("</section>");
    return parts.join("\n");
  }

  private renderAnswer(a: AnswerView): string {
    return `<button class="answer" data-testid="answer-${esc(a.id)}" data-answer="${esc(a.id)}">
      <img src="${esc(a.icon)}" alt="" /> ${esc(a.label)}
    </button>`;
  }

  private renderEnd(): string {
    return `<section class="end" data-testid="end">
      <h2>Interview complete</h2>
      <button data-testid="export">Download responses</button>
      <a data-testid="export-link" hidden>export.json</a>
    </section>`;
  }

  private renderTranscript(view: SessionView): string {
    const items = view.transcript
      .map((e) => {
        switch (e.kind) {
          case "FieldEntered":
            return `<li class="enter">→ ${esc(e.field ?? "")}</li>`;
          case "UtteranceProposed":
            return e.paraphrase
              ? `<li class="proposed">“${esc(e.raw ?? "")}” → ${esc(e.paraphrase)}</li>`
              : `<li class="nomatch">“${esc(e.raw ?? "")}” (not understood)</li>`;
          case "Confirmed":
            return `<li class="confirmed">approved</li>`;
          case "Rejected":
            return `<li class="rejected">rejected</li>`;
          case "Answered":
            return `<li class="answered">answer: ${esc(e.answer ?? "")}</li>`;
          default:
            return `<li>${esc(e.kind)}</li>`;
        }
      })
      .join("");
    return `<aside class="transcript" data-testid="transcript"><ol>${items}</ol></aside>`;
  }

  private bind(): void {
    const input = this.root.querySelector<HTMLInputElement>("[data-testid=utterance-input]");
    const select = this.root.querySelector<HTMLSelectElement>("[data-testid=question-select]");
    const propose = this.root.querySelector<HTMLButtonElement>("[data-testid=propose]");
    propose?.addEventListener("click", () => {
      const text = input?.value.trim() || select?.value || "";
      if (text) void this.proposeUtterance(text);
    });
    select?.addEventListener("change", () => {
      if (input && select && select.value) input.value = select.value;
    });
    this.root
      .querySelector("[data-testid=approve]")
      ?.addEventListener("click", () => void this.confirm(true));
    this.root
      .querySelector("[data-testid=reject]")
      ?.addEventListener("click", () => void this.confirm(false));
    this.root.querySelectorAll<HTMLButtonElement>("[data-answer]").forEach((button) => {
      button.addEventListener("click", () => void this.answer(button.dataset.answer!));
    });
    this.root
      .querySelector("[data-testid=export]")
      ?.addEventListener("click", () => void this.downloadExport());
  }
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
