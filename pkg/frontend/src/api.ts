// Typed client for the lite translation service HTTP API.

export interface FieldView {
  id: string;
  heading: string;
  keys: string[];
}

export interface AnswerView {
  id: string;
  label: string;
  icon: string;
  audio: string | null;
}

export interface SessionCreated {
  session_id: string;
  field: FieldView;
}

export interface PendingView {
  paraphrase: string;
  translation: string;
}

export interface SessionView {
  session_id: string;
  questionnaire: string;
  respondent_language: string;
  current_field: FieldView | null;
  ended: boolean;
  awaiting: "proposal" | "confirmation" | "answer" | "ended";
  pending: PendingView | null;
  answers: AnswerView[] | null;
  respondent_question: string | null;
  responses: Record<string, string>;
  progress: { visited: number; total: number };
  transcript: TranscriptEvent[];
}

export interface TranscriptEvent {
  kind: string;
  t: number;
  field?: string;
  raw?: string;
  paraphrase?: string;
  answer?: string;
  nomatch?: boolean;
}

export interface UtteranceAccepted {
  paraphrase: string;
  translation: string;
}

export interface UtteranceRejected {
  nomatch: true;
  rephrase: string;
}

export type UtteranceResult = UtteranceAccepted | UtteranceRejected;

export interface AnswerResult {
  next_field: FieldView | null;
  end: boolean;
}

export class ApiError extends Error {
  constructor(public code: string, message: string, public status: number) {
    super(message);
  }
}

async function request<T>(base: string, method: string, path: string, body?: unknown): Promise<T> {
  const response = await fetch(base + path, {
    method,
    headers: body === undefined ? {} : { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const text = await response.text();
  if (!response.ok) {
    let code = "HttpError";
    let message = text;
    try {
      const doc = JSON.parse(text);
      code = doc.code ?? code;
      message = doc.message ?? message;
    } catch {
      // non-JSON error body: surface it as-is
    }
    throw new ApiError(code, message, response.status);
  }
  return JSON.parse(text) as T;
}

export class ServiceClient {
  constructor(public base: string) {}

  health(): Promise<{ status: string; project: string }> {
    return request(this.base, "GET", "/health");
  }

  createSession(questionnaire: string, respondentLang: string): Promise<SessionCreated> {
    return request(this.base, "POST", "/sessions", {
      questionnaire,
      respondent_lang: respondentLang,
    });
  }

  getSession(id: string): Promise<SessionView> {
    return request(this.base, "GET", `/sessions/${id}`);
  }

  propose(id: string, text: string): Promise<UtteranceResult> {
    return request(this.base, "POST", `/sessions/${id}/utterance`, { text });
  }

  confirm(id: string, accept: boolean): Promise<{ answers: AnswerView[] | null }> {
    return request(this.base, "POST", `/sessions/${id}/confirm`, { accept });
  }

  answer(id: string, answerId: string): Promise<AnswerResult> {
    return request(this.base, "POST", `/sessions/${id}/answer`, { answer_id: answerId });
  }

  /** Raw export body; kept as text so a download is byte-identical. */
  async exportDocument(id: string): Promise<string> {
    const response = await fetch(`${this.base}/sessions/${id}/export`);
    const text = await response.text();
    if (!response.ok) {
      throw new ApiError("ExportFailed", text, response.status);
    }
    return text;
  }
}
