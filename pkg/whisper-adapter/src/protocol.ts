/**
 * Wire protocol spoken with the evaluation harness.
 *
 * One JSON object per line, UTF-8, LF-terminated. Requests carry the id,
 * the audio path, an optional textual prompt, one or two language tokens,
 * the task name, and the decoding settings. Responses echo the id with
 * either a hypothesis and the model id, or an error string.
 */

export interface TranscriptionRequest {
  id: string;
  audio_path: string;
  textual_prompt: string | null;
  language_tokens: string[];
  task: string;
  decoding: { strategy: string };
}

export type SuccessResponse = { id: string; text: string; model_id: string };
export type ErrorResponse = { id: string; error: string };
export type Response = SuccessResponse | ErrorResponse;

export type ParseOutcome =
  | { ok: true; request: TranscriptionRequest }
  | { ok: false; error: string; id?: string };

function isStringArray(v: unknown): v is string[] {
  return Array.isArray(v) && v.every((x) => typeof x === "string");
}

/** Parse and validate one request line. The id is reported back even for
 * invalid requests whenever it is recoverable from the payload. */
export function parseRequestLine(line: string): ParseOutcome {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return { ok: false, error: "invalid JSON" };
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    return { ok: false, error: "request must be a JSON object" };
  }
  const rec = obj as Record<string, unknown>;
  const id = typeof rec.id === "string" ? rec.id : undefined;

  const fail = (error: string): ParseOutcome => ({ ok: false, error, id });

  if (id === undefined) return { ok: false, error: "missing string id" };
  if (typeof rec.audio_path !== "string") return fail("missing audio_path");
  if (rec.textual_prompt !== null && typeof rec.textual_prompt !== "string") {
    return fail("textual_prompt must be a string or null");
  }
  if (!isStringArray(rec.language_tokens)) return fail("language_tokens must be a string array");
  if (rec.language_tokens.length < 1 || rec.language_tokens.length > 2) {
    return fail("language_tokens must hold one or two codes");
  }
  if (rec.task !== "transcribe") return fail(`unsupported task ${String(rec.task)}`);
  const decoding = rec.decoding as Record<string, unknown> | undefined;
  if (typeof decoding !== "object" || decoding === null) return fail("missing decoding settings");
  if (decoding.strategy !== "greedy") {
    return fail(`unsupported decoding strategy ${String(decoding.strategy)}`);
  }

  return {
    ok: true,
    request: {
      id,
      audio_path: rec.audio_path,
      textual_prompt: (rec.textual_prompt ?? null) as string | null,
      language_tokens: rec.language_tokens,
      task: rec.task,
      decoding: { strategy: "greedy" },
    },
  };
}

export function serializeResponse(response: Response): string {
  return JSON.stringify(response);
}

/** Schema check used by tests and by anyone validating worker output. */
export function isValidResponseLine(line: string): boolean {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return false;
  }
  if (typeof obj !== "object" || obj === null) return false;
  const rec = obj as Record<string, unknown>;
  if (typeof rec.id !== "string") return false;
  if (typeof rec.error === "string") {
    return Object.keys(rec).length === 2;
  }
  return (
    typeof rec.text === "string" &&
    typeof rec.model_id === "string" &&
    Object.keys(rec).length === 3
  );
}
