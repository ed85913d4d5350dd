/**
 * Decoder prefix construction.
 *
 * The serialized order is fixed no matter how the request fields arrived:
 * previous-context marker and prompt text (only when a textual prompt is
 * present), then start-of-transcript, the language token(s) in the given
 * order, and the task token. Two language tokens are injected by direct
 * prefix construction; the checkpoint natively expects a single one.
 */

export const PREV = "<|startofprev|>";
export const SOT = "<|startoftranscript|>";
export const TASK_TRANSCRIBE = "<|transcribe|>";

const KNOWN_LANGUAGES = new Set([
  "en", "zh", "es", "fr", "it", "de", "ja", "ko", "pt", "ru",
]);

export function languageToken(code: string): string {
  if (!KNOWN_LANGUAGES.has(code)) {
    throw new Error(`unknown language code ${code}`);
  }
  return `<|${code}|>`;
}

/** Ordered prefix pieces; prompt text rides along verbatim so the model's
 * own tokenizer can cut it up. */
export function buildPrefix(
  textualPrompt: string | null,
  languageTokens: string[],
): string[] {
  if (languageTokens.length < 1 || languageTokens.length > 2) {
    throw new Error("one or two language tokens required");
  }
  const pieces: string[] = [];
  if (textualPrompt !== null) {
    pieces.push(PREV, textualPrompt);
  }
  pieces.push(SOT);
  for (const code of languageTokens) {
    pieces.push(languageToken(code));
  }
  pieces.push(TASK_TRANSCRIBE);
  return pieces;
}

export function prefixString(pieces: string[]): string {
  return pieces.join("");
}
