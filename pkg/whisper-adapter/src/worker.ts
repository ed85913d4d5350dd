/**
 * The serving loop: read request lines from stdin, answer on stdout,
 * structured logs on stderr.
 *
 * One decode is in flight at a time; the harness gets parallelism by
 * spawning several workers. Every answered line echoes the request id, so
 * responses can be paired up even if a future worker reorders them.
 */

import { createInterface } from "node:readline";
import type { Readable, Writable } from "node:stream";

import { AudioUnreadable } from "./audio.js";
import { buildPrefix, prefixString } from "./prefix.js";
import type { Model } from "./models.js";
import { parseRequestLine, serializeResponse, type Response } from "./protocol.js";

export interface ServeOptions {
  input?: Readable;
  output?: Writable;
  logSink?: Writable;
}

function log(sink: Writable, record: Record<string, unknown>): void {
  sink.write(JSON.stringify(record) + "\n");
}

export async function serve(model: Model, options: ServeOptions = {}): Promise<void> {
  const input = options.input ?? process.stdin;
  const output = options.output ?? process.stdout;
  const logSink = options.logSink ?? process.stderr;

  const respond = (response: Response): void => {
    output.write(serializeResponse(response) + "\n");
  };

  log(logSink, {
    event: "ready",
    model_id: model.modelId,
    device: process.env.WHISPER_ADAPTER_DEVICE ?? "default",
  });

  const rl = createInterface({ input, crlfDelay: Infinity });
  for await (const raw of rl) {
    const line = raw.trim();
    if (!line) continue;

    const parsed = parseRequestLine(line);
    if (!parsed.ok) {
      if (parsed.id !== undefined) {
        respond({ id: parsed.id, error: parsed.error });
      } else {
        log(logSink, { event: "skipped", reason: parsed.error, line: line.slice(0, 200) });
      }
      continue;
    }

    const req = parsed.request;
    const started = Date.now();
    try {
      const prefixPieces = buildPrefix(req.textual_prompt, req.language_tokens);
      const text = await model.transcribe({
        audioPath: req.audio_path,
        prefixPieces,
        textualPrompt: req.textual_prompt,
        languageTokens: req.language_tokens,
      });
      respond({ id: req.id, text, model_id: model.modelId });
      log(logSink, {
        event: "transcribed",
        id: req.id,
        prefix: prefixString(prefixPieces),
        ms: Date.now() - started,
      });
    } catch (e) {
      const reason =
        e instanceof AudioUnreadable ? `audio unreadable: ${e.message}` : (e as Error).message;
      respond({ id: req.id, error: reason });
      log(logSink, { event: "failed", id: req.id, reason });
    }
  }
  log(logSink, { event: "eof" });
}
