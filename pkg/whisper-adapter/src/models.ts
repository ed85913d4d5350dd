/**
 * Model backends behind one interface.
 *
 *   stub[:TEXT]   constant hypothesis, no audio access; protocol testing
 *   wav-probe     decodes the WAV and answers with a level/duration line
 *   cli:ARGV      bridges to a real inference CLI (e.g. whisper.cpp);
 *                 argv placeholders: {audio} {prompt} {lang1} {lang2}
 *                 {languages} {prefix}
 *
 * The textual prompt is always handed over as raw text: tokenization
 * belongs to the model, never to the harness or this worker.
 */

import { execFile } from "node:child_process";
import { promisify } from "node:util";

import { readWav } from "./audio.js";
import { prefixString } from "./prefix.js";

const execFileAsync = promisify(execFile);

export class ModelLoadFailure extends Error {}

export interface TranscribeArgs {
  audioPath: string;
  prefixPieces: string[];
  textualPrompt: string | null;
  languageTokens: string[];
}

export interface Model {
  readonly modelId: string;
  transcribe(args: TranscribeArgs): Promise<string>;
}

export class StubModel implements Model {
  readonly modelId: string;

  constructor(private readonly text: string, modelId = "stub-v1") {
    this.modelId = modelId;
  }

  async transcribe(): Promise<string> {
    return this.text;
  }
}

export class WavProbeModel implements Model {
  readonly modelId: string;

  constructor(modelId = "wav-probe-v1") {
    this.modelId = modelId;
  }

  async transcribe(args: TranscribeArgs): Promise<string> {
    const info = readWav(args.audioPath);
    return (
      `pcm ${info.channels}ch ${info.sampleRate}hz ` +
      `${info.durationSeconds.toFixed(2)}s rms ${info.rms.toFixed(4)}`
    );
  }
}

/** Runs one external CLI invocation per request and takes its stdout,
 * trimmed, as the hypothesis. */
export class CliModel implements Model {
  readonly modelId: string;
  private readonly argv: string[];

  constructor(argvTemplate: string, modelId = "cli") {
    this.argv = argvTemplate.split(/\s+/).filter(Boolean);
    if (this.argv.length === 0) {
      throw new ModelLoadFailure("cli model needs a command line");
    }
    this.modelId = modelId;
  }

  async transcribe(args: TranscribeArgs): Promise<string> {
    const fill = (piece: string): string =>
      piece
        .replaceAll("{audio}", args.audioPath)
        .replaceAll("{prompt}", args.textualPrompt ?? "")
        .replaceAll("{lang1}", args.languageTokens[0] ?? "")
        .replaceAll("{lang2}", args.languageTokens[1] ?? "")
        .replaceAll("{languages}", args.languageTokens.join(","))
        .replaceAll("{prefix}", prefixString(args.prefixPieces));
    const [cmd, ...rest] = this.argv.map(fill);
    const { stdout } = await execFileAsync(cmd, rest, { maxBuffer: 16 * 1024 * 1024 });
    return stdout.trim();
  }
}

export function createModel(descriptor: string, modelId?: string): Model {
  if (descriptor === "stub" || descriptor.startsWith("stub:")) {
    const text = descriptor === "stub" ? "stub transcript" : descriptor.slice("stub:".length);
    return new StubModel(text, modelId ?? "stub-v1");
  }
  if (descriptor === "wav-probe") {
    return new WavProbeModel(modelId ?? "wav-probe-v1");
  }
  if (descriptor.startsWith("cli:")) {
    return new CliModel(descriptor.slice("cli:".length), modelId ?? "cli");
  }
  throw new ModelLoadFailure(`unknown model descriptor ${descriptor}`);
}
