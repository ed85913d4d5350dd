#!/usr/bin/env node
/**
 * Entry point. Examples:
 *
 *   whisper-adapter --model stub:hello
 *   whisper-adapter --model wav-probe
 *   whisper-adapter --model "cli:./whisper-cpp -m large-v3.bin -f {audio} --prompt {prompt} -l {lang1} -nt" \
 *                   --model-id whisper-large-v3
 *
 * Device selection comes from the WHISPER_ADAPTER_DEVICE environment
 * variable and is forwarded to CLI backends via their own environment.
 */

import { createModel, ModelLoadFailure } from "./models.js";
import { serve } from "./worker.js";

function parseArgs(argv: string[]): { model: string; modelId?: string } {
  let model = "stub";
  let modelId: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--model") {
      model = argv[++i] ?? "";
    } else if (arg === "--model-id") {
      modelId = argv[++i];
    } else if (arg === "--help" || arg === "-h") {
      process.stderr.write(
        "usage: whisper-adapter [--model stub[:TEXT]|wav-probe|cli:ARGV] [--model-id ID]\n",
      );
      process.exit(0);
    } else {
      process.stderr.write(`unknown argument ${arg}\n`);
      process.exit(2);
    }
  }
  return { model, modelId };
}

async function main(): Promise<void> {
  const { model, modelId } = parseArgs(process.argv.slice(2));
  let backend;
  try {
    backend = createModel(model, modelId);
  } catch (e) {
    if (e instanceof ModelLoadFailure) {
      process.stderr.write(`model load failure: ${e.message}\n`);
      process.exit(2);
    }
    throw e;
  }
  await serve(backend);
}

main().catch((e) => {
  process.stderr.write(`fatal: ${(e as Error).stack ?? e}\n`);
  process.exit(1);
});
