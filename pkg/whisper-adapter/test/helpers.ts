import { spawn } from "node:child_process";
import { writeFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import path from "node:path";

export const MAIN_JS = path.join(
  path.dirname(fileURLToPath(import.meta.url)),
  "..",
  "dist",
  "main.js",
);

export interface WorkerRun {
  stdout: string[];
  stderr: string[];
  code: number | null;
}

/** Spawn the built worker, feed it lines, close stdin, collect output. */
export function runWorker(args: string[], lines: string[]): Promise<WorkerRun> {
  return new Promise((resolve, reject) => {
    const child = spawn("node", [MAIN_JS, ...args], { stdio: ["pipe", "pipe", "pipe"] });
    let out = "";
    let err = "";
    child.stdout.on("data", (d) => (out += d));
    child.stderr.on("data", (d) => (err += d));
    child.on("error", reject);
    child.on("close", (code) => {
      resolve({
        stdout: out.split("\n").filter(Boolean),
        stderr: err.split("\n").filter(Boolean),
        code,
      });
    });
    for (const line of lines) {
      child.stdin.write(line + "\n");
    }
    child.stdin.end();
  });
}

export function requestLine(
  id: string,
  overrides: Partial<Record<string, unknown>> = {},
): string {
  return JSON.stringify({
    id,
    audio_path: "/tmp/unused.wav",
    textual_prompt: null,
    language_tokens: ["en"],
    task: "transcribe",
    decoding: { strategy: "greedy" },
    ...overrides,
  });
}

/** Write a PCM16 mono WAV containing a sine tone. */
export function writeSineWav(filePath: string, seconds = 0.25, rate = 16000, hz = 440): void {
  const n = Math.floor(seconds * rate);
  const data = Buffer.alloc(n * 2);
  for (let i = 0; i < n; i++) {
    const v = Math.round(Math.sin((2 * Math.PI * hz * i) / rate) * 0.4 * 32767);
    data.writeInt16LE(v, i * 2);
  }
  const header = Buffer.alloc(44);
  header.write("RIFF", 0, "ascii");
  header.writeUInt32LE(36 + data.length, 4);
  header.write("WAVE", 8, "ascii");
  header.write("fmt ", 12, "ascii");
  header.writeUInt32LE(16, 16);
  header.writeUInt16LE(1, 20); // PCM
  header.writeUInt16LE(1, 22); // mono
  header.writeUInt32LE(rate, 24);
  header.writeUInt32LE(rate * 2, 28);
  header.writeUInt16LE(2, 32);
  header.writeUInt16LE(16, 34);
  header.write("data", 36, "ascii");
  header.writeUInt32LE(data.length, 40);
  writeFileSync(filePath, Buffer.concat([header, data]));
}
