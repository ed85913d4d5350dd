/**
 * Minimal RIFF/WAVE reader: enough to prove an audio file is present and
 * decodable, and to derive duration and level for the probe backend.
 * Only uncompressed PCM16 is supported.
 */

import { readFileSync } from "node:fs";

export class AudioUnreadable extends Error {}

export interface WavInfo {
  sampleRate: number;
  channels: number;
  samples: number;
  durationSeconds: number;
  rms: number;
}

export function readWav(path: string): WavInfo {
  let buf: Buffer;
  try {
    buf = readFileSync(path);
  } catch (e) {
    throw new AudioUnreadable(`cannot read ${path}: ${(e as Error).message}`);
  }
  if (buf.length < 44 || buf.toString("ascii", 0, 4) !== "RIFF" || buf.toString("ascii", 8, 12) !== "WAVE") {
    throw new AudioUnreadable(`${path} is not a RIFF/WAVE file`);
  }

  let fmt: { sampleRate: number; channels: number; bits: number } | null = null;
  let data: Buffer | null = null;
  let off = 12;
  while (off + 8 <= buf.length) {
    const chunkId = buf.toString("ascii", off, off + 4);
    const size = buf.readUInt32LE(off + 4);
    const body = buf.subarray(off + 8, off + 8 + size);
    if (chunkId === "fmt ") {
      if (body.length < 16) throw new AudioUnreadable(`${path}: truncated fmt chunk`);
      const format = body.readUInt16LE(0);
      if (format !== 1) throw new AudioUnreadable(`${path}: only PCM wav is supported`);
      fmt = {
        channels: body.readUInt16LE(2),
        sampleRate: body.readUInt32LE(4),
        bits: body.readUInt16LE(14),
      };
    } else if (chunkId === "data") {
      data = body;
    }
    off += 8 + size + (size % 2);
  }
  if (!fmt || !data) throw new AudioUnreadable(`${path}: missing fmt or data chunk`);
  if (fmt.bits !== 16) throw new AudioUnreadable(`${path}: only 16-bit PCM is supported`);

  const frameBytes = 2 * fmt.channels;
  const samples = Math.floor(data.length / frameBytes);
  if (samples === 0) throw new AudioUnreadable(`${path}: no audio frames`);

  let sumSquares = 0;
  for (let i = 0; i < samples; i++) {
    const v = data.readInt16LE(i * frameBytes) / 32768;
    sumSquares += v * v;
  }
  return {
    sampleRate: fmt.sampleRate,
    channels: fmt.channels,
    samples,
    durationSeconds: samples / fmt.sampleRate,
    rms: Math.sqrt(sumSquares / samples),
  };
}
