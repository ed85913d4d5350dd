import { describe, expect, it } from "vitest";

import {
  isValidResponseLine,
  parseRequestLine,
  serializeResponse,
} from "../src/protocol";
import { requestLine } from "./helpers";

describe("parseRequestLine", () => {
  it("accepts a well-formed request", () => {
    const out = parseRequestLine(requestLine("r1", { textual_prompt: "Arts" }));
    expect(out.ok).toBe(true);
    if (out.ok) {
      expect(out.request.id).toBe("r1");
      expect(out.request.textual_prompt).toBe("Arts");
      expect(out.request.language_tokens).toEqual(["en"]);
    }
  });

  it("accepts two language tokens and a null prompt", () => {
    const out = parseRequestLine(requestLine("r2", { language_tokens: ["zh", "en"] }));
    expect(out.ok).toBe(true);
  });

  it("rejects invalid JSON without an id", () => {
    const out = parseRequestLine("{nope");
    expect(out).toEqual({ ok: false, error: "invalid JSON" });
  });

  it("recovers the id from invalid requests", () => {
    const out = parseRequestLine(requestLine("r3", { task: "translate" }));
    expect(out.ok).toBe(false);
    if (!out.ok) expect(out.id).toBe("r3");
  });

  it.each([
    ["missing audio", { audio_path: undefined }],
    ["zero tokens", { language_tokens: [] }],
    ["three tokens", { language_tokens: ["en", "zh", "fr"] }],
    ["non-string tokens", { language_tokens: [1, 2] }],
    ["bad prompt type", { textual_prompt: 5 }],
    ["non-greedy decoding", { decoding: { strategy: "beam" } }],
    ["missing decoding", { decoding: undefined }],
  ])("rejects %s", (_name, overrides) => {
    const obj = JSON.parse(requestLine("rx"));
    for (const [k, v] of Object.entries(overrides)) {
      if (v === undefined) delete obj[k];
      else obj[k] = v;
    }
    expect(parseRequestLine(JSON.stringify(obj)).ok).toBe(false);
  });
});

describe("responses", () => {
  it("serializes success and error responses to valid lines", () => {
    expect(isValidResponseLine(serializeResponse({ id: "a", text: "t", model_id: "m" }))).toBe(true);
    expect(isValidResponseLine(serializeResponse({ id: "a", error: "boom" }))).toBe(true);
  });

  it("rejects malformed response lines", () => {
    expect(isValidResponseLine("junk")).toBe(false);
    expect(isValidResponseLine('{"id":"a"}')).toBe(false);
    expect(isValidResponseLine('{"id":"a","text":"t"}')).toBe(false);
    expect(isValidResponseLine('{"id":"a","text":"t","model_id":"m","extra":1}')).toBe(false);
  });
});
