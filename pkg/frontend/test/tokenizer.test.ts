import { describe, expect, it } from "vitest";

import { BOUNDARY_TOKEN, tokenize } from "../src/tokenizer.js";

describe("tokenize", () => {
  it("prepends the boundary mark", () => {
    const { tokens } = tokenize("valve fails", 32);
    expect(tokens[0]).toBe(BOUNDARY_TOKEN);
    expect(tokens.slice(1)).toEqual(["valve", "fails"]);
  });

  it("splits CJK characters individually and keeps latin runs whole", () => {
    const { tokens } = tokenize("富气 leak", 32);
    expect(tokens).toEqual([BOUNDARY_TOKEN, "富", "气", "leak"]);
  });

  it("lowercases and separates punctuation", () => {
    const { tokens } = tokenize("Pump-3 Fails!", 32);
    expect(tokens).toEqual([BOUNDARY_TOKEN, "pump", "-", "3", "fails", "!"]);
  });

  it("truncates at max length and reports it", () => {
    const result = tokenize("a b c d e f", 4);
    expect(result.tokens).toHaveLength(4);
    expect(result.truncated).toBe(true);
  });
});
