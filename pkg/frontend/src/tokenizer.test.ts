import { describe, expect, it } from "vitest";

import { tokenize } from "./tokenizer.js";

describe("tokenize", () => {
  it("splits a simple sentence and detaches the period", () => {
    const doc = tokenize("Jeff went home.");
    expect(doc.tokens.map((t) => t.text)).toEqual(["Jeff", "went", "home", "."]);
    expect(doc.sentence_bounds).toEqual([[0, 4]]);
  });

  it("returns an empty document for empty text", () => {
    const doc = tokenize("");
    expect(doc.tokens).toEqual([]);
    expect(doc.sentence_bounds).toEqual([]);
  });

  it("closes sentences after terminals and keeps trailing material", () => {
    const doc = tokenize("A b. C d! and so on");
    expect(doc.sentence_bounds).toEqual([[0, 3], [3, 6], [6, 9]]);
  });

  it("records exact character offsets", () => {
    const doc = tokenize("go home.");
    expect(doc.tokens[1]).toMatchObject({ char_start: 3, char_end: 7 });
    expect(doc.tokens[2]).toMatchObject({ char_start: 7, char_end: 8 });
  });

  it("keeps sentence bounds contiguous over arbitrary input", () => {
    const doc = tokenize("One two, three. Four! Five? six; seven: eight");
    let expected = 0;
    for (const [s, e] of doc.sentence_bounds) {
      expect(s).toBe(expected);
      expect(e).toBeGreaterThan(s);
      expected = e;
    }
    expect(expected).toBe(doc.tokens.length);
    doc.tokens.forEach((tok, i) => {
      const [s, e] = doc.sentence_bounds[tok.sentence_index];
      expect(i).toBeGreaterThanOrEqual(s);
      expect(i).toBeLessThan(e);
    });
  });
});
