import { describe, expect, it } from "vitest";

import { annotateCoref, annotateDiscourse, annotateSrl } from "./annotators.js";
import { tokenize } from "./tokenizer.js";

describe("annotateSrl", () => {
  it("emits one view per verb with the V tag on the verb", () => {
    const doc = tokenize("Mira carried the lantern.");
    const views = annotateSrl(doc);
    expect(views).toHaveLength(1);
    expect(views[0].tags[views[0].verb_index]).toBe("V");
    expect(views[0].tags[0]).toBe("ARG0");
    expect(views[0].tags[2]).toBe("ARG1");
  });

  it("emits zero views for verb-free fragments", () => {
    expect(annotateSrl(tokenize("the quiet harbor"))).toEqual([]);
  });

  it("keeps all non-null tags inside the verb's sentence", () => {
    const doc = tokenize("Mira carried the lantern. Jonas repaired the ferry.");
    for (const view of annotateSrl(doc)) {
      const sentence = doc.tokens[view.verb_index].sentence_index;
      view.tags.forEach((tag, i) => {
        if (tag !== "NONE") expect(doc.tokens[i].sentence_index).toBe(sentence);
      });
    }
  });

  it("handles passives: participle carries V, the by-phrase is ARG0", () => {
    const doc = tokenize("The ledger was guarded by Felix.");
    const views = annotateSrl(doc);
    expect(views).toHaveLength(1);
    const view = views[0];
    expect(doc.tokens[view.verb_index].text).toBe("guarded");
    const felix = doc.tokens.findIndex((t) => t.text === "Felix");
    expect(view.tags[felix]).toBe("ARG0");
    expect(view.tags[1]).toBe("ARG1");
  });
});

describe("annotateCoref", () => {
  it("builds at least one cluster with two mentions from a pronoun chain", () => {
    const doc = tokenize("Mira carried the lantern because she feared the storm. She waited.");
    const clusters = annotateCoref(doc);
    expect(clusters.length).toBeGreaterThanOrEqual(1);
    expect(clusters[0].mentions.length).toBeGreaterThanOrEqual(2);
  });

  it("never overlaps mentions within a cluster", () => {
    const doc = tokenize("Omar met Petra. He thanked her. Omar left.");
    for (const cluster of annotateCoref(doc)) {
      const sorted = [...cluster.mentions].sort((a, b) => a[0] - b[0]);
      for (let i = 1; i < sorted.length; i += 1) {
        expect(sorted[i][0]).toBeGreaterThanOrEqual(sorted[i - 1][1]);
      }
    }
  });

  it("returns no clusters when nothing corefers", () => {
    expect(annotateCoref(tokenize("the lantern glowed."))).toEqual([]);
  });
});

describe("annotateDiscourse", () => {
  it("builds an Explicit relation around a mid-sentence connective", () => {
    const doc = tokenize("Jeff went home because he was hungry.");
    const explicit = annotateDiscourse(doc).filter((r) => r.kind === "Explicit");
    expect(explicit).toHaveLength(1);
    const rel = explicit[0];
    expect(rel.sense).toBe("Contingency.Cause.Reason");
    expect(doc.tokens[rel.conn![0]].text).toBe("because");
    expect(rel.arg1[1]).toBeLessThanOrEqual(rel.conn![0]);
    expect(rel.arg2[0]).toBeGreaterThanOrEqual(rel.conn![1]);
  });

  it("emits zero Non-Explicit relations for one-sentence texts", () => {
    const records = annotateDiscourse(tokenize("The stars appeared."));
    expect(records.filter((r) => r.kind === "NonExplicit")).toEqual([]);
  });

  it("annotates every consecutive sentence pair", () => {
    const doc = tokenize("One fact. Another fact. A third fact.");
    const pairs = annotateDiscourse(doc).filter((r) => r.kind === "NonExplicit");
    expect(pairs).toHaveLength(2);
    expect(pairs[0].arg1).toEqual(doc.sentence_bounds[0]);
    expect(pairs[0].arg2).toEqual(doc.sentence_bounds[1]);
  });

  it("assigns EntRel when the next sentence opens with a pronoun", () => {
    const doc = tokenize("Mira slept. She dreamed.");
    const pair = annotateDiscourse(doc).find((r) => r.kind === "NonExplicit");
    expect(pair!.sense).toBe("EntRel");
  });

  it("recognizes the two-token connective 'and then'", () => {
    const doc = tokenize("Lena sketched the orchard and then she framed the drawing.");
    const explicit = annotateDiscourse(doc).filter((r) => r.kind === "Explicit");
    expect(explicit).toHaveLength(1);
    expect(explicit[0].conn).toEqual([4, 6]);
    expect(explicit[0].sense).toBe("Temporal.Asynchronous.Precedence");
  });
});
