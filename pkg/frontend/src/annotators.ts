/**
 * Rule-based annotator backends.
 *
 * The toolkit's validator is the bridge's correctness contract, so these
 * backends guarantee structural invariants by construction: semantic-view
 * tags stay within the verb's sentence, coreference mentions never overlap
 * within a cluster, Explicit relations keep both arguments inside one
 * sentence on opposite sides of the connective, and every consecutive
 * sentence pair receives exactly one Non-Explicit sense.
 *
 * Model identifiers (`rule-srl/1`, ...) are recorded in the lock manifest
 * next to the outputs; swapping in heavier external annotators means
 * registering another backend under a new identifier.
 */

import {
  CorefClusterRecord,
  DiscourseRecord,
  SrlViewRecord,
} from "./interchange.js";
import { Tokenized } from "./tokenizer.js";

export const ANNOTATOR_VERSIONS = {
  srl: "rule-srl/1",
  coref: "rule-coref/1",
  dr: "rule-dr/1",
} as const;

export type AnnotatorName = keyof typeof ANNOTATOR_VERSIONS;

const NULL_TAG = "NONE";

const VERB_FORMS = new Set([
  "is", "are", "was", "were", "has", "had", "have", "went", "came", "ran",
  "ate", "said", "told", "saw", "met", "took", "gave", "made", "found",
  "kept", "left", "slept", "held", "hid", "sold", "built", "wrote", "read",
  "sang", "bought", "brought", "stood", "sat", "felt", "knew", "thought",
]);

const VERB_STOPLIST = new Set([
  "tired", "red", "bed", "hundred", "sacred", "wicked", "naked", "crooked",
]);

const PRONOUNS = new Set(["he", "she", "they", "him", "her", "them"]);

const PREPOSITIONS = new Set(["at", "in", "on", "near", "inside", "under", "by", "with", "to"]);

const PUNCT = new Set([".", "!", "?", ",", ";", ":"]);

// connective surface form -> shared-task sense
const EXPLICIT_SENSES: Record<string, string> = {
  because: "Contingency.Cause.Reason",
  but: "Comparison.Contrast",
  however: "Comparison.Contrast",
  although: "Comparison.Concession",
  though: "Comparison.Concession",
  so: "Contingency.Cause.Result",
  if: "Contingency.Condition",
  while: "Temporal.Synchrony",
  meanwhile: "Temporal.Synchrony",
  then: "Temporal.Asynchronous.Precedence",
  before: "Temporal.Asynchronous.Precedence",
  after: "Temporal.Asynchronous.Succession",
  or: "Expansion.Alternative",
  instead: "Expansion.Alternative.Chosen alternative",
};

function isVerb(text: string): boolean {
  const lower = text.toLowerCase();
  if (VERB_FORMS.has(lower)) return true;
  if (VERB_STOPLIST.has(lower)) return false;
  return lower.length > 3 && lower.endsWith("ed");
}

function isCapitalizedWord(text: string): boolean {
  return /^[A-Z][a-z]+$/.test(text);
}

// common sentence openers that never denote an entity mention
const CAPITALIZED_STOPLIST = new Set([
  "the", "a", "an", "if", "but", "and", "or", "so", "when", "while", "then",
  "later", "afterwards", "however", "meanwhile", "he", "she", "they", "it",
  "his", "her", "their", "this", "that", "these", "those", "one", "another",
]);

/** One semantic view per detected verb; arguments stay inside the sentence. */
export function annotateSrl(doc: Tokenized): SrlViewRecord[] {
  const views: SrlViewRecord[] = [];
  const n = doc.tokens.length;
  for (const [start, end] of doc.sentence_bounds) {
    const verbIndices: number[] = [];
    for (let i = start; i < end; i += 1) {
      if (isVerb(doc.tokens[i].text)) verbIndices.push(i);
    }
    for (const verb of verbIndices) {
      const text = doc.tokens[verb].text.toLowerCase();
      // auxiliary "was/were" directly before a participle belongs to that verb's view
      if ((text === "was" || text === "were") && verb + 1 < end && isVerb(doc.tokens[verb + 1].text)) {
        continue;
      }
      const tags: string[] = new Array(n).fill(NULL_TAG);
      tags[verb] = "V";
      const passive = verb > start &&
        ["was", "were"].includes(doc.tokens[verb - 1].text.toLowerCase());

      const leftStop = Math.max(start,
        ...verbIndices.filter((v) => v < verb - (passive ? 1 : 0)).map((v) => v + 1));
      const leftEnd = passive ? verb - 1 : verb;
      for (let i = leftStop; i < leftEnd; i += 1) {
        if (!PUNCT.has(doc.tokens[i].text) && !(doc.tokens[i].text.toLowerCase() in EXPLICIT_SENSES)) {
          tags[i] = passive ? "ARG1" : "ARG0";
        }
      }
      let i = verb + 1;
      let role = passive ? "ARG0" : "ARG1";
      while (i < end) {
        const tok = doc.tokens[i].text.toLowerCase();
        if (PUNCT.has(tok) || tok in EXPLICIT_SENSES || verbIndices.includes(i)) break;
        if (PREPOSITIONS.has(tok) && !passive) {
          role = tok === "by" ? "ARG0" : "ARGM-LOC";
        } else if (tok === "by" && passive) {
          role = "ARG0";
          tags[i] = role;
          i += 1;
          continue;
        }
        tags[i] = role;
        i += 1;
      }
      views.push({ verb_index: verb, tags });
    }
  }
  return views;
}

/** Name mentions plus pronouns chained to the most recent name. */
export function annotateCoref(doc: Tokenized): CorefClusterRecord[] {
  const mentionsByName = new Map<string, Array<[number, number]>>();
  let lastName: string | null = null;
  doc.tokens.forEach((tok, i) => {
    const isName = isCapitalizedWord(tok.text)
      && !CAPITALIZED_STOPLIST.has(tok.text.toLowerCase())
      && !isVerb(tok.text);
    if (isName) {
      const spans = mentionsByName.get(tok.text) ?? [];
      spans.push([i, i + 1]);
      mentionsByName.set(tok.text, spans);
      lastName = tok.text;
    } else if (PRONOUNS.has(tok.text.toLowerCase()) && lastName !== null) {
      mentionsByName.get(lastName)!.push([i, i + 1]);
    }
  });
  const clusters: CorefClusterRecord[] = [];
  let clusterId = 0;
  for (const [, spans] of [...mentionsByName.entries()].sort(
    (a, b) => a[1][0][0] - b[1][0][0])) {
    if (spans.length >= 2) {
      clusters.push({ cluster_id: clusterId, mentions: spans });
      clusterId += 1;
    }
  }
  return clusters;
}

function connectiveAt(doc: Tokenized, i: number): { length: number; sense: string } | null {
  const tok = doc.tokens[i].text.toLowerCase();
  if (tok === "and" && i + 1 < doc.tokens.length &&
      doc.tokens[i + 1].text.toLowerCase() === "then") {
    return { length: 2, sense: EXPLICIT_SENSES.then };
  }
  if (tok in EXPLICIT_SENSES) return { length: 1, sense: EXPLICIT_SENSES[tok] };
  return null;
}

function overlapRatio(a: string[], b: string[]): number {
  const setA = new Set(a.map((t) => t.toLowerCase()));
  const common = b.filter((t) => setA.has(t.toLowerCase()));
  return common.length / Math.max(1, Math.min(a.length, b.length));
}

/**
 * Explicit relations from mid-sentence connective matches (arguments are the
 * text left and right of the connective, inside one sentence) plus one
 * Non-Explicit sense per consecutive sentence pair.
 */
export function annotateDiscourse(doc: Tokenized): DiscourseRecord[] {
  const records: DiscourseRecord[] = [];
  for (const [start, end] of doc.sentence_bounds) {
    for (let i = start + 1; i < end - 1; i += 1) {
      const conn = connectiveAt(doc, i);
      if (conn === null) continue;
      if (i + conn.length >= end) continue;
      records.push({
        kind: "Explicit",
        sense: conn.sense,
        conn: [i, i + conn.length],
        arg1: [start, i],
        arg2: [i + conn.length, end],
      });
      break; // one relation per sentence keeps the projection collision-free
    }
  }
  for (let s = 0; s + 1 < doc.sentence_bounds.length; s += 1) {
    const [a1s, a1e] = doc.sentence_bounds[s];
    const [a2s, a2e] = doc.sentence_bounds[s + 1];
    const first = doc.tokens[a2s].text.toLowerCase();
    const a1Texts = doc.tokens.slice(a1s, a1e).map((t) => t.text);
    const a2Texts = doc.tokens.slice(a2s, a2e).map((t) => t.text);
    let sense = "Expansion.Conjunction";
    if (PRONOUNS.has(first) || first === "it") sense = "EntRel";
    else if (first === "later" || first === "afterwards") sense = "Temporal.Asynchronous.Precedence";
    else if (overlapRatio(a1Texts, a2Texts) >= 0.5) sense = "Expansion.Restatement";
    records.push({
      kind: "NonExplicit",
      sense,
      arg1: [a1s, a1e],
      arg2: [a2s, a2e],
    });
  }
  return records;
}
