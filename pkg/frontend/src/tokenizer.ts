/**
 * Rule tokenizer: whitespace split with trailing punctuation detached, a
 * sentence boundary after each of `. ! ?`, and any trailing unterminated
 * material forming a final sentence. The bridge owns tokenization; all
 * annotation indices refer to these tokens.
 */

import { DocumentRecord, TokenRecord } from "./interchange.js";

const SENTENCE_TERMINALS = new Set([".", "!", "?"]);
const DETACHED = new Set([".", "!", "?", ",", ";", ":"]);

export interface Tokenized {
  tokens: TokenRecord[];
  sentence_bounds: Array<[number, number]>;
}

export function tokenize(text: string): Tokenized {
  const raw: Array<{ text: string; start: number; end: number }> = [];
  const re = /\S+/g;
  let match: RegExpExecArray | null;
  while ((match = re.exec(text)) !== null) {
    const chunk = match[0];
    const start = match.index;
    let j = chunk.length;
    while (j > 0 && DETACHED.has(chunk[j - 1])) j -= 1;
    if (j > 0) raw.push({ text: chunk.slice(0, j), start, end: start + j });
    for (let k = j; k < chunk.length; k += 1) {
      raw.push({ text: chunk[k], start: start + k, end: start + k + 1 });
    }
  }

  const tokens: TokenRecord[] = [];
  const bounds: Array<[number, number]> = [];
  let sentenceStart = 0;
  let sentenceIndex = 0;
  for (const piece of raw) {
    tokens.push({
      text: piece.text,
      char_start: piece.start,
      char_end: piece.end,
      sentence_index: sentenceIndex,
    });
    if (SENTENCE_TERMINALS.has(piece.text)) {
      bounds.push([sentenceStart, tokens.length]);
      sentenceStart = tokens.length;
      sentenceIndex += 1;
    }
  }
  if (sentenceStart < tokens.length) bounds.push([sentenceStart, tokens.length]);
  return { tokens, sentence_bounds: bounds };
}

export function toDocumentRecord(id: string, tokenized: Tokenized): DocumentRecord {
  return {
    kind: "document",
    id,
    tokens: tokenized.tokens,
    sentence_bounds: tokenized.sentence_bounds,
  };
}
