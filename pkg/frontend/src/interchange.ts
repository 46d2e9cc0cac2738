/**
 * Interchange record types shared with the span-prediction toolkit.
 *
 * Files are UTF-8 JSON Lines: one header record, then one record per
 * document / per annotated document. Token indices are 0-based and
 * end-exclusive throughout.
 */

export interface TokenRecord {
  text: string;
  char_start: number;
  char_end: number;
  sentence_index: number;
}

export interface DocumentRecord {
  kind: "document";
  id: string;
  tokens: TokenRecord[];
  sentence_bounds: Array<[number, number]>;
}

export interface SrlViewRecord {
  verb_index: number;
  tags: string[];
}

export interface CorefClusterRecord {
  cluster_id: number;
  mentions: Array<[number, number]>;
}

export interface DiscourseRecord {
  kind: "Explicit" | "NonExplicit";
  sense: string;
  conn?: [number, number];
  arg1: [number, number];
  arg2: [number, number];
}

export interface AnnotationRecord {
  kind: "annotations";
  document_id: string;
  srl_views: SrlViewRecord[];
  coref: CorefClusterRecord[];
  discourse: DiscourseRecord[];
}

export const DATASET_HEADER = { kind: "header", format: "qa-dataset", version: 1 };
export const ANNOTATIONS_HEADER = { kind: "header", format: "qa-annotations", version: 1 };

export function documentsFile(split: string, documents: DocumentRecord[]): string {
  const lines = [JSON.stringify({ ...DATASET_HEADER, split })];
  for (const doc of documents) lines.push(JSON.stringify(doc));
  return lines.join("\n") + "\n";
}

export function annotationsFile(records: AnnotationRecord[]): string {
  const lines = [JSON.stringify(ANNOTATIONS_HEADER)];
  for (const record of records) lines.push(JSON.stringify(record));
  return lines.join("\n") + "\n";
}
