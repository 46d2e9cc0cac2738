/**
 * Bridge pipeline: read raw texts, tokenize, run the configured annotators,
 * and emit interchange files the span-prediction toolkit loads directly.
 *
 * All records are built in memory first; nothing is written until every
 * document annotated successfully, so failures never leave partial files.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import {
  ANNOTATOR_VERSIONS,
  AnnotatorName,
  annotateCoref,
  annotateDiscourse,
  annotateSrl,
} from "./annotators.js";
import {
  AnnotationRecord,
  DocumentRecord,
  annotationsFile,
  documentsFile,
} from "./interchange.js";
import { toDocumentRecord, tokenize } from "./tokenizer.js";

export interface BridgeConfig {
  inputDir: string;
  outputPath: string; // annotations file; documents land next to it
  annotators: AnnotatorName[];
  split: string;
}

export interface BridgeResult {
  documentsPath: string;
  annotationsPath: string;
  lockPath: string;
  documentIds: string[];
}

export function parseAnnotators(spec: string): AnnotatorName[] {
  const names = spec.split(",").map((s) => s.trim()).filter((s) => s.length > 0);
  if (names.length === 0) {
    throw new Error("at least one annotator must be enabled");
  }
  for (const name of names) {
    if (!(name in ANNOTATOR_VERSIONS)) {
      throw new Error(
        `unknown annotator '${name}'; available: ${Object.keys(ANNOTATOR_VERSIONS).join(", ")}`,
      );
    }
  }
  return names as AnnotatorName[];
}

export function runBridge(config: BridgeConfig): BridgeResult {
  if (config.annotators.length === 0) {
    throw new Error("at least one annotator must be enabled");
  }
  const files = fs .readdirSync(config.inputDir)
    .filter((name) => name.endsWith(".txt"))
    .sort();
  if (files.length === 0) {
    throw new Error(`no .txt inputs found under ${config.inputDir}`);
  }

  const documents: DocumentRecord[] = [];
  const annotations: AnnotationRecord[] = [];
  for (const file of files) {
    const text = fs.readFileSync(path.join(config.inputDir, file), "utf-8");
    const tokenized = tokenize(text);
    const id = `${config.split}-${path.basename(file, ".txt")}`;
    documents.push(toDocumentRecord(id, tokenized));
    annotations.push({
      kind: "annotations",
      document_id: id,
      srl_views: config.annotators.includes("srl") ? annotateSrl(tokenized) : [],
      coref: config.annotators.includes("coref") ? annotateCoref(tokenized) : [],
      discourse: config.annotators.includes("dr") ? annotateDiscourse(tokenized) : [],
    });
  }

  const annotationsPath = config.outputPath;
  const outDir = path.dirname(annotationsPath);
  fs.mkdirSync(outDir, { recursive: true });
  const documentsPath = path.join(outDir, "documents.jsonl");
  const lockPath = path.join(outDir, "bridge-lock.json");
  const lock = {
    annotators: Object.fromEntries(
      config.annotators.map((name) => [name, ANNOTATOR_VERSIONS[name]]),
    ),
    inputs: files,
    split: config.split,
  };

  fs.writeFileSync(documentsPath, documentsFile(config.split, documents));
  fs.writeFileSync(annotationsPath, annotationsFile(annotations));
  fs.writeFileSync(lockPath, JSON.stringify(lock, null, 2) + "\n");
  return {
    documentsPath,
    annotationsPath,
    lockPath,
    documentIds: documents.map((d) => d.id),
  };
}
