import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { execFileSync } from "node:child_process";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { parseAnnotators, runBridge } from "./bridge.js";

const FIXTURES = path.join(__dirname, "..", "fixtures");

let workDir: string;

beforeAll(() => {
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), "bridge-test-"));
});

afterAll(() => {
  fs.rmSync(workDir, { recursive: true, force: true });
});

describe("parseAnnotators", () => {
  it("accepts the known annotator names", () => {
    expect(parseAnnotators("srl,coref,dr")).toEqual(["srl", "coref", "dr"]);
  });

  it("rejects unknown annotators", () => {
    expect(() => parseAnnotators("srl,parser")).toThrow(/unknown annotator 'parser'/);
  });

  it("rejects an empty annotator list", () => {
    expect(() => parseAnnotators("")).toThrow(/at least one/);
  });
});

describe("runBridge", () => {
  it("writes documents, annotations, and the lock manifest", () => {
    const out = path.join(workDir, "full", "annotations.jsonl");
    const result = runBridge({
      inputDir: FIXTURES,
      outputPath: out,
      annotators: ["srl", "coref", "dr"],
      split: "bridge",
    });
    expect(result.documentIds).toHaveLength(5);
    for (const p of [result.documentsPath, result.annotationsPath, result.lockPath]) {
      expect(fs.existsSync(p)).toBe(true);
    }
    const lock = JSON.parse(fs.readFileSync(result.lockPath, "utf-8"));
    expect(lock.annotators).toEqual({
      srl: "rule-srl/1",
      coref: "rule-coref/1",
      dr: "rule-dr/1",
    });
  });

  it("is deterministic across runs", () => {
    const a = path.join(workDir, "detA", "annotations.jsonl");
    const b = path.join(workDir, "detB", "annotations.jsonl");
    for (const out of [a, b]) {
      runBridge({ inputDir: FIXTURES, outputPath: out, annotators: ["srl", "coref", "dr"], split: "bridge" });
    }
    expect(fs.readFileSync(a, "utf-8")).toBe(fs.readFileSync(b, "utf-8"));
  });

  it("fails on an empty input directory without writing anything", () => {
    const emptyIn = path.join(workDir, "empty-in");
    fs.mkdirSync(emptyIn, { recursive: true });
    const out = path.join(workDir, "empty-out", "annotations.jsonl");
    expect(() => runBridge({
      inputDir: emptyIn, outputPath: out, annotators: ["srl"], split: "bridge",
    })).toThrow(/no .txt inputs/);
    expect(fs.existsSync(path.dirname(out))).toBe(false);
  });

  it("honors the annotator subset", () => {
    const out = path.join(workDir, "subset", "annotations.jsonl");
    runBridge({ inputDir: FIXTURES, outputPath: out, annotators: ["dr"], split: "bridge" });
    const lines = fs.readFileSync(out, "utf-8").trim().split("\n").slice(1);
    for (const line of lines) {
      const record = JSON.parse(line);
      expect(record.srl_views).toEqual([]);
      expect(record.coref).toEqual([]);
      expect(record.discourse.length).toBeGreaterThan(0);
    }
  });
});

describe("primary validator integration", () => {
  it("all five sample texts pass the toolkit validator with zero errors", () => {
    const out = path.join(workDir, "validate", "annotations.jsonl");
    const result = runBridge({
      inputDir: FIXTURES,
      outputPath: out,
      annotators: ["srl", "coref", "dr"],
      split: "bridge",
    });
    const stdout = execFileSync(
      "python3",
      ["-m", "semqa.cli", "validate", result.documentsPath, result.annotationsPath],
      { encoding: "utf-8" },
    );
    expect(stdout).toContain("OK (5 documents");
    expect(stdout).toContain("OK (5 annotated documents)");
  });
});
