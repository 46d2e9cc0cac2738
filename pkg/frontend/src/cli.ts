import { parseArgs } from "node:util";

import { parseAnnotators, runBridge } from "./bridge.js";

function main(): number {
  const { values } = parseArgs({
    options: {
      in: { type: "string" },
      out: { type: "string" },
      annotators: { type: "string", default: "srl,coref,dr" },
      split: { type: "string", default: "bridge" },
    },
  });
  if (!values.in || !values.out) {
    console.error("usage: bridge --in DIR --out FILE [--annotators srl,coref,dr] [--split NAME]");
    return 2;
  }
  try {
    const result = runBridge({
      inputDir: values.in,
      outputPath: values.out,
      annotators: parseAnnotators(values.annotators!),
      split: values.split!,
    });
    console.log(`wrote ${result.documentsPath}`);
    console.log(`wrote ${result.annotationsPath}`);
    console.log(`wrote ${result.lockPath}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

process.exit(main());
