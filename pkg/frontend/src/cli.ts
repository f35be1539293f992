#!/usr/bin/env node
/**
 * embed-export --corpus <tsv> --encoder <model-id> --out <ndjson> --max-len <int>
 */

import { exportEmbeddings } from "./exporter.js";

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(`malformed arguments near '${flag}'`);
    }
    out.set(flag.slice(2), value);
  }
  return out;
}

async function main() {
  const args = parseArgs(process.argv.slice(2));
  const corpus = args.get("corpus");
  const out = args.get("out");
  if (!corpus || !out) {
    console.error(
      "usage: embed-export --corpus <tsv> --encoder <model-id> --out <ndjson> --max-len <int>",
    );
    process.exit(2);
  }
  const encoder = args.get("encoder") ?? "hash-768";
  const maxLen = Number(args.get("max-len") ?? "512");
  if (!Number.isInteger(maxLen) || maxLen < 1) {
    console.error(`invalid --max-len '${args.get("max-len")}'`);
    process.exit(2);
  }
  const count = await exportEmbeddings({
    corpusPath: corpus,
    encoderId: encoder,
    outPath: out,
    maxLen,
  });
  console.log(`wrote ${count} records to ${out}`);
}

main().catch((err) => {
  console.error(String(err instanceof Error ? err.message : err));
  process.exit(1);
});
