/**
 * Drive the corpus through an encoder and write hazard-record NDJSON:
 * {"id", "tokens", "embedding", "labels": {"severity", "possibility", "risk"}}
 * with one embedding row per token, in corpus order.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { parseCorpus } from "./corpus.js";
import { Encoder, loadEncoder } from "./encoder.js";
import { tokenize } from "./tokenizer.js";

export interface ExportOptions {
  corpusPath: string;
  encoderId: string;
  outPath: string;
  maxLen: number;
  warn?: (message: string) => void;
}

export function recordFor(encoder: Encoder, line: { id: string; text: string; severity: number; possibility: number; risk: number }, maxLen: number, warn: (m: string) => void) {
  const { tokens, truncated } = tokenize(line.text, maxLen);
  if (truncated) {
    warn(`record '${line.id}': text truncated to ${maxLen} tokens`);
  }
  const embedding = encoder.encode(tokens);
  return {
    id: line.id,
    tokens,
    embedding,
    labels: { severity: line.severity, possibility: line.possibility, risk: line.risk },
  };
}

export async function exportEmbeddings(options: ExportOptions): Promise<number> {
  const warn = options.warn ?? ((message) => console.warn(message));
  const corpus = parseCorpus(readFileSync(options.corpusPath, "utf-8"));
  const encoder = await loadEncoder(options.encoderId);
  const lines = corpus.map((line) =>
    JSON.stringify(recordFor(encoder, line, options.maxLen, warn)),
  );
  writeFileSync(options.outPath, lines.map((l) => l + "\n").join(""));
  return corpus.length;
}
