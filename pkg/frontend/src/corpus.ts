/**
 * Tab-separated hazard corpus: one line per hazard with columns
 * id, text, severity, possibility, risk (no header row).
 */

export class CorpusError extends Error {}

export interface CorpusLine {
  id: string;
  text: string;
  severity: number;
  possibility: number;
  risk: number;
}

const LABEL_TOPS: Array<[keyof Pick<CorpusLine, "severity" | "possibility" | "risk">, number]> = [
  ["severity", 5],
  ["possibility", 5],
  ["risk", 4],
];

function parseLabel(raw: string, name: string, top: number, lineno: number): number {
  if (!/^\d+$/.test(raw)) {
    throw new CorpusError(`line ${lineno}: ${name} label '${raw}' is not an integer`);
  }
  const value = Number(raw);
  if (value < 1 || value > top) {
    throw new CorpusError(`line ${lineno}: ${name} level ${value} outside 1..${top}`);
  }
  return value;
}

export function parseCorpus(content: string): CorpusLine[] {
  const lines = content.split("\n");
  const out: CorpusLine[] = [];
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i];
    const lineno = i + 1;
    if (line === "" && i === lines.length - 1) {
      continue; // trailing newline
    }
    const fields = line.split("\t");
    if (fields.length !== 5) {
      throw new CorpusError(`line ${lineno}: expected 5 tab-separated fields, got ${fields.length}`);
    }
    const [id, text, ...labels] = fields;
    if (id.trim() === "") {
      throw new CorpusError(`line ${lineno}: empty id`);
    }
    if (text.trim() === "") {
      throw new CorpusError(`line ${lineno}: empty hazard text`);
    }
    const parsed: Partial<CorpusLine> = { id, text };
    LABEL_TOPS.forEach(([name, top], idx) => {
      parsed[name] = parseLabel(labels[idx].trim(), name, top, lineno);
    });
    out.push(parsed as CorpusLine);
  }
  return out;
}
