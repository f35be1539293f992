/**
 * Token encoders. The built-in `hash-<dim>` family is fully offline and
 * deterministic: each token's base vector is derived from a 64-bit hash of
 * its text through a splitmix64 stream, rows then mix with their neighbours
 * and a sinusoidal position code so identical tokens still get
 * context-dependent vectors. Other model ids are resolved through
 * `@xenova/transformers` when that package (and the model) is available
 * locally; there is no network fallback.
 */

export class EncoderLoadError extends Error {}

export interface Encoder {
  readonly id: string;
  readonly dim: number;
  encode(tokens: string[]): number[][];
}

const MASK64 = (1n << 64n) - 1n;

function fnv1a64(text: string): bigint {
  let hash = 0xcbf29ce484222325n;
  const bytes = Buffer.from(text, "utf-8");
  for (const byte of bytes) {
    hash ^= BigInt(byte);
    hash = (hash * 0x100000001b3n) & MASK64;
  }
  return hash;
}

function* splitmix64(seed: bigint): Generator<bigint> {
  let state = seed & MASK64;
  for (;;) {
    state = (state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    yield z ^ (z >> 31n);
  }
}

/** Uniform double in [-1, 1) from the top 53 bits of a 64-bit draw. */
function toUnit(draw: bigint): number {
  return (Number(draw >> 11n) / 2 ** 53) * 2 - 1;
}

export class HashEncoder implements Encoder {
  readonly id: string;
  readonly dim: number;
  private cache = new Map<string, number[]>();

  constructor(dim: number) {
    if (!Number.isInteger(dim) || dim < 1) {
      throw new EncoderLoadError(`invalid hash encoder width ${dim}`);
    }
    this.id = `hash-${dim}`;
    this.dim = dim;
  }

  private baseVector(token: string): number[] {
    let vec = this.cache.get(token);
    if (!vec) {
      const stream = splitmix64(fnv1a64(token));
      vec = Array.from({ length: this.dim }, () => toUnit(stream.next().value));
      this.cache.set(token, vec);
    }
    return vec;
  }

  private positionCode(pos: number, component: number): number {
    const pair = Math.floor(component / 2);
    const angle = pos / Math.pow(10000, (2 * pair) / this.dim);
    return 0.1 * (component % 2 === 0 ? Math.sin(angle) : Math.cos(angle));
  }

  encode(tokens: string[]): number[][] {
    const base = tokens.map((t) => this.baseVector(t));
    const rows: number[][] = [];
    for (let t = 0; t < tokens.length; t++) {
      const prev = base[t - 1] ?? base[t];
      const next = base[t + 1] ?? base[t];
      const row = new Array<number>(this.dim);
      for (let c = 0; c < this.dim; c++) {
        row[c] = 0.6 * base[t][c] + 0.2 * prev[c] + 0.2 * next[c] + this.positionCode(t, c);
      }
      rows.push(row);
    }
    return rows;
  }
}

const HASH_ID = /^hash-(\d+)$/;

export async function loadEncoder(modelId: string): Promise<Encoder> {
  const hashMatch = HASH_ID.exec(modelId);
  if (hashMatch) {
    return new HashEncoder(Number(hashMatch[1]));
  }
  let transformers: any;
  try {
    transformers = await import("@xenova/transformers" as string);
  } catch (err) {
    throw new EncoderLoadError(
      `encoder '${modelId}' requires @xenova/transformers with a locally cached model ` +
        `(not installed: ${(err as Error).message}); the offline built-in family is hash-<dim>, e.g. hash-768`,
    );
  }
  const extractor = await transformers.pipeline("feature-extraction", modelId);
  return new TransformerEncoder(modelId, extractor);
}

class TransformerEncoder implements Encoder {
  readonly dim: number = 0;

  constructor(
    readonly id: string,
    private extractor: any,
  ) {}

  encode(_tokens: string[]): number[][] {
    throw new EncoderLoadError(
      "per-token extraction through transformers.js must run via encodeAsync",
    );
  }

  async encodeAsync(text: string): Promise<number[][]> {
    const output = await this.extractor(text, { pooling: "none" });
    return output.tolist()[0];
  }
}
