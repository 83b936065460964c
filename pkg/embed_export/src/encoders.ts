/**
 * Encoder resolution. Model identifiers are opaque strings:
 *
 *   hash:<dim>[:<seed>]   built-in deterministic feature-hashing encoder
 *                         (no model weights; fixtures, CI, smoke tests)
 *   anything else         delegated to transformers.js (`@xenova/transformers`
 *                         must be installed); the id is passed through
 *                         unchanged to its feature-extraction pipeline
 *
 * The default for article/label export is the multilingual paraphrase
 * sentence encoder `sentence-transformers/paraphrase-multilingual-mpnet-base-v2`.
 */

import { createHmac } from "node:crypto";

export const DEFAULT_MODEL =
  "sentence-transformers/paraphrase-multilingual-mpnet-base-v2";

export type Pooling = "cls" | "mean";

export class EncoderError extends Error {}

export interface Encoder {
  readonly id: string;
  /** One pooled vector per input text. */
  embedBatch(texts: string[]): Promise<number[][]>;
  /** Per-token matrix for one text, truncated to maxLen rows; absent on
   * encoders that only produce pooled output. */
  embedTokens?(text: string, maxLen: number): Promise<number[][]>;
}

// ---------------------------------------------------------------------------
// Built-in hashing encoder

function tokenVector(token: string, dim: number, seed: string): number[] {
  const digest = createHmac("sha256", seed).update(token).digest();
  const v = new Array<number>(dim).fill(0);
  for (let probe = 0; probe < 4; probe++) {
    const u = digest.readUInt32LE(probe * 4);
    v[(u >>> 1) % dim] += u & 1 ? 1 : -1;
  }
  if (!v.some((x) => x !== 0)) {
    v[digest.readUInt32LE(16) % dim] = 1;
  }
  return v;
}

function normalized(v: number[]): number[] {
  const norm = Math.sqrt(v.reduce((s, x) => s + x * x, 0));
  if (norm === 0) {
    throw new EncoderError("token vectors cancelled to the zero vector");
  }
  return v.map((x) => x / norm);
}

class HashEncoder implements Encoder {
  constructor(
    readonly id: string,
    private readonly dim: number,
    private readonly seed: string,
  ) {}

  private tokens(text: string): string[] {
    const tokens = text.toLowerCase().split(/\s+/).filter(Boolean);
    if (tokens.length === 0) {
      throw new EncoderError("cannot embed text with no tokens");
    }
    return tokens;
  }

  async embedBatch(texts: string[]): Promise<number[][]> {
    return texts.map((text) => {
      const total = new Array<number>(this.dim).fill(0);
      for (const tok of this.tokens(text)) {
        const tv = tokenVector(tok, this.dim, this.seed);
        for (let i = 0; i < this.dim; i++) total[i] += tv[i];
      }
      return normalized(total);
    });
  }

  async embedTokens(text: string, maxLen: number): Promise<number[][]> {
    return this.tokens(text)
      .slice(0, maxLen)
      .map((tok) => normalized(tokenVector(tok, this.dim, this.seed)));
  }
}

function parseHashId(model: string): HashEncoder {
  const parts = model.slice("hash:".length).split(":");
  const dim = Number(parts[0]);
  if (!Number.isInteger(dim) || dim < 2) {
    throw new EncoderError(`bad hash encoder dim in ${JSON.stringify(model)}`);
  }
  return new HashEncoder(model, dim, parts[1] ?? "0");
}

// ---------------------------------------------------------------------------
// transformers.js backend (optional install)

class TransformersEncoder implements Encoder {
  private extractor: any;

  constructor(
    readonly id: string,
    private readonly pooling: Pooling,
  ) {}

  private async pipe(): Promise<any> {
    if (!this.extractor) {
      let mod: any;
      try {
        const specifier = "@xenova/transformers"; // optional install
        mod = await import(specifier);
      } catch {
        throw new EncoderError(
          `model ${JSON.stringify(this.id)} needs the transformers.js backend; ` +
            "install it with: npm install @xenova/transformers",
        );
      }
      this.extractor = await mod.pipeline("feature-extraction", this.id);
    }
    return this.extractor;
  }

  async embedBatch(texts: string[]): Promise<number[][]> {
    const extractor = await this.pipe();
    const out = await extractor(texts, { pooling: this.pooling, normalize: false });
    return out.tolist();
  }

  async embedTokens(text: string, maxLen: number): Promise<number[][]> {
    const extractor = await this.pipe();
    const out = await extractor(text); // [1, tokens, dim]
    const rows: number[][] = out.tolist()[0];
    return rows.slice(0, maxLen);
  }
}

export function resolveEncoder(model: string, pooling: Pooling = "mean"): Encoder {
  if (!model.trim()) {
    throw new EncoderError("model identifier must be non-empty");
  }
  if (model.startsWith("hash:")) {
    return parseHashId(model);
  }
  return new TransformersEncoder(model, pooling);
}
