/**
 * Embedding-store file format shared with the Python consumer.
 *
 * Line 1 header: {"dim": int, "kind": "article"|"label"|"token", "count": int}
 * Then one record per line: {"id", "vector": [...]} for article/label
 * stores, {"id", "tokens": [[...], ...]} for token stores.
 *
 * Floats are written with 9 significant digits so repeated exports are
 * stable; files are written to a temp path and renamed into place.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export type StoreKind = "article" | "label" | "token";

export interface VectorRecord {
  id: string;
  vector: number[];
}

export interface TokenRecord {
  id: string;
  tokens: number[][];
}

export class StoreFormatError extends Error {}

/** 9-significant-digit value, re-parsed so JSON emits its shortest form. */
export function formatComponent(value: number): number {
  if (!Number.isFinite(value)) {
    throw new StoreFormatError(`non-finite component ${value}`);
  }
  return Number(value.toPrecision(9));
}

function checkedVector(id: string, vector: number[], dim: number): number[] {
  if (vector.length !== dim) {
    throw new StoreFormatError(
      `id ${JSON.stringify(id)}: ${vector.length} components, expected ${dim}`,
    );
  }
  return vector.map(formatComponent);
}

function atomicWrite(outPath: string, content: string): void {
  const tmp = path.join(
    path.dirname(outPath),
    `.${path.basename(outPath)}.tmp-${process.pid}`,
  );
  fs.writeFileSync(tmp, content, "utf-8");
  fs.renameSync(tmp, outPath);
}

export function writeVectorStore(
  outPath: string,
  kind: "article" | "label",
  dim: number,
  records: VectorRecord[],
): void {
  const seen = new Set<string>();
  const lines = [JSON.stringify({ dim, kind, count: records.length })];
  for (const rec of records) {
    if (seen.has(rec.id)) {
      throw new StoreFormatError(`duplicate id ${JSON.stringify(rec.id)}`);
    }
    seen.add(rec.id);
    lines.push(JSON.stringify({ id: rec.id, vector: checkedVector(rec.id, rec.vector, dim) }));
  }
  atomicWrite(outPath, lines.join("\n") + "\n");
}

export function writeTokenStore(
  outPath: string,
  dim: number,
  records: TokenRecord[],
): void {
  const seen = new Set<string>();
  const lines = [JSON.stringify({ dim, kind: "token", count: records.length })];
  for (const rec of records) {
    if (seen.has(rec.id)) {
      throw new StoreFormatError(`duplicate id ${JSON.stringify(rec.id)}`);
    }
    seen.add(rec.id);
    if (rec.tokens.length < 1) {
      throw new StoreFormatError(`id ${JSON.stringify(rec.id)}: empty token matrix`);
    }
    const tokens = rec.tokens.map((row) => checkedVector(rec.id, row, dim));
    lines.push(JSON.stringify({ id: rec.id, tokens }));
  }
  atomicWrite(outPath, lines.join("\n") + "\n");
}

export interface LoadedStore {
  dim: number;
  kind: StoreKind;
  vectors: Map<string, number[]>;
  tokens: Map<string, number[][]>;
}

/** Reader with the same validation the Python side applies; used by tests
 * and by downstream tooling that wants to inspect exported stores. */
export function readStore(storePath: string): LoadedStore {
  const lines = fs.readFileSync(storePath, "utf-8").split("\n");
  const header = JSON.parse(lines[0]);
  const { dim, kind, count } = header;
  if (!["article", "label", "token"].includes(kind)) {
    throw new StoreFormatError(`unknown store kind ${JSON.stringify(kind)}`);
  }
  const vectors = new Map<string, number[]>();
  const tokens = new Map<string, number[][]>();
  for (let i = 1; i < lines.length; i++) {
    if (!lines[i].trim()) continue;
    const rec = JSON.parse(lines[i]);
    if (vectors.has(rec.id) || tokens.has(rec.id)) {
      throw new StoreFormatError(`duplicate id ${JSON.stringify(rec.id)}`);
    }
    if (kind === "token") {
      for (const row of rec.tokens) {
        if (row.length !== dim || !row.every(Number.isFinite)) {
          throw new StoreFormatError(`id ${JSON.stringify(rec.id)}: bad token row`);
        }
      }
      tokens.set(rec.id, rec.tokens);
    } else {
      if (rec.vector.length !== dim || !rec.vector.every(Number.isFinite)) {
        throw new StoreFormatError(`id ${JSON.stringify(rec.id)}: bad vector`);
      }
      vectors.set(rec.id, rec.vector);
    }
  }
  const n = kind === "token" ? tokens.size : vectors.size;
  if (n !== count) {
    throw new StoreFormatError(`header count ${count} != ${n} records`);
  }
  return { dim, kind, vectors, tokens };
}

export function cosine(a: number[], b: number[]): number {
  if (a.length !== b.length) {
    throw new StoreFormatError(`dimension mismatch ${a.length} vs ${b.length}`);
  }
  let dot = 0;
  let na = 0;
  let nb = 0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / Math.sqrt(na * nb);
}
