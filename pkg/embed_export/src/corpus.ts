/**
 * Readers for the corpus (JSONL) and label-catalog (JSON) input formats.
 * Encoding text mirrors the consumer's rule: title and body joined by a
 * newline when a title is present.
 */

import * as fs from "node:fs";

export class InputFormatError extends Error {}

export interface CorpusArticle {
  id: string;
  language: string;
  title: string | null;
  body: string;
  labels: string[];
}

export interface CatalogLabel {
  id: string;
  name: string;
  definition: string;
}

export function embeddingText(article: CorpusArticle): string {
  return article.title ? `${article.title}\n${article.body}` : article.body;
}

export function readCorpus(path: string): CorpusArticle[] {
  const out: CorpusArticle[] = [];
  const seen = new Set<string>();
  const lines = fs.readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, idx) => {
    if (!line.trim()) return;
    let rec: any;
    try {
      rec = JSON.parse(line);
    } catch (err) {
      throw new InputFormatError(`${path}:${idx + 1}: malformed JSON (${err})`);
    }
    const { id, language, body, labels } = rec;
    if (typeof id !== "string" || !id) {
      throw new InputFormatError(`${path}:${idx + 1}: missing article id`);
    }
    if (seen.has(id)) {
      throw new InputFormatError(`${path}:${idx + 1}: duplicate article id ${JSON.stringify(id)}`);
    }
    if (typeof language !== "string" || typeof body !== "string" || !body.trim()) {
      throw new InputFormatError(`${path}:${idx + 1}: bad language or empty body`);
    }
    if (!Array.isArray(labels) || labels.length < 1) {
      throw new InputFormatError(`${path}:${idx + 1}: labels must be a non-empty array`);
    }
    seen.add(id);
    out.push({ id, language, title: rec.title ?? null, body, labels });
  });
  if (out.length === 0) {
    throw new InputFormatError(`${path}: corpus is empty`);
  }
  return out;
}

export function readCatalog(path: string): CatalogLabel[] {
  let doc: any;
  try {
    doc = JSON.parse(fs.readFileSync(path, "utf-8"));
  } catch (err) {
    throw new InputFormatError(`${path}: not valid JSON (${err})`);
  }
  if (!doc || !Array.isArray(doc.labels)) {
    throw new InputFormatError(`${path}: expected an object with a 'labels' array`);
  }
  const seen = new Set<string>();
  return doc.labels.map((rec: any, i: number) => {
    const { id, name, definition } = rec ?? {};
    if (typeof id !== "string" || !id || seen.has(id)) {
      throw new InputFormatError(`${path}: labels[${i}]: missing or duplicate id`);
    }
    if (typeof definition !== "string" || !definition.trim()) {
      throw new InputFormatError(`${path}: labels[${i}]: definition must be non-empty`);
    }
    seen.add(id);
    return { id, name: String(name ?? id), definition };
  });
}
