/**
 * The export job runner: read articles or label definitions, encode them in
 * order-preserving batches, and write a valid embedding-store file.
 */

import { CorpusArticle, embeddingText, readCatalog, readCorpus } from "./corpus.js";
import { DEFAULT_MODEL, Encoder, EncoderError, Pooling, resolveEncoder } from "./encoders.js";
import { writeTokenStore, writeVectorStore } from "./store.js";

export const BATCH_SIZE = 32;
export const DEFAULT_MAX_LEN = 256;

export interface ExportJob {
  corpusPaths: string[];
  catalogPath?: string;
  model: string;
  kind: "article" | "label" | "token";
  maxLen: number;
  pooling: Pooling;
  out: string;
}

export function defaultJob(partial: Partial<ExportJob>): ExportJob {
  return {
    corpusPaths: [],
    model: DEFAULT_MODEL,
    kind: "article",
    maxLen: DEFAULT_MAX_LEN,
    pooling: "mean",
    out: "embeddings.store",
    ...partial,
  };
}

function loadArticles(job: ExportJob): CorpusArticle[] {
  if (job.corpusPaths.length === 0) {
    throw new EncoderError(`--corpus is required for kind=${job.kind}`);
  }
  const articles: CorpusArticle[] = [];
  const seen = new Set<string>();
  for (const path of job.corpusPaths) {
    for (const article of readCorpus(path)) {
      if (seen.has(article.id)) {
        throw new EncoderError(
          `article id ${JSON.stringify(article.id)} appears in more than one corpus`,
        );
      }
      seen.add(article.id);
      articles.push(article);
    }
  }
  return articles;
}

async function encodePooled(
  encoder: Encoder,
  items: { id: string; text: string }[],
): Promise<{ id: string; vector: number[] }[]> {
  const records: { id: string; vector: number[] }[] = [];
  for (let start = 0; start < items.length; start += BATCH_SIZE) {
    const batch = items.slice(start, start + BATCH_SIZE);
    const vectors = await encoder.embedBatch(batch.map((b) => b.text));
    batch.forEach((item, i) => records.push({ id: item.id, vector: vectors[i] }));
  }
  return records;
}

/** Run one export job; returns the number of records written. */
export async function runExport(job: ExportJob, encoder?: Encoder): Promise<number> {
  const enc = encoder ?? resolveEncoder(job.model, job.pooling);

  if (job.kind === "label") {
    if (!job.catalogPath) {
      throw new EncoderError("--catalog is required for kind=label");
    }
    const labels = readCatalog(job.catalogPath);
    const records = await encodePooled(
      enc,
      labels.map((l) => ({ id: l.id, text: l.definition })),
    );
    writeVectorStore(job.out, "label", records[0].vector.length, records);
    return records.length;
  }

  const articles = loadArticles(job);

  if (job.kind === "article") {
    const records = await encodePooled(
      enc,
      articles.map((a) => ({ id: a.id, text: embeddingText(a) })),
    );
    writeVectorStore(job.out, "article", records[0].vector.length, records);
    return records.length;
  }

  // token export
  if (!enc.embedTokens) {
    throw new EncoderError(
      `model ${JSON.stringify(enc.id)} only produces pooled vectors; ` +
        "token export requires a token-level encoder",
    );
  }
  if (job.maxLen < 1) {
    throw new EncoderError(`--max-len must be positive, got ${job.maxLen}`);
  }
  const records = [];
  for (const article of articles) {
    const tokens = await enc.embedTokens(embeddingText(article), job.maxLen);
    records.push({ id: article.id, tokens });
  }
  writeTokenStore(job.out, records[0].tokens[0].length, records);
  return records.length;
}
