#!/usr/bin/env node
/**
 * esg-embed-export export --corpus articles.jsonl --catalog catalog.json \
 *     --model <id> --kind article|label|token --max-len 256 \
 *     --pooling cls|mean --out embeddings.store
 *
 * Exit codes: 0 success, 1 internal failure, 2 bad input.
 */

import { parseArgs } from "node:util";

import { InputFormatError } from "./corpus.js";
import { EncoderError } from "./encoders.js";
import { DEFAULT_MAX_LEN, defaultJob, runExport } from "./export.js";
import { StoreFormatError } from "./store.js";

const USAGE = `usage: esg-embed-export export
  --corpus <jsonl>      input corpus (repeatable; article/token kinds)
  --catalog <json>      label catalog (label kind)
  --model <id>          encoder id (default: multilingual paraphrase model;
                        "hash:<dim>[:<seed>]" is the built-in test encoder)
  --kind <kind>         article | label | token   (default: article)
  --max-len <n>         token rows per article    (default: ${DEFAULT_MAX_LEN})
  --pooling <mode>      cls | mean                (default: mean)
  --out <path>          output store file
`;

export async function main(argv: string[]): Promise<number> {
  if (argv[0] !== "export") {
    process.stderr.write(USAGE);
    return argv.length === 0 || argv[0] === "--help" ? 0 : 2;
  }
  let parsed;
  try {
    parsed = parseArgs({
      args: argv.slice(1),
      options: {
        corpus: { type: "string", multiple: true },
        catalog: { type: "string" },
        model: { type: "string" },
        kind: { type: "string" },
        "max-len": { type: "string" },
        pooling: { type: "string" },
        out: { type: "string" },
      },
    });
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n${USAGE}`);
    return 2;
  }
  const v = parsed.values;
  try {
    if (v.kind && !["article", "label", "token"].includes(v.kind)) {
      throw new EncoderError(`--kind must be article, label, or token, got ${v.kind}`);
    }
    if (v.pooling && !["cls", "mean"].includes(v.pooling)) {
      throw new EncoderError(`--pooling must be cls or mean, got ${v.pooling}`);
    }
    if (v.pooling && v.kind === "token") {
      throw new EncoderError("--pooling applies to pooled kinds, not token export");
    }
    if (!v.out) {
      throw new EncoderError("--out is required");
    }
    const job = defaultJob({
      corpusPaths: v.corpus ?? [],
      catalogPath: v.catalog,
      kind: (v.kind as "article" | "label" | "token") ?? "article",
      maxLen: v["max-len"] ? Number(v["max-len"]) : DEFAULT_MAX_LEN,
      pooling: (v.pooling as "cls" | "mean") ?? "mean",
      out: v.out,
    });
    if (v.model) {
      job.model = v.model;
    }
    const count = await runExport(job);
    process.stderr.write(`wrote ${count} ${job.kind} record(s) to ${job.out}\n`);
    return 0;
  } catch (err) {
    if (
      err instanceof EncoderError ||
      err instanceof InputFormatError ||
      err instanceof StoreFormatError ||
      (err as NodeJS.ErrnoException)?.code === "ENOENT"
    ) {
      process.stderr.write(`error: ${(err as Error).message}\n`);
      return 2;
    }
    process.stderr.write(`internal error: ${(err as Error)?.stack ?? err}\n`);
    return 1;
  }
}

const invokedDirectly = process.argv[1] && import.meta.url.endsWith(
  process.argv[1].split("/").pop() ?? "",
);
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
