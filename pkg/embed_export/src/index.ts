export { CorpusArticle, CatalogLabel, embeddingText, readCatalog, readCorpus,
         InputFormatError } from "./corpus.js";
export { DEFAULT_MODEL, Encoder, EncoderError, Pooling, resolveEncoder } from "./encoders.js";
export { BATCH_SIZE, DEFAULT_MAX_LEN, ExportJob, defaultJob, runExport } from "./export.js";
export { LoadedStore, StoreFormatError, cosine, formatComponent, readStore,
         writeTokenStore, writeVectorStore } from "./store.js";
export { main } from "./cli.js";
