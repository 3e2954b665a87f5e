#!/usr/bin/env node
/** Sidecar CLI: batch-encode a dataset into cache files, or serve the
 * HTTP encode protocol. */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { encodeCorpus } from "./encode";
import { loadEncoder } from "./encoders";
import { createApp } from "./server";

const DEFAULT_MODEL = "e5-base-v2";

async function main(): Promise<void> {
    await yargs(hideBin(process.argv))
        .scriptName("sidecar")
        .command(
            "encode",
            "Encode a dataset's chunks into per-field cache files",
            (y: any) => y
                .option("dataset", { type: "string", demandOption: true,
                                     describe: "dataset JSON-lines file" })
                .option("out", { type: "string", demandOption: true,
                                 describe: "output directory for the caches" })
                .option("model", { type: "string", default: DEFAULT_MODEL,
                                   describe: "model id, or hash-<dim> for the offline stand-in" })
                .option("dimension", { type: "number",
                                       describe: "declared embedding width (checked against the model)" })
                .option("chunk-size", { type: "number", default: 400 })
                .option("chunk-overlap", { type: "number", default: 80 })
                .option("prefix", { type: "string", default: "query: " })
                .option("batch-size", { type: "number", default: 96 })
                .option("title-batch-size", { type: "number", default: 256 })
                .option("normalize", { type: "boolean", default: true })
                .option("chunk-manifest", { type: "string",
                                            describe: "pipeline chunk dump (JSONL) to cross-check counts" }),
            async (argv: any) => {
                const encoder = await loadEncoder(argv.model, {
                    dimension: argv.dimension,
                    normalize: argv.normalize,
                });
                const stats = await encodeCorpus({
                    datasetPath: argv.dataset,
                    outDir: argv.out,
                    encoder,
                    chunkSize: argv.chunkSize,
                    chunkOverlap: argv.chunkOverlap,
                    prefix: argv.prefix,
                    batchSize: argv.batchSize,
                    titleBatchSize: argv.titleBatchSize,
                    dimension: argv.dimension,
                    chunkManifestPath: argv.chunkManifest,
                    log: (m: string) => console.error(m),
                });
                for (const [field, s] of Object.entries(stats)) {
                    console.log(`${field}: ${s.chunks} chunks over ${s.docs} docs`);
                }
            },
        )
        .command(
            "serve",
            "Serve POST /encode and GET /healthz",
            (y: any) => y
                .option("host", { type: "string", default: "127.0.0.1" })
                .option("port", { type: "number", default: 4917 })
                .option("model", { type: "string", default: DEFAULT_MODEL })
                .option("dimension", { type: "number" })
                .option("normalize", { type: "boolean", default: true }),
            async (argv: any) => {
                const app = createApp(loadEncoder(argv.model, {
                    dimension: argv.dimension,
                    normalize: argv.normalize,
                }));
                await new Promise<void>((resolve) => {
                    const server = app.listen(argv.port, argv.host, () => {
                        const addr = server.address();
                        const where = typeof addr === "object" && addr
                            ? `${addr.address}:${addr.port}` : String(addr);
                        console.error(`listening on http://${where}`);
                    });
                    process.on("SIGINT", () => server.close(() => resolve()));
                    process.on("SIGTERM", () => server.close(() => resolve()));
                });
            },
        )
        .demandCommand(1)
        .strict()
        .help()
        .parseAsync();
}

main().catch((err) => {
    console.error(String(err instanceof Error ? err.message : err));
    process.exit(1);
});
