/**
 * Cross-language conformance: sidecar-written caches must pass the
 * training pipeline's cache read, density, manifest and chunk-count
 * checks, and the HTTP service must satisfy the pipeline's encode
 * protocol — all exercised through the pipeline's public CLI.
 */

import { execFile, execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { promisify } from "node:util";
import type { AddressInfo } from "node:net";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { encodeCorpus } from "../src/encode";
import { HashEncoder } from "../src/encoders";
import { createApp } from "../src/server";

const PYTHON = process.env.PYTHON ?? "python3";
let dir: string;

function pipeline(args: string[]): string {
    try {
        return execFileSync(PYTHON, ["-m", "oscarnom", ...args],
            { cwd: dir, encoding: "utf-8", stdio: ["ignore", "pipe", "pipe"] });
    } catch (err: any) {
        throw new Error(`pipeline ${args.join(" ")} failed:\n${err.stderr ?? err}`);
    }
}

// non-blocking variant: required whenever the pipeline must reach back
// into a server hosted by this very test process
async function pipelineAsync(args: string[]): Promise<string> {
    try {
        const { stdout } = await promisify(execFile)(
            PYTHON, ["-m", "oscarnom", ...args], { cwd: dir, encoding: "utf-8" });
        return stdout;
    } catch (err: any) {
        throw new Error(`pipeline ${args.join(" ")} failed:\n${err.stderr ?? err}`);
    }
}

function writeConfig(name: string, sub: string, caches: string,
                     backend: object): string {
    const config = {
        seed: 11,
        paths: {
            corpus: `${sub}/data/corpus.jsonl`,
            awards: `${sub}/data/awards.json`,
            dataset: `${sub}/out/dataset.jsonl`,
            splits: `${sub}/out/splits.json`,
            caches: `${sub}/${caches}`,
            features: `${sub}/${caches}_features`,
            models: `${sub}/${caches}_models`,
            reports: `${sub}/${caches}_reports`,
        },
        backend,
        variants: ["script+summary+title"],
    };
    const file = path.join(dir, name);
    fs.writeFileSync(file, JSON.stringify(config, null, 2));
    return file;
}

function buildCorpus(sub: string, records: number): void {
    pipeline(["synth", "--out", `${sub}/data`, "--records", String(records),
              "--seed", "3", "--mode", "signal"]);
    const mockConfig = writeConfig(`config_${sub}_mock.json`, sub,
        "out/caches_mock", { kind: "mock", dimension: 16 });
    pipeline(["build-dataset", "--config", mockConfig]);
    pipeline(["split", "--config", mockConfig]);
    pipeline(["embed", "--config", mockConfig,
              "--dump-chunks", `${sub}/out/chunks.jsonl`]);
}

beforeAll(() => {
    dir = fs.mkdtempSync(path.join(os.tmpdir(), "sidecar-conformance-"));
    buildCorpus("five", 5);    // the minimal conformance corpus
    buildCorpus("large", 40);  // enough records to train through
}, 120_000);

afterAll(() => {
    fs.rmSync(dir, { recursive: true, force: true });
});

describe("batch-encoded caches", () => {
    it("pass the pipeline's cache, density and manifest checks on 5 records",
       async () => {
        const stats = await encodeCorpus({
            datasetPath: path.join(dir, "five/out/dataset.jsonl"),
            outDir: path.join(dir, "five/out/caches"),
            encoder: new HashEncoder(16),
            chunkManifestPath: path.join(dir, "five/out/chunks.jsonl"),
        });
        expect(stats.title.docs).toBe(5);
        expect(stats.title.chunks).toBe(5);

        const cacheOnly = writeConfig("config_five_cache.json", "five",
            "out/caches", { kind: "cache-only", dimension: 16 });
        const out = pipeline(["embed", "--config", cacheOnly]);
        expect(out).toContain("title");
    }, 120_000);

    it("train and evaluate end to end from sidecar caches", async () => {
        await encodeCorpus({
            datasetPath: path.join(dir, "large/out/dataset.jsonl"),
            outDir: path.join(dir, "large/out/caches"),
            encoder: new HashEncoder(16),
            chunkManifestPath: path.join(dir, "large/out/chunks.jsonl"),
        });
        const cacheOnly = writeConfig("config_large_cache.json", "large",
            "out/caches", { kind: "cache-only", dimension: 16 });
        pipeline(["embed", "--config", cacheOnly]);
        pipeline(["train", "--config", cacheOnly]);
        pipeline(["evaluate", "--config", cacheOnly]);
        expect(fs.existsSync(path.join(dir,
            "large/out/caches_reports/script_summary_title.report.json"))).toBe(true);
    }, 120_000);

    it("refuses a declared dimension that disagrees with the model", async () => {
        await expect(encodeCorpus({
            datasetPath: path.join(dir, "five/out/dataset.jsonl"),
            outDir: path.join(dir, "five/out/caches_bad"),
            encoder: new HashEncoder(16),
            dimension: 768,
        })).rejects.toThrow(/dimension/);
        expect(fs.existsSync(path.join(dir, "five/out/caches_bad"))).toBe(false);
    });

    it("rejects chunk-count drift against the pipeline dump", async () => {
        await expect(encodeCorpus({
            datasetPath: path.join(dir, "five/out/dataset.jsonl"),
            outDir: path.join(dir, "five/out/caches_drift"),
            encoder: new HashEncoder(16),
            chunkSize: 150,
            chunkOverlap: 20,
            chunkManifestPath: path.join(dir, "five/out/chunks.jsonl"),
        })).rejects.toThrow(/drift/);
    });
});

describe("HTTP encode protocol", () => {
    let server: any;
    let url: string;

    beforeAll(async () => {
        const app = createApp(Promise.resolve(new HashEncoder(16)));
        await new Promise<void>((resolve) => {
            server = app.listen(0, "127.0.0.1", () => resolve());
        });
        url = `http://127.0.0.1:${(server.address() as AddressInfo).port}`;
        await new Promise((r) => setTimeout(r, 10));
    });

    afterAll(() => {
        server?.close();
    });

    it("feeds the pipeline's embed stage end to end", async () => {
        const httpConfig = writeConfig("config_http.json", "large",
            "out/caches_http", { kind: "http", url, dimension: 16 });

        await pipelineAsync(["embed", "--config", httpConfig]);
        await pipelineAsync(["train", "--config", httpConfig]);
        expect(fs.existsSync(path.join(dir,
            "large/out/caches_http_models/script_summary_title.model.json"))).toBe(true);
    }, 120_000);
});
