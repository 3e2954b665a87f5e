/**
 * Text encoders: the real sentence-embedding model (via transformers.js)
 * and a deterministic hash-based stand-in for offline tests.
 */

import * as crypto from "node:crypto";

export interface Encoder {
    /** Model identifier recorded in cache manifests. */
    readonly id: string;
    readonly dimension: number;
    /** Whether emitted vectors are unit-L2-normalized. */
    readonly normalized: boolean;
    encode(texts: string[], prefix: string): Promise<number[][]>;
}

/**
 * Deterministic test encoder: each prefixed text is expanded through
 * counter-mode SHA-256 into uniform words, mapped to Gaussian coordinates
 * (Box-Muller) and scaled to unit norm. Same text, same vector, on every
 * platform.
 */
export class HashEncoder implements Encoder {
    readonly id: string;
    readonly normalized = true;

    constructor(readonly dimension: number) {
        this.id = `hash-${dimension}`;
    }

    private vector(text: string): number[] {
        const values: number[] = [];
        let block = 0;
        while (values.length < this.dimension) {
            const digest = crypto.createHash("sha256")
                .update(text, "utf-8")
                .update(Buffer.from([0, block & 0xff, (block >> 8) & 0xff]))
                .digest();
            for (let i = 0; i + 8 <= digest.length && values.length < this.dimension; i += 8) {
                const u1 = (digest.readUInt32LE(i) + 1) / 4294967297; // in (0, 1)
                const u2 = (digest.readUInt32LE(i + 4) + 1) / 4294967297;
                const radius = Math.sqrt(-2.0 * Math.log(u1));
                values.push(radius * Math.cos(2.0 * Math.PI * u2));
                if (values.length < this.dimension) {
                    values.push(radius * Math.sin(2.0 * Math.PI * u2));
                }
            }
            block += 1;
        }
        let norm = Math.sqrt(values.reduce((acc, v) => acc + v * v, 0));
        if (norm === 0) norm = 1;
        return values.map((v) => v / norm);
    }

    async encode(texts: string[], prefix: string): Promise<number[][]> {
        return texts.map((t) => this.vector(prefix + t));
    }
}

/** Sentence encoder backed by transformers.js feature extraction. */
class TransformersEncoder implements Encoder {
    constructor(
        readonly id: string,
        readonly dimension: number,
        readonly normalized: boolean,
        private readonly extractor: (texts: string[], opts: object) => Promise<{
            dims: number[];
            data: Float32Array;
        }>,
    ) {}

    async encode(texts: string[], prefix: string): Promise<number[][]> {
        const prefixed = texts.map((t) => prefix + t);
        const output = await this.extractor(prefixed, {
            pooling: "mean",
            normalize: this.normalized,
        });
        const [n, d] = output.dims;
        if (n !== texts.length || d !== this.dimension) {
            throw new Error(
                `model returned ${n}x${d}, expected ${texts.length}x${this.dimension}`);
        }
        const rows: number[][] = [];
        for (let i = 0; i < n; i++) {
            rows.push(Array.from(output.data.subarray(i * d, (i + 1) * d)));
        }
        return rows;
    }
}

function hubModelId(modelId: string): string {
    // bare names resolve to the ONNX conversions published under Xenova/
    return modelId.includes("/") ? modelId : `Xenova/${modelId}`;
}

export interface LoadOptions {
    dimension?: number;
    normalize?: boolean;
}

export async function loadEncoder(
    modelId: string,
    options: LoadOptions = {},
): Promise<Encoder> {
    const hashMatch = /^hash-(\d+)$/.exec(modelId);
    if (hashMatch) {
        return new HashEncoder(parseInt(hashMatch[1], 10));
    }

    let pipeline: (task: string, model: string) => Promise<any>;
    try {
        ({ pipeline } = await import("@xenova/transformers"));
    } catch (err) {
        throw new Error(
            `model ${modelId} needs the @xenova/transformers package, ` +
            `which is not installed (offline runs can use hash-<dim>): ${err}`);
    }
    const extractor = await pipeline("feature-extraction", hubModelId(modelId));
    const normalize = options.normalize ?? true;
    const probe = await extractor(["dimension probe"], {
        pooling: "mean",
        normalize,
    });
    const dimension = probe.dims[1];
    if (options.dimension !== undefined && options.dimension !== dimension) {
        throw new Error(
            `model ${modelId} emits dimension ${dimension}, config declares ${options.dimension}`);
    }
    return new TransformersEncoder(modelId, dimension, normalize, extractor);
}
