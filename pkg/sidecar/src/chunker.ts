/**
 * Word-window chunking, deliberately duplicated from the training pipeline
 * rather than imported: the conformance test cross-checks chunk counts
 * against a pipeline-emitted chunk dump to catch drift.
 *
 * Words are maximal runs of non-whitespace. Starts advance by
 * size - overlap while they stay below the word count, so a short trailing
 * window is always emitted. Chunks are rejoined with single spaces.
 */

export interface ChunkSet {
    starts: number[];
    chunks: string[];
}

export const DEFAULT_CHUNK_SIZE = 400;
export const DEFAULT_CHUNK_OVERLAP = 80;

export function chunkWords(
    text: string,
    size: number = DEFAULT_CHUNK_SIZE,
    overlap: number = DEFAULT_CHUNK_OVERLAP,
    emptyChunk = false,
): ChunkSet {
    if (!Number.isInteger(size) || !Number.isInteger(overlap) ||
        size <= 0 || overlap < 0 || overlap >= size) {
        throw new Error(`need 0 <= overlap < size, got size=${size} overlap=${overlap}`);
    }
    const words = text.split(/\s+/).filter((w) => w.length > 0);
    const stride = size - overlap;
    const starts: number[] = [];
    const chunks: string[] = [];
    if (words.length === 0) {
        if (emptyChunk) {
            starts.push(0);
            chunks.push("");
        }
        return { starts, chunks };
    }
    for (let start = 0; start < words.length; start += stride) {
        starts.push(start);
        chunks.push(words.slice(start, start + size).join(" "));
    }
    return { starts, chunks };
}
