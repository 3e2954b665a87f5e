import { describe, expect, it } from "vitest";

import { chunkWords } from "../src/chunker";

function words(n: number): string {
    return Array.from({ length: n }, (_, i) => `w${i}`).join(" ");
}

describe("chunkWords", () => {
    it("emits the reference starts for a 1000-word text", () => {
        const cs = chunkWords(words(1000));
        expect(cs.starts).toEqual([0, 320, 640, 960]);
        expect(cs.chunks[3].split(" ").length).toBe(40);
    });

    it("keeps a short text in one chunk", () => {
        const cs = chunkWords("The Matrix");
        expect(cs.chunks).toEqual(["The Matrix"]);
    });

    it("emits the trailing short window", () => {
        const cs = chunkWords(words(321));
        expect(cs.starts).toEqual([0, 320]);
        expect(cs.chunks[1]).toBe("w320");
    });

    it("applies the title empty-chunk policy", () => {
        expect(chunkWords("", 400, 80, true).chunks).toEqual([""]);
        expect(chunkWords("", 400, 80, false).chunks).toEqual([]);
    });

    it("rejects bad parameters", () => {
        expect(() => chunkWords("a b", 100, 100)).toThrow();
        expect(() => chunkWords("a b", 0, 0)).toThrow();
        expect(() => chunkWords("a b", 10, -1)).toThrow();
    });

    it("normalizes whitespace within chunks", () => {
        expect(chunkWords("a\n\nb\t c ").chunks).toEqual(["a b c"]);
    });

    it("reconstructs the source from chunk 0 plus later tails", () => {
        for (const [n, size, overlap] of [[57, 10, 3], [400, 400, 80],
                                          [1000, 400, 80], [5, 4, 1]]) {
            const source = words(n).split(" ");
            const cs = chunkWords(source.join(" "), size, overlap);
            const rebuilt = cs.chunks.length ? cs.chunks[0].split(" ") : [];
            for (const chunk of cs.chunks.slice(1)) {
                rebuilt.push(...chunk.split(" ").slice(overlap));
            }
            expect(rebuilt).toEqual(source);
        }
    });
});
