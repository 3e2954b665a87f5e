/**
 * HTTP encode service.
 *
 * POST /encode  {"texts": [...], "prefix": "query: "}
 *               -> {"dimension": d, "embeddings": [[f32, ...], ...]}
 * GET  /healthz -> {"status": "ok", "model": ..., "dimension": d}
 *
 * Responses: 503 while the model is loading (or failed to load), 400 on a
 * malformed request, 413 when a batch exceeds MAX_BATCH — oversize requests
 * are rejected, never silently truncated.
 */

import express from "express";
import { z } from "zod";

import { Encoder } from "./encoders";

export const MAX_BATCH = 1024;

const encodeRequest = z.object({
    texts: z.array(z.string()),
    prefix: z.string().default(""),
});

export function createApp(encoderPromise: Promise<Encoder>) {
    let encoder: Encoder | null = null;
    let loadError: Error | null = null;
    encoderPromise.then(
        (e) => { encoder = e; },
        (err) => { loadError = err instanceof Error ? err : new Error(String(err)); },
    );

    const app = express();
    app.use(express.json({ limit: "64mb" }));

    app.get("/healthz", (_req: any, res: any) => {
        if (loadError) {
            res.status(503).json({ status: "error", error: loadError.message });
        } else if (!encoder) {
            res.status(503).json({ status: "loading" });
        } else {
            res.json({ status: "ok", model: encoder.id, dimension: encoder.dimension });
        }
    });

    app.post("/encode", (req: any, res: any) => {
        if (loadError) {
            res.status(503).json({ error: `model failed to load: ${loadError.message}` });
            return;
        }
        if (!encoder) {
            res.status(503).json({ error: "model is still loading" });
            return;
        }
        const parsed = encodeRequest.safeParse(req.body);
        if (!parsed.success) {
            res.status(400).json({ error: "bad request: need {texts: string[], prefix: string}" });
            return;
        }
        const { texts, prefix } = parsed.data;
        if (texts.length > MAX_BATCH) {
            res.status(413).json({
                error: `batch of ${texts.length} exceeds the maximum`,
                max_batch: MAX_BATCH,
            });
            return;
        }
        const active = encoder;
        active.encode(texts, prefix).then(
            (embeddings) => res.json({ dimension: active.dimension, embeddings }),
            (err) => res.status(500).json({ error: String(err) }),
        );
    });

    // malformed JSON bodies surface as a 400, not an HTML error page
    app.use((err: any, _req: any, res: any, next: any) => {
        if (err?.type === "entity.parse.failed" || err instanceof SyntaxError) {
            res.status(400).json({ error: "request body is not valid JSON" });
            return;
        }
        next(err);
    });

    return app;
}
