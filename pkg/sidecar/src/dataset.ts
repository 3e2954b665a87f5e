/** Dataset JSON-lines access: one record per line with the cleaned texts. */

import * as fs from "node:fs";

export interface DatasetRecord {
    imdb_id: string;
    title: string;
    summary: string;
    script_clean: string;
}

export function loadDataset(path: string): DatasetRecord[] {
    const records: DatasetRecord[] = [];
    const lines = fs.readFileSync(path, "utf-8").split("\n");
    lines.forEach((line, i) => {
        if (!line.trim()) return;
        let row: Record<string, unknown>;
        try {
            row = JSON.parse(line);
        } catch {
            throw new Error(`${path}:${i + 1}: bad JSON line`);
        }
        if (typeof row.imdb_id !== "string" || row.imdb_id.length === 0) {
            throw new Error(`${path}:${i + 1}: record lacks imdb_id`);
        }
        records.push({
            imdb_id: row.imdb_id,
            title: String(row.title ?? ""),
            summary: String(row.summary ?? ""),
            script_clean: String(row.script_clean ?? ""),
        });
    });
    return records;
}

export function fieldText(record: DatasetRecord, field: string): string {
    if (field === "script") return record.script_clean;
    if (field === "summary") return record.summary;
    if (field === "title") return record.title;
    throw new Error(`unknown field ${field}`);
}
