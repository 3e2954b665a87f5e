"""Synthetic corpus generation for offline runs and experiments.

Produces corpus JSON-lines in the pipeline's input schema plus a matching
award file, with two
label regimes: ``null`` (labels independent of every text) and ``signal``
(positive records share a marker phrase). The mock encoder hashes whole
chunks, so in signal mode the marker is planted as the complete summary of
positive records — their summary chunks collide on one embedding, which is
exactly the separable structure an end-to-end run must recover.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

WORDS = (
    "night city rain detective letter harbor window silence dream engine "
    "garden whisper shadow train station mirror thunder copper violet north "
    "pepper ember canyon sister doctor martian violin orchard lantern salt "
    "winter glass motel highway sermon anchor circus dust ladder pigeon"
).split()

MARKER_PHRASE = "the golden reel committee smiled upon this screenplay"

POSITIVE_RATE = 0.19


def _sentence(rng: np.random.Generator, n_words: int) -> str:
    return " ".join(rng.choice(WORDS, size=n_words))


def synthetic_corpus(n_records: int, seed: int = 0, mode: str = "null",
                     positive_rate: float = POSITIVE_RATE,
                     n_positive: int | None = None):
    """Return (corpus rows, award rows) for ``n_records`` films.

    ``mode='null'``: labels drawn independently of all texts.
    ``mode='signal'``: positives share MARKER_PHRASE (their whole summary).
    ``n_positive`` pins the exact positive count when given.
    """
    if mode not in ("null", "signal"):
        raise ValueError(f"mode must be 'null' or 'signal', got {mode!r}")
    rng = np.random.default_rng(seed)
    if n_positive is None:
        n_positive = int(round(positive_rate * n_records))
    positives = set(rng.choice(n_records, size=n_positive, replace=False).tolist())

    corpus = []
    awards = []
    for i in range(n_records):
        year = int(1950 + rng.integers(0, 75))
        name = f"{_sentence(rng, 2).replace(' ', '_')}_{i:04d}_{year}"
        imdb_id = f"tt{7000000 + i}"
        positive = i in positives

        summary_words = int(rng.integers(25, 90))
        summary = _sentence(rng, summary_words)
        if mode == "signal" and positive:
            summary = MARKER_PHRASE

        scenes = []
        for _ in range(int(rng.integers(2, 5))):
            body = _sentence(rng, int(rng.integers(120, 280)))
            scenes.append(f"<scene><action>{body}</action></scene>")
        script = "<screenplay>" + "".join(scenes) + "</screenplay>"

        corpus.append({"movie_name": name, "imdb_id": imdb_id,
                       "script": script, "summary": summary})
        if positive:
            awards.append({"imdb_id": imdb_id, "category_class": "Writing",
                           "won": bool(rng.random() < 0.25)})
    return corpus, awards


def write_synthetic_corpus(out_dir: str | Path, n_records: int, seed: int = 0,
                           mode: str = "null",
                           n_positive: int | None = None) -> tuple[Path, Path]:
    """Write corpus.jsonl and awards.json under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus, awards = synthetic_corpus(n_records, seed=seed, mode=mode,
                                      n_positive=n_positive)
    corpus_path = out_dir / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for row in corpus:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    awards_path = out_dir / "awards.json"
    with open(awards_path, "w", encoding="utf-8") as fh:
        json.dump(awards, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return corpus_path, awards_path
