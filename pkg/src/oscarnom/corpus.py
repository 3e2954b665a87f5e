"""Dataset construction: screenplay cleaning, award joining, stratified splits.

The corpus enters as JSON-lines with ``movie_name``, ``imdb_id``, ``script``
(XML-tagged) and ``summary``. Award records arrive as CSV or JSON keyed by
imdb_id. The output dataset carries cleaned script variants, parsed
title/year and the binary nomination/winner labels.
"""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DuplicateImdbId, EmptyClass, MalformedName, ValidationError

TEXT_FIELDS = ("script", "summary", "title")

_MOVIE_NAME = re.compile(r"^(?P<title>.+)_(?P<year>\d{4})$")
_XML_TAG_RUN = re.compile(r"\s*(?:<[^<>]*>\s*)+")

# Maximal whitespace-only line runs of length >= 3 shrink to one blank line.
_BLANK_RUN = re.compile(r"\n(?:[^\S\n]*\n){3,}")

_CHAR_MAP = str.maketrans({
    "‘": "'", "’": "'", "‚": "'", "‛": "'",
    "“": '"', "”": '"', "„": '"', "‟": '"',
    "–": "-", "—": "-", "―": "-", "−": "-",
})

# Scene-transition lines dropped by clean_script. Each pattern must match a
# whole line (surrounding whitespace already stripped); trailing ':' or '.'
# optional. Overridable via a regex file, one pattern per line.
DEFAULT_TRANSITION_PATTERNS = (
    r"CUT TO[:.]?",
    r"CUT BACK TO[:.]?",
    r"HARD CUT TO[:.]?",
    r"SMASH CUT TO[:.]?",
    r"MATCH CUT TO[:.]?",
    r"JUMP CUT TO[:.]?",
    r"QUICK CUT TO[:.]?",
    r"TIME CUT TO[:.]?",
    r"FADE IN[:.]?",
    r"FADE OUT[:.]?",
    r"FADE TO BLACK[:.]?",
    r"FADE TO[:.]?",
    r"DISSOLVE TO[:.]?",
    r"WIPE TO[:.]?",
    r"IRIS IN[:.]?",
    r"IRIS OUT[:.]?",
)


@dataclass
class ScreenplayRecord:
    movie_name: str
    imdb_id: str
    script: str
    summary: str
    title: str = ""
    year: int = 0
    script_plain: str = ""
    script_clean: str = ""
    nominated: int = 0
    winner: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, row: dict) -> "ScreenplayRecord":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in row.items() if k in known})


@dataclass
class AwardRecord:
    imdb_id: str
    category_class: str
    won: bool = False


@dataclass
class SplitAssignment:
    """Index partition into train/val/test, reproducible from the seed."""

    seed: int
    train: list[int] = field(default_factory=list)
    val: list[int] = field(default_factory=list)
    test: list[int] = field(default_factory=list)

    def tag_of(self, index: int) -> str:
        for tag in ("train", "val", "test"):
            if index in getattr(self, tag):
                return tag
        raise KeyError(index)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "train": self.train, "val": self.val,
                "test": self.test}

    @classmethod
    def from_dict(cls, obj: dict) -> "SplitAssignment":
        return cls(seed=int(obj["seed"]), train=list(obj["train"]),
                   val=list(obj["val"]), test=list(obj["test"]))


def parse_movie_name(movie_name: str) -> tuple[str, int]:
    """Split ``title_YYYY`` at the final underscore.

    Raises MalformedName when the suffix is absent or the title part
    would be empty.
    """
    m = _MOVIE_NAME.match(movie_name)
    if m is None:
        raise MalformedName(f"movie_name {movie_name!r} lacks a _YYYY suffix")
    return m.group("title"), int(m.group("year"))


def strip_xml(script: str) -> str:
    """Remove ``<...>`` markup lexically, keeping inner text order.

    Each maximal run of tags (and the whitespace it absorbs) between two
    text blocks becomes a single newline; runs touching the ends of the
    string are dropped. Unbalanced tags are stripped all the same; the
    pass repeats until no tag-shaped sequence is left (nested angle
    brackets can expose a new one).
    """
    text = script
    while True:
        n = len(text)

        def repl(m: re.Match) -> str:
            return "" if m.start() == 0 or m.end() == n else "\n"

        stripped = _XML_TAG_RUN.sub(repl, text)
        if stripped == text:
            return stripped
        text = stripped


def load_transition_patterns(path: str | Path | None = None) -> list[re.Pattern]:
    """Compile the transition-line patterns, defaults or from a file."""
    if path is None:
        raw: Iterable[str] = DEFAULT_TRANSITION_PATTERNS
    else:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        raw = [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")]
    return [re.compile(rf"^(?:{p})$") for p in raw]


def clean_script(script_plain: str,
                 transition_patterns: Sequence[re.Pattern] | None = None) -> str:
    """Normalize a tag-free script: NFC, ASCII quotes/dashes, drop
    transition lines, collapse runs of 3+ blank lines to one."""
    if transition_patterns is None:
        transition_patterns = _default_transitions()
    text = unicodedata.normalize("NFC", script_plain)
    text = text.translate(_CHAR_MAP)
    kept = [line for line in text.split("\n")
            if not any(p.match(line.strip()) for p in transition_patterns)]
    text = "\n".join(kept)
    return _BLANK_RUN.sub("\n\n", text)


_TRANSITIONS_CACHE: list[re.Pattern] | None = None


def _default_transitions() -> list[re.Pattern]:
    global _TRANSITIONS_CACHE
    if _TRANSITIONS_CACHE is None:
        _TRANSITIONS_CACHE = load_transition_patterns(None)
    return _TRANSITIONS_CACHE


def prepare_record(row: dict,
                   transition_patterns: Sequence[re.Pattern] | None = None,
                   ) -> ScreenplayRecord:
    """Build a full ScreenplayRecord from a raw corpus row."""
    rec = ScreenplayRecord.from_dict(row)
    rec.title, rec.year = parse_movie_name(rec.movie_name)
    rec.script_plain = strip_xml(rec.script)
    rec.script_clean = clean_script(rec.script_plain, transition_patterns)
    return rec


def assign_labels(records: Sequence[ScreenplayRecord],
                  awards: Sequence[AwardRecord],
                  classes: Sequence[str] = ("Writing", "Title"),
                  ) -> list[ScreenplayRecord]:
    """Set nominated/winner from award records joined on imdb_id.

    Only awards whose category class is in ``classes`` count. Labels are
    independent of award-record order.
    """
    seen: set[str] = set()
    for rec in records:
        if rec.imdb_id in seen:
            raise DuplicateImdbId(f"imdb_id {rec.imdb_id} occurs twice in corpus")
        seen.add(rec.imdb_id)

    wanted = set(classes)
    nominated_ids: set[str] = set()
    winner_ids: set[str] = set()
    for award in awards:
        if award.category_class not in wanted:
            continue
        nominated_ids.add(award.imdb_id)
        if award.won:
            winner_ids.add(award.imdb_id)

    for rec in records:
        rec.nominated = int(rec.imdb_id in nominated_ids)
        rec.winner = int(rec.imdb_id in winner_ids)
    return list(records)


def _largest_remainder(quotas: dict[int, float], total: int) -> dict[int, int]:
    """Integer allocation by largest fractional remainder.

    Remainder ties go to the positive class (higher label) so the
    stratified counts land deterministically.
    """
    alloc = {c: int(np.floor(q)) for c, q in quotas.items()}
    leftover = total - sum(alloc.values())
    order = sorted(quotas, key=lambda c: (quotas[c] - alloc[c], c), reverse=True)
    for c in order[:leftover]:
        alloc[c] += 1
    return alloc


def stratified_split(labels: Sequence[int],
                     ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
                     seed: int = 0) -> SplitAssignment:
    """Deterministic stratified 3-way split of record indices.

    Per-class index lists are shuffled with the seed, then train and val
    sizes are allocated class-by-class with largest-remainder rounding
    (first against the whole dataset, then within the holdout), the rest
    going to test. Pure function of (label order, seed).
    """
    if abs(sum(ratios) - 1.0) > 1e-9 or any(r < 0 for r in ratios):
        raise ValidationError(f"ratios {ratios} must be non-negative and sum to 1")
    labels = [int(l) for l in labels]
    by_class: dict[int, list[int]] = {0: [], 1: []}
    for i, l in enumerate(labels):
        if l not in by_class:
            raise ValidationError(f"label {l!r} at index {i} is not binary")
        by_class[l].append(i)
    if not by_class[0] or not by_class[1]:
        raise EmptyClass("stratified_split requires members of both classes")

    rng = np.random.default_rng(seed)
    shuffled: dict[int, list[int]] = {}
    for c in (1, 0):
        idx = np.asarray(by_class[c], dtype=np.int64)
        rng.shuffle(idx)
        shuffled[c] = idx.tolist()

    n = len(labels)
    n_train = int(np.floor(ratios[0] * n + 0.5))
    n_val = min(int(np.floor(ratios[1] * n + 0.5)), n - n_train)

    train_alloc = _largest_remainder(
        {c: n_train * len(by_class[c]) / n for c in (0, 1)}, n_train)
    holdout = {c: len(by_class[c]) - train_alloc[c] for c in (0, 1)}
    n_holdout = sum(holdout.values())
    val_alloc = _largest_remainder(
        {c: n_val * holdout[c] / n_holdout for c in (0, 1)}, n_val)

    split = SplitAssignment(seed=seed)
    for c in (0, 1):
        pool = shuffled[c]
        t, v = train_alloc[c], val_alloc[c]
        split.train.extend(pool[:t])
        split.val.extend(pool[t:t + v])
        split.test.extend(pool[t + v:])
    split.train.sort()
    split.val.sort()
    split.test.sort()
    return split


def whitespace_token_count(text: str) -> int:
    return len(text.split())


def token_stats(records: Sequence[ScreenplayRecord],
                counter: Callable[[str], int] | None = None,
                counter_name: str | None = None) -> dict:
    """Per-field token-length statistics (median/mean/min/max).

    ``counter`` normally comes from the embedding backend; without one the
    whitespace word count is used and reported as the fallback it is.
    """
    if counter is None:
        counter = whitespace_token_count
        counter_name = counter_name or "whitespace-words (fallback)"
    field_source = {"title": "title", "summary": "summary",
                    "script": "script_clean"}
    out: dict = {"tokenizer": counter_name or "custom"}
    for fname, attr in field_source.items():
        counts = np.array([counter(getattr(r, attr)) for r in records])
        out[fname] = {
            "median": float(np.median(counts)),
            "mean": float(np.mean(counts)),
            "min": int(counts.min()),
            "max": int(counts.max()),
        }
    return out


# ---------------------------------------------------------------------------
# I/O

def load_corpus_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: bad JSON line") from exc
    return rows


def save_dataset_jsonl(records: Sequence[ScreenplayRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def load_dataset_jsonl(path: str | Path) -> list[ScreenplayRecord]:
    return [ScreenplayRecord.from_dict(row) for row in load_corpus_jsonl(path)]


_TRUTHY = {"1", "true", "yes", "y", "t"}


def _coerce_won(value) -> bool:
    if isinstance(value, bool):
        return value
    if value is None:
        return False
    return str(value).strip().lower() in _TRUTHY


def load_awards(path: str | Path) -> list[AwardRecord]:
    """Read award records from .csv or .json/.jsonl.

    Column aliases cover the common curated-record exports:
    imdb_id/FilmId, category_class/Class, winner/Winner/won.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    elif path.suffix.lower() == ".jsonl":
        rows = load_corpus_jsonl(path)
    else:
        with open(path, encoding="utf-8") as fh:
            rows = json.load(fh)
        if not isinstance(rows, list):
            raise ValidationError(f"{path}: expected a JSON array of award records")

    id_keys = ("imdb_id", "FilmId", "film_id", "imdbId")
    class_keys = ("category_class", "Class", "class")
    won_keys = ("won", "winner", "Winner")
    awards = []
    for i, row in enumerate(rows):
        imdb_id = next((row[k] for k in id_keys if row.get(k)), None)
        if imdb_id is None:
            raise ValidationError(f"{path}: award record {i} lacks an imdb id")
        category = next((row[k] for k in class_keys if row.get(k)), "")
        won = next((row[k] for k in won_keys if k in row), False)
        awards.append(AwardRecord(imdb_id=str(imdb_id).strip(),
                                  category_class=str(category).strip(),
                                  won=_coerce_won(won)))
    return awards


def save_splits(split: SplitAssignment, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(split.to_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_splits(path: str | Path) -> SplitAssignment:
    with open(path, encoding="utf-8") as fh:
        return SplitAssignment.from_dict(json.load(fh))
