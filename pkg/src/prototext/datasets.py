"""Dataset loading, splitting, and a synthetic keyword corpus for tests
and demos."""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass

from .embedding import tokenize
from .errors import IoError, SchemaError
from .rng import SplitMix64

logger = logging.getLogger(__name__)


@dataclass
class DatasetRecord:
    text: str
    label: int
    split: str = "train"  # train | validation | test

    def pair(self) -> tuple[str, int]:
        return self.text, self.label


def _validate_record(text, label, where: str) -> tuple[str, int]:
    if not isinstance(text, str) or not tokenize(text):
        raise SchemaError(f"{where}: text is empty after tokenization")
    if isinstance(label, bool) or not isinstance(label, int):
        try:
            label = int(str(label))
        except (TypeError, ValueError):
            raise SchemaError(f"{where}: label {label!r} is not an integer") from None
    if label < 0:
        raise SchemaError(f"{where}: label {label} is negative")
    return text, label


def _validate_labels(records: list[DatasetRecord], path: str) -> None:
    present = sorted({r.label for r in records})
    num_classes = present[-1] + 1
    missing = sorted(set(range(num_classes)) - set(present))
    if missing:
        raise SchemaError(f"{path}: labels must be contiguous 0..{num_classes - 1}, missing {missing}")
    counts = Counter(r.label for r in records)
    logger.info(
        "%s: %d records, class counts %s", path, len(records), dict(sorted(counts.items()))
    )


def load_dataset(path: str, format: str | None = None) -> list[DatasetRecord]:
    """Load a CSV (header text,label) or JSON Lines dataset.

    Labels must be contiguous integers starting at 0.
    """
    if format is None:
        format = "jsonl" if str(path).endswith((".jsonl", ".ndjson")) else "csv"
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unknown dataset format: {format}")
    records: list[DatasetRecord] = []
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            if format == "csv":
                reader = csv.reader(fh)
                try:
                    header = next(reader)
                except StopIteration:
                    raise SchemaError(f"{path}: file is empty") from None
                if [h.strip() for h in header] != ["text", "label"]:
                    raise SchemaError(f"{path}: expected header 'text,label', got {header}")
                for lineno, row in enumerate(reader, start=2):
                    if not row:
                        continue
                    if len(row) != 2:
                        raise SchemaError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
                    text, label = _validate_record(row[0], row[1], f"{path}:{lineno}")
                    records.append(DatasetRecord(text=text, label=label))
            else:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        obj = json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise SchemaError(f"{path}:{lineno}: bad JSON: {exc}") from exc
                    if not isinstance(obj, dict) or "text" not in obj or "label" not in obj:
                        raise SchemaError(f"{path}:{lineno}: object needs text and label fields")
                    text, label = _validate_record(obj["text"], obj["label"], f"{path}:{lineno}")
                    records.append(DatasetRecord(text=text, label=label))
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if not records:
        raise SchemaError(f"{path}: no records")
    _validate_labels(records, str(path))
    return records


def save_dataset(records: list[DatasetRecord], path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            if str(path).endswith((".jsonl", ".ndjson")):
                for r in records:
                    fh.write(json.dumps({"text": r.text, "label": r.label}) + "\n")
            else:
                writer = csv.writer(fh)
                writer.writerow(["text", "label"])
                for r in records:
                    writer.writerow([r.text, r.label])
    except OSError as exc:
        raise IoError(str(exc)) from exc


def split_train_val(
    records: list[DatasetRecord], val_fraction: float, seed: int
) -> tuple[list[DatasetRecord], list[DatasetRecord]]:
    """Seeded shuffle split; validation gets at least one record when the
    fraction is positive."""
    if not 0.0 <= val_fraction < 1.0:
        raise ValueError("val_fraction must be in [0, 1)")
    order = list(range(len(records)))
    SplitMix64(seed).shuffle(order)
    n_val = int(round(val_fraction * len(records)))
    if val_fraction > 0.0:
        n_val = max(1, min(n_val, len(records) - 1))
    val_idx = set(order[:n_val])
    train, val = [], []
    for i, record in enumerate(records):
        if i in val_idx:
            val.append(DatasetRecord(record.text, record.label, "validation"))
        else:
            train.append(DatasetRecord(record.text, record.label, "train"))
    return train, val


# Class markers are two-word phrases so same-class sentences share three
# hashed features (two unigrams and their bigram), which keeps the classes
# cleanly separable at the default 64-dimensional reference embedding.
_MARKERS = [
    ("utterly", "dreadful"),
    ("genuinely", "marvelous"),
    ("strangely", "chaotic"),
    ("quietly", "serene"),
]
_FILLERS = (
    "news paper stone river cloud table chair window garden bridge market forest "
    "engine button signal harbor meadow castle valley desert island tunnel lantern "
    "mirror bottle ribbon pencil carpet curtain kettle ladder magnet needle orchard "
    "pillow quartz rocket saddle teapot anchor barrel candle drawer emerald feather "
    "goblet hammer ivory jacket kernel lobster muffin napkin oyster parcel quiver "
    "rudder sprout thimble urchin velvet walnut yonder zipper attic basket cellar "
    "dome easel fountain gutter hedge inlet jetty knoll ledge mantel nook outpost "
    "porch quay ridge shutter terrace utensil veranda wharf axle beam crank dial "
    "gear hinge lever nozzle pulley rivet spoke tread valve wheel cog flange gasket "
    "piston socket spring switch turbine vent wire"
).split()


def make_keyword_corpus(
    n_samples: int = 200, n_classes: int = 2, seed: int = 7
) -> list[DatasetRecord]:
    """Balanced synthetic corpus where each sentence carries one
    class-indicative marker phrase among distinct neutral filler words, so
    the classes are separable by construction."""
    if not 2 <= n_classes <= len(_MARKERS):
        raise ValueError(f"n_classes must be in [2, {len(_MARKERS)}]")
    rng = SplitMix64(seed)
    records = []
    for i in range(n_samples):
        label = i % n_classes
        length = 5 + rng.randint(4)
        picks: list[int] = []
        while len(picks) < length:
            j = rng.randint(len(_FILLERS))
            if j not in picks:
                picks.append(j)
        words = [_FILLERS[j] for j in picks]
        pos = rng.randint(length + 1)
        words[pos:pos] = list(_MARKERS[label])
        records.append(DatasetRecord(text=" ".join(words), label=label))
    return records


def keyword_for_class(label: int) -> str:
    """The distinctive second marker word, e.g. 'dreadful' for class 0."""
    return _MARKERS[label][1]
