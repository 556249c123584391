"""CSV ingestion, one-hot binarization and the two built-in fixtures.

Digits are drawn on a 4-column x 6-row grid; cell ``k`` (1..24, row-major)
is a field whose value is a stroke code:

    0 blank   1 horizontal   2 vertical   3 rising diagonal
    4 falling diagonal       5 corner / junction

Each field's alphabet is the set of codes used in that cell by some glyph,
plus blank.  Predicates are named ``"<cell>=<code>"``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import EmpiricalSystem, Literal, load_system

TRUE_TOKENS = {"1", "true", "t", "yes", "y"}
FALSE_TOKENS = {"0", "false", "f", "no", "n"}

STROKES = {".": "0", "-": "1", "|": "2", "/": "3", "\\": "4", "+": "5"}

# 12 glyphs, 6 rows of 4 cells each.
GLYPHS: dict[str, tuple[str, ...]] = {
    "0": ("+--+", "|..|", "|..|", "|..|", "|..|", "+--+"),
    "1": ("..+.", "./|.", "..|.", "..|.", "..|.", "..|."),
    "2": ("+--+", "...|", "...|", "+--+", "|...", "+--+"),
    "3": ("+--+", "...|", ".--+", "...|", "...|", "+--+"),
    "4": ("|..|", "|..|", "+--+", "...|", "...|", "...|"),
    "5": ("+--+", "|...", "+--+", "...|", "...|", "+--+"),
    "6": ("+--+", "|...", "+--+", "|..|", "|..|", "+--+"),
    "7": ("+--+", "...|", "../.", "./..", "|...", "|..."),
    "8": ("+--+", "|..|", "+--+", "|..|", "|..|", "+--+"),
    "9": ("+--+", "|..|", "+--+", "...|", "...|", "+--+"),
    "1b": ("..+.", "./|.", "..|.", "..|.", "..|.", ".-+-"),
    "4b": ("../|", "./.|", "/..|", "+--+", "...|", "...|"),
}

N_CELLS = 24


@dataclass(frozen=True)
class FieldSchema:
    """Multi-valued fields and their alphabets; one predicate per (field, value)."""

    fields: tuple[tuple[str, tuple[str, ...]], ...]

    @property
    def names(self) -> list[str]:
        return [f for f, _ in self.fields]

    def alphabet(self, name: str) -> tuple[str, ...]:
        return dict(self.fields)[name]

    def predicate_names(self) -> list[str]:
        return [f"{f}={v}" for f, vals in self.fields for v in vals]

    def to_json(self) -> str:
        return json.dumps({"fields": [{"name": f, "values": list(v)} for f, v in self.fields]}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "FieldSchema":
        data = json.loads(text)
        return cls(tuple((d["name"], tuple(str(x) for x in d["values"])) for d in data["fields"]))

    @classmethod
    def load(cls, path) -> "FieldSchema":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Labelled:
    """A system with ground-truth labels kept apart from it."""

    system: EmpiricalSystem
    labels: tuple[str, ...]
    values: tuple[tuple[str, ...], ...]  # raw field values per object
    schema: FieldSchema
    metadata: dict


# -- CSV ---------------------------------------------------------------------


def _parse_bool(token: str, row: int, field: str) -> bool:
    t = token.strip().lower()
    if t in TRUE_TOKENS:
        return True
    if t in FALSE_TOKENS:
        return False
    raise ValueError(f"row {row}: field {field!r} has non-boolean value {token!r} and no alphabet")


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    header, body = rows[0], [r for r in rows[1:] if r]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ValueError(f"{path}: row {i} has {len(r)} cells, header has {len(header)}")
    return header, body


def load_csv(path, schema: FieldSchema | None = None, id_column: str | None = "id") -> EmpiricalSystem:
    """Read a rectangular CSV with a header row into an empirical system.

    Fields listed in ``schema`` are one-hot encoded over their alphabet;
    every other field must be boolean.  A leading column named
    ``id_column`` supplies object ids.
    """
    header, body = read_table(path)
    if not body:
        raise ValueError(f"{path}: no data rows")
    ids = None
    if id_column is not None and header[0] == id_column:
        ids = [r[0] for r in body]
        header, body = header[1:], [r[1:] for r in body]
    alphabets = dict(schema.fields) if schema is not None else {}
    names: list[str] = []
    columns: list[list[bool]] = []
    for j, fname in enumerate(header):
        if fname in alphabets:
            alpha = alphabets[fname]
            for i, r in enumerate(body, start=2):
                if r[j] not in alpha:
                    raise ValueError(f"{path}: row {i}, field {fname!r}: value {r[j]!r} not in alphabet {list(alpha)}")
            for v in alpha:
                names.append(f"{fname}={v}")
                columns.append([r[j] == v for r in body])
        else:
            names.append(fname)
            columns.append([_parse_bool(r[j], i, fname) for i, r in enumerate(body, start=2)])
    matrix = np.array(columns, dtype=bool).T
    return load_system(matrix, objects=ids, predicates=names)


def save_csv(sys: EmpiricalSystem, path, id_column: str | None = "id") -> None:
    """Write a boolean system as CSV (``1``/``0`` cells)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ([id_column] if id_column else []) + list(sys.predicates)
        w.writerow(head)
        for i, obj in enumerate(sys.objects):
            cells = ["1" if x else "0" for x in sys.truth[i]]
            w.writerow(([obj] if id_column else []) + cells)


def save_values_csv(data: Labelled, path) -> None:
    """Write raw field values (multi-valued form) with an id column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + data.schema.names)
        for obj, vals in zip(data.system.objects, data.values):
            w.writerow([obj, *vals])


def save_labels(data: Labelled, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label"])
        for obj, lab in zip(data.system.objects, data.labels):
            w.writerow([obj, lab])


def load_labels(path) -> dict[str, str]:
    header, body = read_table(path)
    if header[:2] != ["id", "label"]:
        raise ValueError(f"{path}: expected header 'id,label'")
    return {r[0]: r[1] for r in body}


# -- digits ------------------------------------------------------------------


def _glyph_codes(glyph: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(STROKES[ch] for row in glyph for ch in row)


def digit_schema() -> FieldSchema:
    codes = [_glyph_codes(g) for g in GLYPHS.values()]
    fields = []
    for cell in range(N_CELLS):
        used = {c[cell] for c in codes} | {"0"}
        fields.append((str(cell + 1), tuple(sorted(used))))
    return FieldSchema(tuple(fields))


def _encode(values: Sequence[tuple[str, ...]], schema: FieldSchema, ids: Sequence[str]) -> EmpiricalSystem:
    cols = []
    for j, (_, alpha) in enumerate(schema.fields):
        for v in alpha:
            cols.append([row[j] == v for row in values])
    return load_system(np.array(cols, dtype=bool).T, objects=ids, predicates=schema.predicate_names())


def digit_prototypes() -> dict[str, frozenset[Literal]]:
    """Complete signed description of each glyph over the digit predicates."""
    schema = digit_schema()
    sys = _encode([_glyph_codes(g) for g in GLYPHS.values()], schema, list(GLYPHS))
    return {lab: sys.object_literals(i) for i, lab in enumerate(GLYPHS)}


def gen_digits(copies: int = 30, *, shuffle_seed: int | None = 0) -> Labelled:
    """``copies`` x 12 digit objects, optionally shuffled."""
    return gen_digits_noisy(copies, 0.0, seed=0, shuffle_seed=shuffle_seed)


def gen_digits_noisy(copies: int, flip_prob: float, seed: int, *, shuffle_seed: int | None = 0) -> Labelled:
    """Digit copies with each field independently resampled, with probability
    ``flip_prob``, to a uniformly chosen different value of its alphabet.

    Fields with a one-value alphabet cannot change and are left alone; they
    are excluded from ``total_slots`` in the metadata.
    """
    if copies < 1:
        raise ValueError("copies must be >= 1")
    if not 0 <= flip_prob < 0.5:
        raise ValueError("flip_prob must lie in [0, 0.5)")
    schema = digit_schema()
    protos = [(lab, _glyph_codes(g)) for lab, g in GLYPHS.items()]
    items = [(lab, codes) for _ in range(copies) for lab, codes in protos]
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(len(items))
        items = [items[i] for i in order]
    rng = np.random.default_rng(seed)
    mutable = np.array([len(alpha) > 1 for _, alpha in schema.fields])
    values, flips = [], 0
    for _, codes in items:
        row = list(codes)
        if flip_prob > 0:
            hits = (rng.random(N_CELLS) < flip_prob) & mutable
            for j in np.flatnonzero(hits):
                others = [v for v in schema.fields[j][1] if v != row[j]]
                row[j] = others[rng.integers(len(others))]
                flips += 1
        values.append(tuple(row))
    ids = [f"d{i + 1:04d}" for i in range(len(items))]
    sys = _encode(values, schema, ids)
    meta = {"copies": copies, "flip_prob": flip_prob, "seed": seed, "shuffle_seed": shuffle_seed,
            "perturbed_slots": flips, "total_slots": len(items) * int(mutable.sum())}
    return Labelled(sys, tuple(lab for lab, _ in items), tuple(values), schema, meta)


# -- penicillin --------------------------------------------------------------


def gen_penicillin(n: int = 200) -> EmpiricalSystem:
    """Infected (S), treated (P), resistant (R), quick recovery (E).

    Half the objects are resistant; 95% of resistant objects and 10% of the
    others do not recover quickly (majority counts rounded down).
    """
    if n < 20 or n % 2:
        raise ValueError("n must be an even integer >= 20")
    half = n // 2
    r_not_e = int(Fraction(95, 100) * half)
    nr_e = int(Fraction(90, 100) * half)
    rows = (
        [(1, 1, 1, 0)] * r_not_e
        + [(1, 1, 1, 1)] * (half - r_not_e)
        + [(1, 1, 0, 1)] * nr_e
        + [(1, 1, 0, 0)] * (half - nr_e)
    )
    ids = [f"p{i + 1:03d}" for i in range(n)]
    return load_system(rows, objects=ids, predicates=["S", "P", "R", "E"])

