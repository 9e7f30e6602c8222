"""Embedding dataset loading, validation, filtering, and splitting.

On-disk formats
---------------
CSV (UTF-8, one embedding per row)::

    id,cohort[,group_id][,label.<name>]*[,confidence],e0,...,e{D-1}

Column order is fixed as above; an empty cell means the optional field is
absent for that row. Embedding cells are 32-bit floats on disk; in-memory
vectors are float64 holding exactly the float32 values, so a write/load
round trip is bit-identical.

Binary: a JSON manifest ``{dim, count, vector_file, byte_order: "little",
dtype: "f32", metadata_file?}`` next to a raw row-major float32 vector file
and a metadata CSV with the same columns as above minus the ``e*`` block.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._rng import generator

LABEL_PREFIX = "label."

FRAME_LEVEL = "frame_level"
GROUP_LEVEL = "group_level"


class DataError(ValueError):
    """An input file or dataset violates the format contract."""


@dataclass(frozen=True, eq=False)
class EmbeddingRecord:
    """One embedded frame: vector plus cohort/label/confidence metadata."""

    id: str
    cohort: str
    vector: np.ndarray
    labels: dict[str, str] = field(default_factory=dict)
    confidence: float | None = None
    group_id: str | None = None

    def same_as(self, other: "EmbeddingRecord") -> bool:
        """Exact equality, vectors compared bit for bit."""
        return (
            self.id == other.id
            and self.cohort == other.cohort
            and self.labels == other.labels
            and self.confidence == other.confidence
            and self.group_id == other.group_id
            and self.vector.shape == other.vector.shape
            and bool(np.array_equal(self.vector, other.vector))
        )


class Dataset:
    """An ordered, validated collection of EmbeddingRecords.

    Immutable after construction; record order is the load order, which is
    what keeps every seeded operation downstream reproducible.
    """

    def __init__(
        self,
        records: Sequence[EmbeddingRecord],
        dim: int,
        label_schema: Mapping[str, Iterable[str]] | None = None,
    ):
        if dim < 1:
            raise DataError(f"dim must be positive, got {dim}")
        records = tuple(records)
        seen: set[str] = set()
        for rec in records:
            if rec.id in seen:
                raise DataError(f"duplicate id {rec.id!r}")
            seen.add(rec.id)
            if rec.vector.shape != (dim,):
                raise DataError(
                    f"record {rec.id!r} has vector length {rec.vector.shape}, expected ({dim},)"
                )
            if rec.confidence is not None and not (0.0 <= rec.confidence <= 1.0):
                raise DataError(
                    f"record {rec.id!r}: confidence out of range: {rec.confidence!r}"
                )
        if label_schema is None:
            inferred: dict[str, set[str]] = {}
            for rec in records:
                for name, value in rec.labels.items():
                    inferred.setdefault(name, set()).add(value)
            schema = {name: frozenset(vals) for name, vals in inferred.items()}
        else:
            schema = {name: frozenset(vals) for name, vals in label_schema.items()}
            for rec in records:
                for name, value in rec.labels.items():
                    if name not in schema:
                        raise DataError(
                            f"record {rec.id!r} carries unknown label {name!r}"
                        )
                    if value not in schema[name]:
                        raise DataError(
                            f"record {rec.id!r}: value {value!r} not allowed for label {name!r}"
                        )
        self._records = records
        self._dim = dim
        self._schema = schema
        self._matrix: np.ndarray | None = None

    @property
    def records(self) -> tuple[EmbeddingRecord, ...]:
        return self._records

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def label_schema(self) -> dict[str, frozenset[str]]:
        return dict(self._schema)

    def __len__(self) -> int:
        return len(self._records)

    def ids(self) -> list[str]:
        return [r.id for r in self._records]

    def cohorts(self) -> list[str]:
        """Distinct cohort tags in first-appearance order."""
        out: list[str] = []
        seen: set[str] = set()
        for r in self._records:
            if r.cohort not in seen:
                seen.add(r.cohort)
                out.append(r.cohort)
        return out

    def vectors(self) -> np.ndarray:
        """All vectors as one (n, dim) float64 matrix, row i = record i."""
        if self._matrix is None:
            if self._records:
                self._matrix = np.stack([r.vector for r in self._records]).astype(
                    np.float64, copy=False
                )
            else:
                self._matrix = np.empty((0, self._dim), dtype=np.float64)
        return self._matrix

    def confidences(self) -> np.ndarray:
        """Confidence per record, NaN where absent."""
        return np.array(
            [math.nan if r.confidence is None else r.confidence for r in self._records],
            dtype=np.float64,
        )

    def record_by_id(self, rec_id: str) -> EmbeddingRecord:
        idx = self._index().get(rec_id)
        if idx is None:
            raise KeyError(rec_id)
        return self._records[idx]

    def _index(self) -> dict[str, int]:
        if not hasattr(self, "_id_index"):
            self._id_index = {r.id: i for i, r in enumerate(self._records)}
        return self._id_index

    def equals(self, other: "Dataset") -> bool:
        """Exact equality of dim, schema, and every record, in order."""
        if self._dim != other._dim or self._schema != other._schema:
            return False
        if len(self) != len(other):
            return False
        return all(a.same_as(b) for a, b in zip(self._records, other._records))


@dataclass(frozen=True)
class SplitSpec:
    """How to partition a dataset into train and test."""

    train_fraction: float
    seed: int
    mode: str = FRAME_LEVEL

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise DataError(
                f"train_fraction must lie in (0, 1), got {self.train_fraction}"
            )
        if self.mode not in (FRAME_LEVEL, GROUP_LEVEL):
            raise DataError(f"unknown split mode {self.mode!r}")


# ---------------------------------------------------------------------------
# CSV format


def _parse_header(columns: Sequence[str], with_embeddings: bool) -> dict:
    """Validate the fixed column order and locate each optional block."""
    cols = list(columns)
    if len(cols) < 2 or cols[0] != "id" or cols[1] != "cohort":
        raise DataError("malformed header: must start with 'id,cohort'")
    pos = 2
    has_group = pos < len(cols) and cols[pos] == "group_id"
    if has_group:
        pos += 1
    label_names: list[str] = []
    while pos < len(cols) and cols[pos].startswith(LABEL_PREFIX):
        name = cols[pos][len(LABEL_PREFIX) :]
        if not name:
            raise DataError("malformed header: empty label name")
        if name in label_names:
            raise DataError(f"malformed header: duplicate label column {name!r}")
        label_names.append(name)
        pos += 1
    has_conf = pos < len(cols) and cols[pos] == "confidence"
    if has_conf:
        pos += 1
    embed_cols = cols[pos:]
    if with_embeddings:
        dim = len(embed_cols)
        if dim == 0:
            raise DataError("malformed header: no embedding columns")
        expected = [f"e{i}" for i in range(dim)]
        if embed_cols != expected:
            raise DataError(
                f"malformed header: embedding columns must be e0..e{dim - 1} in order"
            )
    else:
        if embed_cols:
            raise DataError(
                f"malformed header: unexpected trailing columns {embed_cols!r}"
            )
        dim = 0
    return {
        "has_group": has_group,
        "label_names": label_names,
        "has_conf": has_conf,
        "dim": dim,
        "n_cols": len(cols),
        "embed_start": pos,
    }


def _parse_row(row: Sequence[str], layout: dict, line_no: int):
    if len(row) != layout["n_cols"]:
        raise DataError(
            f"ragged row at line {line_no}: {len(row)} cells, expected {layout['n_cols']}"
        )
    rec_id = row[0]
    if not rec_id:
        raise DataError(f"empty id at line {line_no}")
    cohort = row[1]
    pos = 2
    group_id = None
    if layout["has_group"]:
        group_id = row[pos] or None
        pos += 1
    labels: dict[str, str] = {}
    for name in layout["label_names"]:
        cell = row[pos]
        if cell:
            labels[name] = cell
        pos += 1
    confidence = None
    if layout["has_conf"]:
        cell = row[pos]
        pos += 1
        if cell:
            try:
                confidence = float(cell)
            except ValueError:
                raise DataError(
                    f"non-numeric confidence {cell!r} at line {line_no}"
                ) from None
            if not (0.0 <= confidence <= 1.0):
                raise DataError(
                    f"confidence out of range at line {line_no}: {cell}"
                )
    return rec_id, cohort, group_id, labels, confidence, pos


def _parse_vector(row: Sequence[str], start: int, dim: int, line_no: int) -> np.ndarray:
    cells = row[start : start + dim]
    vec = np.empty(dim, dtype=np.float64)
    for k, cell in enumerate(cells):
        try:
            v = np.float32(cell)
        except ValueError:
            raise DataError(
                f"non-numeric embedding cell {cell!r} at line {line_no}"
            ) from None
        if not np.isfinite(v):
            raise DataError(f"non-finite embedding cell {cell!r} at line {line_no}")
        vec[k] = np.float64(v)
    return vec


def _read_metadata_csv(path: Path, with_embeddings: bool):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        layout = _parse_header(header, with_embeddings)
        rows = [(i + 2, row) for i, row in enumerate(reader) if row]
    return layout, rows


def load_csv(path: str | Path) -> Dataset:
    """Load a dataset from the delimited format, preserving row order."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    layout, rows = _read_metadata_csv(path, with_embeddings=True)
    records = []
    for line_no, row in rows:
        rec_id, cohort, group_id, labels, confidence, pos = _parse_row(
            row, layout, line_no
        )
        vec = _parse_vector(row, pos, layout["dim"], line_no)
        records.append(
            EmbeddingRecord(
                id=rec_id,
                cohort=cohort,
                vector=vec,
                labels=labels,
                confidence=confidence,
                group_id=group_id,
            )
        )
    schema = _schema_with_columns(records, layout["label_names"])
    return Dataset(records, dim=layout["dim"], label_schema=schema)


def _schema_with_columns(records, label_names):
    """Schema covering every label column present in the file, even if unused."""
    schema: dict[str, set[str]] = {name: set() for name in label_names}
    for rec in records:
        for name, value in rec.labels.items():
            schema[name].add(value)
    return schema


def _f32_str(value: float) -> str:
    # str() of a float32 is the shortest decimal that round-trips at 32 bits
    return str(np.float32(value))


def write_csv(ds: Dataset, path: str | Path) -> None:
    """Write the delimited format; load_csv(write_csv(ds)) is exact."""
    path = Path(path)
    label_names = list(ds.label_schema.keys())
    has_group = any(r.group_id is not None for r in ds.records)
    has_conf = any(r.confidence is not None for r in ds.records)
    header = ["id", "cohort"]
    if has_group:
        header.append("group_id")
    header += [LABEL_PREFIX + name for name in label_names]
    if has_conf:
        header.append("confidence")
    header += [f"e{i}" for i in range(ds.dim)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in ds.records:
            row = [rec.id, rec.cohort]
            if has_group:
                row.append(rec.group_id or "")
            for name in label_names:
                row.append(rec.labels.get(name, ""))
            if has_conf:
                row.append("" if rec.confidence is None else repr(rec.confidence))
            row += [_f32_str(v) for v in rec.vector]
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Binary format

_MANIFEST_REQUIRED = ("dim", "count", "vector_file", "byte_order", "dtype")


def load_binary(manifest_path: str | Path) -> Dataset:
    """Load a dataset from a JSON manifest plus raw f32 vectors."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataError(f"no such file: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: invalid JSON: {exc}") from None
    for key in _MANIFEST_REQUIRED:
        if key not in manifest:
            raise DataError(f"{manifest_path}: manifest missing field {key!r}")
    if manifest["byte_order"] != "little":
        raise DataError(f"unsupported byte_order {manifest['byte_order']!r}")
    if manifest["dtype"] != "f32":
        raise DataError(f"unsupported dtype {manifest['dtype']!r}")
    dim = int(manifest["dim"])
    count = int(manifest["count"])
    if dim < 1:
        raise DataError(f"manifest dim must be positive, got {dim}")
    if count < 0:
        raise DataError(f"manifest count must be nonnegative, got {count}")

    base = manifest_path.parent
    vector_path = base / manifest["vector_file"]
    meta_name = manifest.get("metadata_file")
    meta_path = (base / meta_name) if meta_name else vector_path.with_suffix(".meta.csv")

    if count == 0:
        return Dataset([], dim=dim)

    if not vector_path.exists():
        raise DataError(f"missing vector file: {vector_path}")
    expected_bytes = count * dim * 4
    actual_bytes = vector_path.stat().st_size
    if actual_bytes != expected_bytes:
        raise DataError(
            f"size mismatch: {vector_path} has {actual_bytes} bytes, "
            f"expected {expected_bytes} ({count} x {dim} x 4)"
        )
    raw = np.fromfile(vector_path, dtype="<f4").reshape(count, dim)

    if not meta_path.exists():
        raise DataError(f"missing metadata file: {meta_path}")
    layout, rows = _read_metadata_csv(meta_path, with_embeddings=False)
    if len(rows) != count:
        raise DataError(
            f"row-count disagreement: manifest says {count}, metadata has {len(rows)}"
        )
    records = []
    for (line_no, row), vec32 in zip(rows, raw):
        rec_id, cohort, group_id, labels, confidence, _ = _parse_row(
            row, layout, line_no
        )
        if not np.all(np.isfinite(vec32)):
            raise DataError(f"non-finite embedding values for id {rec_id!r}")
        records.append(
            EmbeddingRecord(
                id=rec_id,
                cohort=cohort,
                vector=vec32.astype(np.float64),
                labels=labels,
                confidence=confidence,
                group_id=group_id,
            )
        )
    schema = _schema_with_columns(records, layout["label_names"])
    return Dataset(records, dim=dim, label_schema=schema)


def write_binary(ds: Dataset, manifest_path: str | Path) -> None:
    """Write manifest + raw f32 vectors + metadata CSV next to each other."""
    manifest_path = Path(manifest_path)
    stem = manifest_path.stem
    vector_name = stem + ".vec"
    meta_name = stem + ".meta.csv"
    base = manifest_path.parent
    base.mkdir(parents=True, exist_ok=True)

    ds.vectors().astype("<f4").tofile(base / vector_name)

    label_names = list(ds.label_schema.keys())
    has_group = any(r.group_id is not None for r in ds.records)
    has_conf = any(r.confidence is not None for r in ds.records)
    header = ["id", "cohort"]
    if has_group:
        header.append("group_id")
    header += [LABEL_PREFIX + name for name in label_names]
    if has_conf:
        header.append("confidence")
    with open(base / meta_name, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in ds.records:
            row = [rec.id, rec.cohort]
            if has_group:
                row.append(rec.group_id or "")
            for name in label_names:
                row.append(rec.labels.get(name, ""))
            if has_conf:
                row.append("" if rec.confidence is None else repr(rec.confidence))
            writer.writerow(row)

    manifest = {
        "dim": ds.dim,
        "count": len(ds),
        "vector_file": vector_name,
        "byte_order": "little",
        "dtype": "f32",
        "metadata_file": meta_name,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Splitting and filtering


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition into (train, test), deterministically in the seed.

    frame_level shuffles records and sends the first floor(n * fraction) to
    train. group_level shuffles whole groups and assigns them greedily to
    train until it holds at least floor(n * fraction) records, so no group
    ever straddles the split. Both sides keep the original record order.
    """
    n = len(ds)
    if n == 0:
        raise DataError("cannot split an empty dataset")
    n_train = math.floor(n * spec.train_fraction)
    rng = generator(spec.seed)
    if spec.mode == FRAME_LEVEL:
        perm = rng.permutation(n)
        train_idx = set(perm[:n_train].tolist())
    else:
        missing = [r.id for r in ds.records if r.group_id is None]
        if missing:
            raise DataError(
                f"group_level split requires group_id on every record; "
                f"missing for {missing[:5]}"
            )
        groups: list[str] = []
        members: dict[str, list[int]] = {}
        for i, rec in enumerate(ds.records):
            gid = rec.group_id
            if gid not in members:
                members[gid] = []
                groups.append(gid)
            members[gid].append(i)
        order = rng.permutation(len(groups))
        train_idx = set()
        for gi in order:
            if len(train_idx) >= n_train:
                break
            train_idx.update(members[groups[gi]])
    train_records = [r for i, r in enumerate(ds.records) if i in train_idx]
    test_records = [r for i, r in enumerate(ds.records) if i not in train_idx]
    schema = ds.label_schema
    return (
        Dataset(train_records, dim=ds.dim, label_schema=schema),
        Dataset(test_records, dim=ds.dim, label_schema=schema),
    )


def filter_by_cohort(ds: Dataset, cohorts: Iterable[str]) -> Dataset:
    """Subset to the given cohort tags, preserving order and dim."""
    wanted = set(cohorts)
    kept = [r for r in ds.records if r.cohort in wanted]
    return Dataset(kept, dim=ds.dim, label_schema=ds.label_schema)


def concat(datasets: Sequence[Dataset]) -> Dataset:
    """Concatenate datasets of equal dim; ids must stay globally unique."""
    if not datasets:
        raise DataError("nothing to concatenate")
    dim = datasets[0].dim
    for ds in datasets[1:]:
        if ds.dim != dim:
            raise DataError(f"dim mismatch in concat: {ds.dim} != {dim}")
    records = [r for ds in datasets for r in ds.records]
    schema: dict[str, set[str]] = {}
    for ds in datasets:
        for name, vals in ds.label_schema.items():
            schema.setdefault(name, set()).update(vals)
    return Dataset(records, dim=dim, label_schema=schema)
