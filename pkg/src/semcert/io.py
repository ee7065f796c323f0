"""Dataset ingestion, binary formats, and report emission.

Formats:

* IDX containers (big-endian magic 0x00000803 for images with ubyte
  pixels scaled to [0, 1], 0x00000801 for labels).  IDX stores images
  as (count, rows, cols) with rows running down the image, so pixels
  are transposed into this package's (K, W, H) width-major layout.
* SEMT1: one image tensor; ASCII header "SEMT1 K W H\\n" followed by
  K*W*H little-endian float64 values, row-major.  Bit-exact round trip.
* SEMW1: linear classifier weights; header "SEMW1 C K W H\\n" followed
  by C*(K*W*H) weight values then C bias values, little-endian float64.
* Report CSV: one row per evaluated sample.  Floats are written with
  shortest round-trip formatting ('.' decimal, no locale), so a parsed
  row equals the row written and two runs with the same config and seed
  produce byte-identical bodies.  Timing lives in the JSON summary
  (avg/min/max seconds), never in the CSV.
"""

from __future__ import annotations

import csv
import io as _io
import json
import struct
from dataclasses import dataclass

import numpy as np

from .classifiers import LinearClassifier
from .pipeline import ReportTable
from .tensor import ImageTensor

__all__ = [
    "IdxFormatError",
    "FormatError",
    "read_idx_images",
    "read_idx_labels",
    "read_idx",
    "read_tensor",
    "write_tensor",
    "load_linear_classifier",
    "save_linear_classifier",
    "ReportRow",
    "rows_from_table",
    "write_report_csv",
    "read_report_csv",
    "report_summary",
    "write_summary_json",
]

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class FormatError(ValueError):
    """Malformed binary input."""


class IdxFormatError(FormatError):
    """Malformed IDX container; the message names the failing byte offset."""


def _read_exact(f, n: int, offset: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise IdxFormatError(
            f"truncated IDX file: expected {n} bytes of {what} at offset "
            f"{offset}, found {len(data)}")
    return data


def _read_be32(f, offset: int, what: str) -> int:
    return struct.unpack(">I", _read_exact(f, 4, offset, what))[0]


def read_idx_images(path) -> list[ImageTensor]:
    """Parse an IDX image container into [0, 1]-scaled single-channel tensors."""
    with open(path, "rb") as f:
        magic = _read_be32(f, 0, "magic")
        if magic != IDX_IMAGE_MAGIC:
            raise IdxFormatError(
                f"bad image magic 0x{magic:08x} at offset 0 "
                f"(expected 0x{IDX_IMAGE_MAGIC:08x})")
        count = _read_be32(f, 4, "image count")
        rows = _read_be32(f, 8, "row count")
        cols = _read_be32(f, 12, "column count")
        total = count * rows * cols
        if total > 1 << 34:
            raise IdxFormatError(
                f"dimension overflow at offset 4: {count} x {rows} x {cols}")
        raw = _read_exact(f, total, 16, "pixel data")
        extra = f.read(1)
        if extra:
            raise IdxFormatError(f"trailing bytes at offset {16 + total}")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols)
    scaled = pixels.astype(np.float64) / 255.0
    # IDX is (row, col) = (y, x); this package stores (x, y)
    return [ImageTensor(img.T[None, :, :]) for img in scaled]


def read_idx_labels(path) -> np.ndarray:
    """Parse an IDX label container into an int array."""
    with open(path, "rb") as f:
        magic = _read_be32(f, 0, "magic")
        if magic != IDX_LABEL_MAGIC:
            raise IdxFormatError(
                f"bad label magic 0x{magic:08x} at offset 0 "
                f"(expected 0x{IDX_LABEL_MAGIC:08x})")
        count = _read_be32(f, 4, "label count")
        raw = _read_exact(f, count, 8, "label data")
    return np.frombuffer(raw, dtype=np.uint8).astype(np.int64)


def read_idx(images_path, labels_path=None):
    """Images plus, when given a companion file, their labels."""
    images = read_idx_images(images_path)
    if labels_path is None:
        return images, None
    labels = read_idx_labels(labels_path)
    if len(labels) != len(images):
        raise IdxFormatError(
            f"label count {len(labels)} does not match image count {len(images)}")
    return images, labels


# ---------------------------------------------------------------------------
# SEMT1 / SEMW1

def _read_header(f, tag: str, n_fields: int):
    line = f.readline(128)
    parts = line.decode("ascii", errors="replace").split()
    if len(parts) != n_fields + 1 or parts[0] != tag:
        raise FormatError(f"bad header {line!r}: expected '{tag}' with "
                          f"{n_fields} dimensions")
    try:
        dims = [int(p) for p in parts[1:]]
    except ValueError:
        raise FormatError(f"non-integer dimension in header {line!r}") from None
    if any(d < 1 for d in dims):
        raise FormatError(f"non-positive dimension in header {line!r}")
    return dims


def _read_f64(f, count: int, what: str) -> np.ndarray:
    raw = f.read(8 * count)
    if len(raw) != 8 * count:
        raise FormatError(
            f"short {what} payload: expected {8 * count} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype="<f8").copy()


def write_tensor(x: ImageTensor, path) -> None:
    with open(path, "wb") as f:
        f.write(f"SEMT1 {x.channels} {x.width} {x.height}\n".encode("ascii"))
        f.write(x.data.astype("<f8").tobytes())


def read_tensor(path) -> ImageTensor:
    with open(path, "rb") as f:
        k, w, h = _read_header(f, "SEMT1", 3)
        data = _read_f64(f, k * w * h, "tensor")
        if f.read(1):
            raise FormatError("trailing bytes after tensor payload")
    return ImageTensor(data.reshape(k, w, h))


def save_linear_classifier(c: LinearClassifier, path) -> None:
    k, w, h = c.shape
    with open(path, "wb") as f:
        f.write(f"SEMW1 {c.num_classes} {k} {w} {h}\n".encode("ascii"))
        f.write(c.weights.astype("<f8").tobytes())
        f.write(c.bias.astype("<f8").tobytes())


def load_linear_classifier(path) -> LinearClassifier:
    with open(path, "rb") as f:
        n_classes, k, w, h = _read_header(f, "SEMW1", 4)
        d = k * w * h
        weights = _read_f64(f, n_classes * d, "weight").reshape(n_classes, d)
        bias = _read_f64(f, n_classes, "bias")
        if f.read(1):
            raise FormatError("trailing bytes after classifier payload")
    if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
        raise FormatError("classifier weights contain non-finite values")
    return LinearClassifier(weights, bias, (k, w, h))


# ---------------------------------------------------------------------------
# Reports

_CSV_FIELDS = ("index", "true_label", "predicted", "verdict", "p_a_lower",
               "radius", "sqrt_m", "samples_used")


@dataclass(frozen=True)
class ReportRow:
    """One CSV row of a certification run (deterministic fields only)."""

    index: int
    true_label: int
    predicted: int
    verdict: str
    p_a_lower: float | None
    radius: float | None
    sqrt_m: float | None
    samples_used: int


def rows_from_table(table: ReportTable) -> list[ReportRow]:
    rows = []
    for s in table.samples:
        r = s.result
        rows.append(ReportRow(
            index=s.index,
            true_label=s.true_label,
            predicted=s.predicted,
            verdict=r.verdict if r is not None else "",
            p_a_lower=r.p_a_lower if r is not None else None,
            radius=(r.region_bound if r is not None else None),
            sqrt_m=(r.aliasing.sqrt_m if r is not None and r.aliasing is not None
                    else None),
            samples_used=r.samples_used if r is not None else 0,
        ))
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_report_csv(rows: list[ReportRow], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(_CSV_FIELDS)
        for row in rows:
            writer.writerow([_fmt(getattr(row, name)) for name in _CSV_FIELDS])


def _parse_opt_float(s: str):
    return None if s == "" else float(s)


def read_report_csv(path) -> list[ReportRow]:
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(header) != _CSV_FIELDS:
            raise FormatError(f"unexpected CSV header {header}")
        rows = []
        for rec in reader:
            rows.append(ReportRow(
                index=int(rec[0]),
                true_label=int(rec[1]),
                predicted=int(rec[2]),
                verdict=rec[3],
                p_a_lower=_parse_opt_float(rec[4]),
                radius=_parse_opt_float(rec[5]),
                sqrt_m=_parse_opt_float(rec[6]),
                samples_used=int(rec[7]),
            ))
    return rows


def report_summary(table: ReportTable, config_echo: dict, started_at: str) -> dict:
    """JSON-ready run summary: accuracies, verdict counts, timing stats."""
    verdicts: dict[str, int] = {}
    elapsed = []
    for s in table.samples:
        if s.result is not None:
            verdicts[s.result.verdict] = verdicts.get(s.result.verdict, 0) + 1
            elapsed.append(s.result.elapsed)
    timing = None
    if elapsed:
        timing = {"avg_s": sum(elapsed) / len(elapsed),
                  "min_s": min(elapsed), "max_s": max(elapsed)}
    return {
        "started_at": started_at,
        "config": config_echo,
        "n_samples": len(table.samples),
        "clean_accuracy": table.clean_accuracy,
        "robust_accuracy": table.robust_accuracy,
        "verdicts": verdicts,
        "timing": timing,
    }


def write_summary_json(summary: dict, path) -> None:
    with open(path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
