"""Annotation and fixation datasets, dataset summaries, and map files.

File formats
------------
Annotations (JSON)::

    {"images": [{"id": "img1", "width": 800, "height": 600,
                 "objects": [{"id": "o1", "label": "cup",
                              "polygon": [[x, y], ...]}]}]}

Fixations (CSV, UTF-8)::

    image_id,observer_id,fixation_index,x,y[,duration_ms]

Maps: ``smap`` (magic ``SMAP1``, little-endian uint32 width and height, then
float64 values row-major), ``csv`` (one row per line) and ``pgm16`` (binary
``P5`` with maxval 65535).
"""

from __future__ import annotations

import csv
import json
import math
import struct
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .errors import GazeCenterError
from .geometry import Polygon, rasterize_polygon
from .maps import build_fixation_map, normalize, resample_bilinear

FIXATION_COLUMNS = ("image_id", "observer_id", "fixation_index", "x", "y")
OPTIONAL_FIXATION_COLUMNS = ("duration_ms",)
SMAP_MAGIC = b"SMAP1"
MAP_FORMATS = ("smap", "csv", "pgm16")


@dataclass(frozen=True)
class ObjectAnnotation:
    object_id: str
    polygon: Polygon
    label: Optional[str] = None


@dataclass(frozen=True)
class ImageAnnotation:
    image_id: str
    dims: tuple[int, int]
    objects: tuple[ObjectAnnotation, ...] = ()

    @property
    def width(self):
        return self.dims[0]

    @property
    def height(self):
        return self.dims[1]

    def in_bounds(self, x, y) -> bool:
        return 0 <= x < self.dims[0] and 0 <= y < self.dims[1]


class Fixation(NamedTuple):
    image_id: str
    observer_id: str
    fixation_index: int
    x: float
    y: float
    duration_ms: Optional[float] = None


@dataclass
class FixationSet:
    records: list[Fixation] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def image_ids(self) -> list[str]:
        """Image ids in order of first appearance."""
        return list(dict.fromkeys(r.image_id for r in self.records))

    def for_image(self, image_id) -> list[Fixation]:
        return [r for r in self.records if r.image_id == image_id]

    def points(self, image_id=None) -> np.ndarray:
        """``(n, 2)`` array of ``(x, y)``; all images when ``image_id`` is None."""
        recs = self.records if image_id is None else self.for_image(image_id)
        return np.array([(r.x, r.y) for r in recs], dtype=float).reshape(-1, 2)

    def by_image(self) -> dict[str, np.ndarray]:
        groups: dict[str, list] = {}
        for r in self.records:
            groups.setdefault(r.image_id, []).append((r.x, r.y))
        return {k: np.array(v, dtype=float).reshape(-1, 2) for k, v in groups.items()}

    def out_of_bounds(self, images) -> list[Fixation]:
        """Records lying outside their image (kept in the set, only flagged)."""
        dims = {img.image_id: img.dims for img in images}
        flagged = []
        for r in self.records:
            if r.image_id in dims:
                w, h = dims[r.image_id]
                if not (0 <= r.x < w and 0 <= r.y < h):
                    flagged.append(r)
        return flagged


# -- annotations -------------------------------------------------------------


def _field(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise GazeCenterError("PARSE_ERROR", f"{where}: missing field {key!r}")
    val = obj[key]
    if kind is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    elif kind is str:
        ok = isinstance(val, str)
    else:
        ok = isinstance(val, kind)
    if not ok:
        raise GazeCenterError("PARSE_ERROR", f"{where}: field {key!r} has wrong type")
    return val


def parse_annotations(data) -> list[ImageAnnotation]:
    """Validate a decoded annotation document."""
    images_raw = _field(data, "images", list, "top level")
    images, seen = [], set()
    for n, im in enumerate(images_raw):
        where = f"images[{n}]"
        image_id = str(_field(im, "id", str, where))
        width = _field(im, "width", int, where)
        height = _field(im, "height", int, where)
        if width <= 0 or height <= 0:
            raise GazeCenterError("PARSE_ERROR", f"{where}: width/height must be positive")
        if image_id in seen:
            raise GazeCenterError("DUPLICATE_IMAGE_ID", image_id)
        seen.add(image_id)
        objects, obj_ids = [], set()
        for m, ob in enumerate(im.get("objects", [])):
            owhere = f"{where}.objects[{m}]"
            object_id = _field(ob, "id", str, owhere)
            if object_id in obj_ids:
                raise GazeCenterError("DUPLICATE_OBJECT_ID", f"{image_id}/{object_id}")
            obj_ids.add(object_id)
            label = ob.get("label")
            if label is not None and not isinstance(label, str):
                raise GazeCenterError("PARSE_ERROR", f"{owhere}: field 'label' has wrong type")
            verts = _field(ob, "polygon", list, owhere)
            try:
                coords = [(float(v[0]), float(v[1])) for v in verts if len(v) == 2]
                if len(coords) != len(verts):
                    raise ValueError
                poly = Polygon(coords)
            except (TypeError, ValueError) as exc:
                raise GazeCenterError(
                    "INVALID_POLYGON", f"object {object_id!r} in image {image_id!r}: {exc}"
                ) from None
            objects.append(ObjectAnnotation(object_id, poly, label))
        images.append(ImageAnnotation(image_id, (width, height), tuple(objects)))
    return images


def load_annotations(path) -> list[ImageAnnotation]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GazeCenterError(
            "PARSE_ERROR", f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    return parse_annotations(data)


def annotations_to_dict(images) -> dict:
    out = []
    for img in images:
        objs = []
        for ob in img.objects:
            d = {"id": ob.object_id}
            if ob.label is not None:
                d["label"] = ob.label
            d["polygon"] = [[v.x, v.y] for v in ob.polygon.vertices]
            objs.append(d)
        out.append({"id": img.image_id, "width": img.width, "height": img.height, "objects": objs})
    return {"images": out}


def save_annotations(images, path):
    Path(path).write_text(json.dumps(annotations_to_dict(images), indent=1) + "\n", encoding="utf-8")


# -- fixations ----------------------------------------------------------------


def load_fixations(path) -> FixationSet:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise GazeCenterError("PARSE_ERROR", f"{path}: empty file") from None
        allowed = FIXATION_COLUMNS + OPTIONAL_FIXATION_COLUMNS
        unknown = [h for h in header if h not in allowed]
        if unknown:
            raise GazeCenterError("UNKNOWN_COLUMN", ", ".join(unknown))
        missing = [c for c in FIXATION_COLUMNS if c not in header]
        if missing:
            raise GazeCenterError("PARSE_ERROR", f"missing column(s): {', '.join(missing)}")
        col = {name: header.index(name) for name in header}
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise GazeCenterError("PARSE_ERROR", f"row {lineno}: expected {len(header)} fields")
            try:
                idx = int(row[col["fixation_index"]])
                x = float(row[col["x"]])
                y = float(row[col["y"]])
                dur = row[col["duration_ms"]].strip() if "duration_ms" in col else ""
                dur = float(dur) if dur else None
            except ValueError as exc:
                raise GazeCenterError("PARSE_ERROR", f"row {lineno}: {exc}") from None
            if idx < 1:
                raise GazeCenterError("PARSE_ERROR", f"row {lineno}: fixation_index must be >= 1")
            if not (math.isfinite(x) and math.isfinite(y)):
                raise GazeCenterError("PARSE_ERROR", f"row {lineno}: non-finite coordinate")
            records.append(
                Fixation(row[col["image_id"]], row[col["observer_id"]], idx, x, y, dur)
            )
    return FixationSet(records)


def save_fixations(fixations, path):
    with_dur = any(r.duration_ms is not None for r in fixations)
    cols = list(FIXATION_COLUMNS) + (["duration_ms"] if with_dur else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in fixations:
            row = [r.image_id, r.observer_id, r.fixation_index, repr(r.x), repr(r.y)]
            if with_dur:
                row.append("" if r.duration_ms is None else repr(r.duration_ms))
            w.writerow(row)


# -- dataset statistics ---------------------------------------------------------


@dataclass
class DatasetStats:
    """Per-object and per-image summaries of an annotated fixation dataset.

    ``object_size`` and ``object_fixation_fraction`` map ``(image_id,
    object_id)`` to the object's share of image pixels and of the image's
    fixations. Histograms use ``bin_edges`` (ten equal bins on [0, 1]).
    """

    object_size: dict
    object_fixation_fraction: dict
    most_salient: dict
    objects_per_image: dict
    total_fixations: int
    bin_edges: np.ndarray
    size_histogram: np.ndarray
    fraction_histogram: np.ndarray
    salient_size_histogram: np.ndarray
    salient_fraction_histogram: np.ndarray
    average_annotation_map: np.ndarray
    average_fixation_map: Optional[np.ndarray]

    @property
    def n_objects(self):
        return len(self.object_size)

    @property
    def mean_objects_per_image(self):
        return float(np.mean(list(self.objects_per_image.values())))

    @property
    def median_objects_per_image(self):
        return float(np.median(list(self.objects_per_image.values())))

    def share_of_small_objects(self, threshold=0.10) -> float:
        """Fraction of objects whose normalized size is <= ``threshold``."""
        sizes = np.array(list(self.object_size.values()))
        return float((sizes <= threshold).mean()) if len(sizes) else 0.0

    def to_dict(self) -> dict:
        def keyed(d):
            return [{"image_id": i, "object_id": o, "value": v} for (i, o), v in d.items()]

        return {
            "n_images": len(self.objects_per_image),
            "n_objects": self.n_objects,
            "total_fixations": self.total_fixations,
            "mean_objects_per_image": self.mean_objects_per_image,
            "median_objects_per_image": self.median_objects_per_image,
            "share_objects_size_le_0.1": self.share_of_small_objects(0.10),
            "bin_edges": self.bin_edges.tolist(),
            "size_histogram": self.size_histogram.tolist(),
            "fraction_histogram": self.fraction_histogram.tolist(),
            "salient_size_histogram": self.salient_size_histogram.tolist(),
            "salient_fraction_histogram": self.salient_fraction_histogram.tolist(),
            "most_salient": dict(self.most_salient),
            "object_size": keyed(self.object_size),
            "object_fixation_fraction": keyed(self.object_fixation_fraction),
        }


def _histogram(values, edges):
    # np.histogram closes only the last bin; values are clipped into [0, 1]
    vals = np.clip(np.asarray(list(values), dtype=float), edges[0], edges[-1])
    return np.histogram(vals, bins=edges)[0]


def dataset_stats(images, fixations, smoothing_sigma_px: float = 0.0, avg_dims=None) -> DatasetStats:
    """Summarize object sizes, fixation shares and average maps.

    A fixation belongs to every object whose raster contains the pixel under
    it (the floor of its coordinates). The most salient object of an image is
    the one holding the largest fraction of the image's fixations; ties go to
    the smaller object id. Average maps are computed on ``avg_dims``
    (default: the most common image size), other sizes being resampled
    bilinearly.
    """
    by_id = {img.image_id: img for img in images}
    per_image = fixations.by_image()
    missing = sorted(set(per_image) - set(by_id))
    if missing:
        raise GazeCenterError("MISSING_IMAGE", ", ".join(missing))
    if avg_dims is None:
        avg_dims = Counter(img.dims for img in images).most_common(1)[0][0] if images else (1, 1)

    sizes, fractions, most_salient, counts = {}, {}, {}, {}
    total = 0
    ann_sum = np.zeros((avg_dims[1], avg_dims[0]))
    fix_sum = np.zeros_like(ann_sum)
    n_fix_maps = 0
    for img in images:
        counts[img.image_id] = len(img.objects)
        pts = per_image.get(img.image_id, np.zeros((0, 2)))
        total += len(pts)
        cols = np.floor(pts[:, 0]).astype(np.int64)
        rows = np.floor(pts[:, 1]).astype(np.int64)
        inside = (cols >= 0) & (cols < img.width) & (rows >= 0) & (rows < img.height)
        if len(pts) == 0 and img.objects:
            warnings.warn(f"image {img.image_id!r} has no fixations; object fractions set to 0")
        union = np.zeros((img.height, img.width), dtype=bool)
        for ob in img.objects:
            mask = rasterize_polygon(ob.polygon, img.dims).mask()
            union |= mask
            key = (img.image_id, ob.object_id)
            sizes[key] = mask.sum() / (img.width * img.height)
            hits = mask[rows[inside], cols[inside]].sum()
            fractions[key] = float(hits / len(pts)) if len(pts) else 0.0
        if img.objects:
            best = min(
                img.objects,
                key=lambda o: (-fractions[(img.image_id, o.object_id)], o.object_id),
            )
            most_salient[img.image_id] = best.object_id
        ann = union.astype(float)
        if img.dims != tuple(avg_dims):
            ann = resample_bilinear(ann, avg_dims)
        ann_sum += ann
        if inside.any():
            fmap = build_fixation_map(pts, img.dims, smoothing_sigma_px)
            if img.dims != tuple(avg_dims):
                fmap = normalize(resample_bilinear(fmap, avg_dims))
            fix_sum += fmap
            n_fix_maps += 1

    edges = np.linspace(0.0, 1.0, 11)
    sal_keys = [(i, o) for i, o in most_salient.items()]
    avg_ann = ann_sum / ann_sum.sum() if ann_sum.sum() > 0 else np.full_like(ann_sum, 1.0 / ann_sum.size)
    avg_fix = fix_sum / fix_sum.sum() if n_fix_maps else None
    return DatasetStats(
        object_size=sizes,
        object_fixation_fraction=fractions,
        most_salient=most_salient,
        objects_per_image=counts,
        total_fixations=total,
        bin_edges=edges,
        size_histogram=_histogram(sizes.values(), edges),
        fraction_histogram=_histogram(fractions.values(), edges),
        salient_size_histogram=_histogram([sizes[k] for k in sal_keys], edges),
        salient_fraction_histogram=_histogram([fractions[k] for k in sal_keys], edges),
        average_annotation_map=avg_ann,
        average_fixation_map=avg_fix,
    )


# -- map files -----------------------------------------------------------------


def _format_for(path, fmt):
    if fmt is not None:
        if fmt not in MAP_FORMATS:
            raise GazeCenterError("UNKNOWN_FORMAT", str(fmt))
        return fmt
    suffix = Path(path).suffix.lower()
    return {".smap": "smap", ".csv": "csv", ".pgm": "pgm16"}.get(suffix, "smap")


def write_map(path, grid, fmt=None):
    """Write a finite non-negative ``(height, width)`` grid."""
    fmt = _format_for(path, fmt)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 2 or not np.isfinite(grid).all() or (grid < 0).any():
        raise GazeCenterError("INVALID_GRID", "map must be 2-D, finite and non-negative")
    h, w = grid.shape
    if fmt == "smap":
        payload = SMAP_MAGIC + struct.pack("<II", w, h) + grid.astype("<f8").tobytes(order="C")
        Path(path).write_bytes(payload)
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for row in grid:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    else:
        lo, hi = grid.min(), grid.max()
        if hi > lo:
            q = np.rint((grid - lo) / (hi - lo) * 65535.0)
        else:
            warnings.warn("constant map written to pgm16 as all zeros")
            q = np.zeros_like(grid)
        body = q.astype(">u2").tobytes(order="C")
        Path(path).write_bytes(f"P5\n{w} {h}\n65535\n".encode("ascii") + body)


def _read_pgm(data: bytes) -> np.ndarray:
    if not data.startswith(b"P5"):
        raise GazeCenterError("MAGIC_MISMATCH", "not a binary PGM (P5) file")
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(int(data[start:pos]))
    pos += 1
    w, h, maxval = tokens
    dtype = ">u2" if maxval > 255 else "u1"
    n = w * h
    arr = np.frombuffer(data, dtype=dtype, count=n, offset=pos)
    return arr.reshape(h, w).astype(float)


def read_map(path, fmt=None, expected_dims=None) -> np.ndarray:
    """Read a map; ``expected_dims = (width, height)`` is checked when given."""
    fmt = _format_for(path, fmt)
    if fmt == "smap":
        data = Path(path).read_bytes()
        if data[:5] != SMAP_MAGIC:
            raise GazeCenterError("MAGIC_MISMATCH", f"{path}: not an SMAP1 file")
        w, h = struct.unpack("<II", data[5:13])
        if len(data) != 13 + 8 * w * h:
            raise GazeCenterError("PARSE_ERROR", f"{path}: truncated map payload")
        grid = np.frombuffer(data, dtype="<f8", offset=13).reshape(h, w).astype(float)
    elif fmt == "csv":
        text = Path(path).read_text(encoding="utf-8")
        try:
            rows = [[float(v) for v in line.split(",")] for line in text.splitlines() if line.strip()]
        except ValueError as exc:
            raise GazeCenterError("PARSE_ERROR", f"{path}: {exc}") from None
        if not rows or len({len(r) for r in rows}) != 1:
            raise GazeCenterError("PARSE_ERROR", f"{path}: ragged or empty map")
        grid = np.array(rows, dtype=float)
    else:
        grid = _read_pgm(Path(path).read_bytes())
    if expected_dims is not None and (grid.shape[1], grid.shape[0]) != tuple(expected_dims):
        raise GazeCenterError(
            "DIM_MISMATCH",
            f"{path}: map is {grid.shape[1]}x{grid.shape[0]}, expected {expected_dims[0]}x{expected_dims[1]}",
        )
    return grid

