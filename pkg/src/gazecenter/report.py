"""Write analysis results as CSV, JSON and SVG files.

Numbers are written with :func:`gazecenter.plotting.fmt` everywhere, so a
value printed in a figure title is textually identical to its CSV cell.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import plotting
from .dataset import DatasetStats
from .errors import GazeCenterError
from .evaluation import ComparisonResult, SweepResult
from .plotting import fmt

FORMATS = ("csv", "json", "svg")


def _plain(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(path, payload):
    text = json.dumps(_plain(payload), indent=2, allow_nan=False) + "\n"
    _write_text(path, text)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        cells = [fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row]
        lines.append(",".join(cells))
    _write_text(path, "\n".join(lines) + "\n")


def _write_text(path, text):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise GazeCenterError("IO_ERROR", f"{path}: {exc.strerror}") from None


def read_scores_csv(path) -> dict:
    """``image_id,nss`` file as an ordered dict."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"image_id", "nss"} <= set(reader.fieldnames):
            raise GazeCenterError("PARSE_ERROR", f"{path}: expected columns image_id,nss")
        try:
            return {row["image_id"]: float(row["nss"]) for row in reader}
        except ValueError as exc:
            raise GazeCenterError("PARSE_ERROR", f"{path}: {exc}") from None


def read_sweep_csv(path) -> dict:
    """``image_id,beta,nss`` rows as ``{beta: {image_id: nss}}``."""
    out: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"image_id", "beta", "nss"} <= set(reader.fieldnames):
            raise GazeCenterError("PARSE_ERROR", f"{path}: expected columns image_id,beta,nss")
        for row in reader:
            out.setdefault(float(row["beta"]), {})[row["image_id"]] = float(row["nss"])
    return out


def emit_sweep(result: SweepResult, out_dir, formats=FORMATS, stem="sweep"):
    out_dir = Path(out_dir)
    written = []
    if "csv" in formats:
        rows = [
            (image_id, float(beta), float(result.per_image_nss[i, j]))
            for i, image_id in enumerate(result.image_ids)
            for j, beta in enumerate(result.betas)
        ]
        written.append(out_dir / f"{stem}.csv")
        write_csv(written[-1], ("image_id", "beta", "nss"), rows)
    if "json" in formats:
        written.append(out_dir / f"{stem}.json")
        write_json(written[-1], result.to_dict())
    if "svg" in formats:
        written.append(out_dir / f"{stem}.svg")
        plotting.plot_sweep(result, written[-1])
    return written


def emit_comparison(
    comparison: ComparisonResult, image_ids, a, b, out_dir, formats=FORMATS,
    stem="compare", label_a="A", label_b="B",
):
    out_dir = Path(out_dir)
    written = []
    if "csv" in formats:
        written.append(out_dir / f"{stem}.csv")
        write_csv(
            written[-1], ("image_id", "nss_a", "nss_b"),
            [(i, float(x), float(y)) for i, x, y in zip(image_ids, a, b)],
        )
    if "json" in formats:
        written.append(out_dir / f"{stem}.json")
        payload = {"model_a": label_a, "model_b": label_b, **comparison.to_dict()}
        write_json(written[-1], payload)
    if "svg" in formats:
        written.append(out_dir / f"{stem}.svg")
        plotting.plot_scatter(a, b, comparison, written[-1], label_a, label_b)
    return written


def emit_rings(rows, out_dir, k, formats=FORMATS, stem="rings"):
    """Per-object ring profiles.

    ``rows`` holds ``(image_id, object_id, RingProfile or None)``; objects
    without fixations (None) are listed with empty cells.
    """
    out_dir = Path(out_dir)
    written = []
    profiles = [p for _, _, p in rows if p is not None]
    if profiles:
        agg_counts = np.sum([p.counts for p in profiles], axis=0)
        agg = agg_counts / agg_counts.sum()
        sal = [p.mean_sal for p in profiles if p.mean_sal is not None]
        agg_sal = np.nanmean(sal, axis=0) if sal else None
    else:
        agg, agg_sal = np.zeros(k), None
    if "csv" in formats:
        header = ["image_id", "object_id", "n_fix", "obj_cnt_idx"]
        header += [f"p{i}" for i in range(1, k + 1)] + [f"sal{i}" for i in range(1, k + 1)]
        out = []
        for image_id, object_id, prof in rows:
            if prof is None:
                out.append([image_id, object_id, 0, ""] + [""] * (2 * k))
                continue
            sal = prof.mean_sal if prof.mean_sal is not None else [""] * k
            out.append(
                [image_id, object_id, prof.n_fix, float(prof.obj_cnt_idx)]
                + [float(v) for v in prof.p]
                + [float(v) if v != "" else "" for v in sal]
            )
        written.append(out_dir / f"{stem}.csv")
        write_csv(written[-1], header, out)
    if "json" in formats:
        written.append(out_dir / f"{stem}.json")
        write_json(written[-1], {
            "k": k,
            "n_objects": len(rows),
            "n_objects_with_fixations": len(profiles),
            "aggregate_p": agg,
            "aggregate_mean_saliency": agg_sal,
            "share_index_above_half": (
                float(np.mean([p.obj_cnt_idx > 0.5 for p in profiles])) if profiles else None
            ),
        })
    if "svg" in formats and profiles:
        written.append(out_dir / f"{stem}_profile.svg")
        plotting.plot_ring_profile(agg, written[-1], agg_sal)
        written.append(out_dir / f"{stem}_index_hist.svg")
        plotting.plot_index_histogram([p.obj_cnt_idx for p in profiles], written[-1])
    return written


def emit_stats(stats, out_dir, formats=FORMATS, stem="stats"):
    out_dir = Path(out_dir)
    written = []
    if "json" in formats:
        written.append(out_dir / f"{stem}.json")
        write_json(written[-1], stats.to_dict())
    if "csv" in formats:
        written.append(out_dir / f"{stem}_objects.csv")
        rows = [
            (i, o, float(size), float(stats.object_fixation_fraction[(i, o)]),
             int(stats.most_salient.get(i) == o))
            for (i, o), size in stats.object_size.items()
        ]
        write_csv(written[-1], ("image_id", "object_id", "normalized_size",
                                "fixation_fraction", "most_salient"), rows)
    if "svg" in formats:
        written.append(out_dir / f"{stem}_size_hist.svg")
        plotting.plot_histogram(stats.size_histogram, stats.bin_edges, written[-1],
                                "normalized object size")
        written.append(out_dir / f"{stem}_fraction_hist.svg")
        plotting.plot_histogram(stats.fraction_histogram, stats.bin_edges, written[-1],
                                "fraction of fixations on object")
    return written


def emit_report(results, out_dir, formats=FORMATS, **kwargs):
    """Dispatch on the result type and write the requested formats."""
    bad = set(formats) - set(FORMATS)
    if bad:
        raise GazeCenterError("UNKNOWN_FORMAT", ", ".join(sorted(bad)))
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    if isinstance(results, SweepResult):
        return emit_sweep(results, out_dir, formats, **kwargs)
    if isinstance(results, ComparisonResult):
        return emit_comparison(results, out_dir=out_dir, formats=formats, **kwargs)
    if isinstance(results, DatasetStats):
        return emit_stats(results, out_dir, formats, **kwargs)
    raise TypeError(f"cannot report {type(results).__name__}")
