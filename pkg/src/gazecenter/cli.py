"""Command-line interface.

Exit status is 0 on success, 1 on a data error (one ``error: CODE: detail``
line on stderr) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import report
from .dataset import dataset_stats, load_annotations, load_fixations, write_map
from .errors import GazeCenterError
from .evaluation import DEFAULT_BETAS, check_betas, compare_models, sweep_beta
from .geometry import REGION_MODES, center_of_mass, rasterize_polygon, ring_partition
from .maps import SCHEMES, WeightScheme, build_object_map
from .metrics import ring_fixation_profile
from .saliency import (
    IMAGE_SUFFIXES,
    builtin_saliency,
    find_image,
    load_external_saliency,
    prepare_saliency,
    read_image,
)

log = logging.getLogger("gazecenter")


@dataclass
class RunConfig:
    annotations: Optional[str] = None
    fixations: Optional[str] = None
    saliency_dir: Optional[str] = None
    image_dir: Optional[str] = None
    out_dir: str = "."
    scheme: str = "linear"
    gaussian_sigma_rings: float = 3.0
    region_mode: str = "polygon"
    k: int = 10
    betas: list = field(default_factory=lambda: list(DEFAULT_BETAS))
    sigma_px: float = 0.0
    seed: int = 0
    builtin_saliency: bool = False

    def validate(self, need=()):
        for name in need:
            value = getattr(self, name)
            if value is None:
                raise GazeCenterError("MISSING_ARGUMENT", f"--{name.replace('_', '-')} is required")
            if not Path(value).exists():
                raise GazeCenterError("MISSING_PATH", f"{name}: {value}")
        if self.k < 1:
            raise GazeCenterError("K_NONPOSITIVE", f"k must be >= 1, got {self.k}")
        check_betas(self.betas)
        WeightScheme(self.scheme, self.gaussian_sigma_rings)
        if self.region_mode not in REGION_MODES:
            raise GazeCenterError("INVALID_MODE", self.region_mode)
        if self.sigma_px < 0:
            raise GazeCenterError("NEGATIVE_SIGMA", str(self.sigma_px))

    @property
    def weight_scheme(self):
        return WeightScheme(self.scheme, self.gaussian_sigma_rings)


def _betas(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad beta list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gazecenter",
        description="Object center-bias analysis and combined saliency models.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name, help_text, *opts):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="JSON file with default settings")
        p.add_argument("--out-dir", help="output directory (default: .)")
        for opt in opts:
            opt(p)
        return p

    def ann(p):
        p.add_argument("--annotations", help="annotation JSON file")

    def fix(p):
        p.add_argument("--fixations", help="fixation CSV file")

    def sal(p):
        p.add_argument("--saliency-dir", help="directory of <image_id>.smap saliency maps")
        p.add_argument("--builtin-saliency", action="store_true", default=None,
                       help="compute the built-in saliency baseline from --image-dir")
        p.add_argument("--image-dir", help="directory of <image_id>.png/.ppm images")

    def objmap(p):
        p.add_argument("--scheme", choices=SCHEMES)
        p.add_argument("--gaussian-sigma-rings", type=float)
        p.add_argument("--region-mode", choices=REGION_MODES)
        p.add_argument("--k", type=int, help="number of rings (default 10)")

    def formats(p):
        p.add_argument("--formats", default="csv,json,svg",
                       help="comma-separated subset of csv,json,svg")

    add("validate", "Check annotation, fixation and saliency inputs.", ann, fix, sal)
    p = add("stats", "Dataset statistics and average maps.", ann, fix, formats)
    p.add_argument("--sigma-px", type=float, help="fixation map smoothing (pixels)")
    p = add("rings", "Per-object ring fixation profiles and center-bias index.", ann, fix, sal, formats)
    p.add_argument("--region-mode", choices=REGION_MODES)
    p.add_argument("--k", type=int)
    p = add("objmap", "Write object center-bias maps.", ann, objmap)
    p.add_argument("--image-id", action="append", help="restrict to this image (repeatable)")
    p.add_argument("--map-format", choices=("smap", "csv", "pgm16"), default="smap")
    p = add("saliency", "Compute built-in saliency maps for images.", ann)
    p.add_argument("--image-dir", help="directory of input images")
    p = add("sweep", "Score the combined model over a beta grid.", ann, fix, sal, objmap, formats)
    p.add_argument("--betas", type=_betas, help="comma-separated betas (default 0,0.1,...,1)")
    p.add_argument("--seed", type=int)
    p = add("compare", "Compare per-image NSS of two models.", formats)
    p.add_argument("--sweep-csv", help="sweep.csv to read both models from")
    p.add_argument("--beta-a", default="opt", help="beta of model A in --sweep-csv, or 'opt'")
    p.add_argument("--beta-b", default="0.0", help="beta of model B in --sweep-csv, or 'opt'")
    p.add_argument("--scores-a", help="image_id,nss CSV for model A")
    p.add_argument("--scores-b", help="image_id,nss CSV for model B")
    p.add_argument("--label-a")
    p.add_argument("--label-b")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise GazeCenterError("PARSE_ERROR", f"config {args.config}: {exc}") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise GazeCenterError("UNKNOWN_CONFIG_KEY", ", ".join(unknown))
        for key, value in data.items():
            setattr(cfg, key, value)
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    return cfg


def _threads():
    try:
        return max(1, int(os.environ.get("GAZECENTER_THREADS", "1")))
    except ValueError:
        return 1


def _formats(args):
    fmts = tuple(f.strip() for f in args.formats.split(",") if f.strip())
    bad = set(fmts) - set(report.FORMATS)
    if bad:
        raise GazeCenterError("UNKNOWN_FORMAT", ", ".join(sorted(bad)))
    return fmts


def _out_dir(cfg):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_inputs(cfg, need_fixations=True):
    images = load_annotations(cfg.annotations)
    fixations = load_fixations(cfg.fixations) if need_fixations else None
    if fixations is not None:
        known = {img.image_id for img in images}
        missing = [i for i in fixations.image_ids() if i not in known]
        if missing:
            raise GazeCenterError("MISSING_IMAGE", ", ".join(missing))
    return images, fixations


def _saliency_for(cfg, img):
    if cfg.builtin_saliency:
        if cfg.image_dir is None:
            raise GazeCenterError("MISSING_ARGUMENT", "--builtin-saliency needs --image-dir")
        grid = builtin_saliency(read_image(find_image(cfg.image_dir, img.image_id)))
        return prepare_saliency(grid, img.dims)
    if cfg.saliency_dir is None:
        raise GazeCenterError("MISSING_ARGUMENT", "--saliency-dir or --builtin-saliency is required")
    path = Path(cfg.saliency_dir) / f"{img.image_id}.smap"
    if not path.exists():
        raise GazeCenterError("MISSING_SALIENCY", f"{img.image_id} ({path})")
    return load_external_saliency(path, img.dims)


def cmd_validate(cfg, args):
    cfg.validate(need=("annotations",))
    images = load_annotations(cfg.annotations)
    n_obj = sum(len(img.objects) for img in images)
    for img in images:
        for ob in img.objects:
            try:
                rasterize_polygon(ob.polygon, img.dims, cfg.region_mode)
            except GazeCenterError as exc:
                raise GazeCenterError(exc.code, f"object {ob.object_id!r} in image {img.image_id!r}") from None
    print(f"annotations: {len(images)} images, {n_obj} objects")
    if cfg.fixations:
        cfg.validate(need=("fixations",))
        _, fixations = _load_inputs(cfg)
        oob = fixations.out_of_bounds(images)
        print(f"fixations: {len(fixations)} records, {len(oob)} out of bounds")
    if cfg.saliency_dir:
        with_fix = set(load_fixations(cfg.fixations).image_ids()) if cfg.fixations else None
        absent = [
            img.image_id for img in images
            if (with_fix is None or img.image_id in with_fix)
            and not (Path(cfg.saliency_dir) / f"{img.image_id}.smap").exists()
        ]
        if absent:
            raise GazeCenterError("MISSING_SALIENCY", ", ".join(absent))
        print("saliency: all maps present")
    return 0


def cmd_stats(cfg, args):
    cfg.validate(need=("annotations", "fixations"))
    images, fixations = _load_inputs(cfg)
    stats = dataset_stats(images, fixations, cfg.sigma_px)
    out = _out_dir(cfg)
    report.emit_report(stats, out, _formats(args))
    write_map(out / "average_annotation_map.smap", stats.average_annotation_map)
    if stats.average_fixation_map is not None:
        write_map(out / "average_fixation_map.smap", stats.average_fixation_map)
    print(
        f"objects={stats.n_objects} share_size_le_0.1={report.fmt(stats.share_of_small_objects())} "
        f"mean_objects={report.fmt(stats.mean_objects_per_image)} "
        f"median_objects={report.fmt(stats.median_objects_per_image)} fixations={stats.total_fixations}"
    )
    return 0


def cmd_rings(cfg, args):
    cfg.validate(need=("annotations", "fixations"))
    images, fixations = _load_inputs(cfg)
    per_image = fixations.by_image()
    with_saliency = bool(cfg.saliency_dir or cfg.builtin_saliency)
    rows = []
    for img in images:
        if not img.objects:
            continue
        pts = per_image.get(img.image_id, np.zeros((0, 2)))
        S = _saliency_for(cfg, img) if with_saliency else None
        for ob in img.objects:
            ps = rasterize_polygon(ob.polygon, img.dims, cfg.region_mode)
            part = ring_partition(ps, center_of_mass(ps), cfg.k)
            try:
                prof = ring_fixation_profile(part, pts, S)
            except GazeCenterError as exc:
                if exc.code != "NO_OBJECT_FIXATIONS":
                    raise
                prof = None
            rows.append((img.image_id, ob.object_id, prof))
    report.emit_rings(rows, _out_dir(cfg), cfg.k, _formats(args))
    n_prof = sum(p is not None for _, _, p in rows)
    print(f"objects={len(rows)} with_fixations={n_prof}")
    return 0


def cmd_objmap(cfg, args):
    cfg.validate(need=("annotations",))
    images = load_annotations(cfg.annotations)
    wanted = set(args.image_id or [])
    unknown = wanted - {img.image_id for img in images}
    if unknown:
        raise GazeCenterError("MISSING_IMAGE", ", ".join(sorted(unknown)))
    out = _out_dir(cfg)
    suffix = {"smap": ".smap", "csv": ".csv", "pgm16": ".pgm"}[args.map_format]
    n = 0
    for img in images:
        if wanted and img.image_id not in wanted:
            continue
        if not img.objects:
            log.warning("image %s has no objects; no map written", img.image_id)
            continue
        grid = build_object_map(img, cfg.weight_scheme, cfg.region_mode, cfg.k)
        write_map(out / f"{img.image_id}.omap{suffix}", grid, args.map_format)
        n += 1
    print(f"object maps written: {n}")
    return 0


def cmd_saliency(cfg, args):
    cfg.validate(need=("image_dir",))
    if cfg.annotations:
        images = load_annotations(cfg.annotations)
        jobs = [(img.image_id, find_image(cfg.image_dir, img.image_id), img.dims) for img in images]
    else:
        paths = sorted(p for p in Path(cfg.image_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        jobs = [(p.stem, p, None) for p in paths]
    out = _out_dir(cfg)
    for image_id, path, dims in jobs:
        grid = prepare_saliency(builtin_saliency(read_image(path)), dims)
        write_map(out / f"{image_id}.smap", grid)
    print(f"saliency maps written: {len(jobs)}")
    return 0


def cmd_sweep(cfg, args):
    cfg.validate(need=("annotations", "fixations"))
    images, fixations = _load_inputs(cfg)
    with_fix = set(fixations.image_ids())
    saliency = {img.image_id: _saliency_for(cfg, img) for img in images if img.image_id in with_fix}
    source = "builtin" if cfg.builtin_saliency else f"external:{cfg.saliency_dir}"
    result = sweep_beta(
        images, fixations, saliency, cfg.weight_scheme, cfg.region_mode,
        cfg.betas, cfg.k, source_id=source, workers=_threads(),
    )
    result.config["seed"] = cfg.seed
    report.emit_report(result, _out_dir(cfg), _formats(args))
    j = result.best_index
    print(f"beta_opt={report.fmt(result.beta_opt)} mean_nss={report.fmt(result.mean_nss[j])} "
          f"images={len(result.image_ids)}")
    return 0


def _pick_beta(table, which):
    betas = sorted(table)
    if which == "opt":
        means = [np.mean(list(table[b].values())) for b in betas]
        return betas[int(np.argmax(means))]
    try:
        target = float(which)
    except ValueError:
        raise GazeCenterError("INVALID_BETAS", f"bad beta {which!r}") from None
    for b in betas:
        if abs(b - target) < 1e-9:
            return b
    raise GazeCenterError("INVALID_BETAS", f"beta {which} not in sweep")


def cmd_compare(cfg, args):
    if args.sweep_csv:
        table = report.read_sweep_csv(args.sweep_csv)
        if not table:
            raise GazeCenterError("EMPTY_DATASET", args.sweep_csv)
        ba, bb = _pick_beta(table, args.beta_a), _pick_beta(table, args.beta_b)
        sa, sb = table[ba], table[bb]
        label_a = args.label_a or f"beta={report.fmt(ba)}"
        label_b = args.label_b or f"beta={report.fmt(bb)}"
    elif args.scores_a and args.scores_b:
        sa, sb = report.read_scores_csv(args.scores_a), report.read_scores_csv(args.scores_b)
        label_a, label_b = args.label_a or "A", args.label_b or "B"
    else:
        raise GazeCenterError("MISSING_ARGUMENT", "give --sweep-csv or both --scores-a and --scores-b")
    if set(sa) != set(sb):
        raise GazeCenterError("LENGTH_MISMATCH", "models scored on different images")
    ids = list(sa)
    a = np.array([sa[i] for i in ids])
    b = np.array([sb[i] for i in ids])
    result = compare_models(a, b)
    report.emit_report(
        result, _out_dir(cfg), _formats(args),
        image_ids=ids, a=a, b=b, label_a=label_a, label_b=label_b,
    )
    t = result.test
    print(f"win_rate={report.fmt(result.win_rate_a_over_b)} ties={result.tie_count} "
          f"t={report.fmt(t.t_statistic)} p={report.fmt(t.p_value)}")
    return 0


HANDLERS = {
    "validate": cmd_validate,
    "stats": cmd_stats,
    "rings": cmd_rings,
    "objmap": cmd_objmap,
    "saliency": cmd_saliency,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = resolve_config(args)
        return HANDLERS[args.command](cfg, args)
    except GazeCenterError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IO_ERROR: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())

