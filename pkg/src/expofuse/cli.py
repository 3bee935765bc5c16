"""Command-line front end.

    expofuse synth  --manifest M --out-dir D [--seed S]
    expofuse mask   IMAGE --out-dir D [--threshold T] [--ir IR]
    expofuse fuse   (--vi V --ir I | --manifest M) --out-dir D [--method ...]
    expofuse eval   --manifest M --fused-dir D --out REPORT [--format csv|json]
    expofuse loss   --vi V --ir I --fused F --mask K [--weights gamma=2,delta=1]
    expofuse schedule-check [--T 1000] [--kind linear] [--steps 3]

Parameters may also come from a JSON config with one section per
subcommand (``synth``, ``mask``, ``fuse``, ``eval``, ``loss``,
``schedule``), given by ``--config`` or the ``EXPOFUSE_CONFIG`` environment
variable.  Command-line flags win over the config.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import baselines, dataio, maskgen, metrics, plotting, schedule, synthesis
from .imagecore import luma
from .losses import LossWeights, compute_losses, dominance_classify

log = logging.getLogger("expofuse")

CONFIG_ENV = "EXPOFUSE_CONFIG"


class EntryError(Exception):
    def __init__(self, entry_id, exc):
        super().__init__(f"[{entry_id}] {type(exc).__name__}: {exc}")
        self.entry_id = entry_id


def load_config(path) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ValueError(f"config {path} must be a JSON object")
    return doc


def _section(args, name) -> dict:
    sec = dict(args.config_doc.get(name, {}))
    return sec


def _pick(flag, section, key, default):
    if flag is not None:
        return flag
    return section.get(key, default)


def _run_entries(manifest, fn, workers):
    """Apply ``fn`` to every entry; results keep manifest order."""
    entries = list(manifest)

    def guarded(e):
        try:
            return fn(e), None
        except Exception as exc:  # reported per entry id
            return None, EntryError(e.id, exc)

    if workers > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(guarded, entries))
    else:
        results = [guarded(e) for e in entries]
    errors = [err for _, err in results if err is not None]
    for err in errors:
        log.error("%s", err)
    return [r for r, _ in results], errors


# synth -------------------------------------------------------------------------

def cmd_synth(args) -> int:
    sec = _section(args, "synth")
    threshold = _pick(args.threshold, sec, "threshold", maskgen.DEFAULT_THRESHOLD)
    cfg_doc = {k: v for k, v in sec.items() if k != "threshold"}
    if args.synth_config:
        cfg_doc.update(json.loads(Path(args.synth_config).read_text()))
    if args.seed is not None:
        cfg_doc["seed"] = args.seed
    if args.gain_range is not None:
        cfg_doc["gain_range"] = args.gain_range
    cfg = synthesis.SynthesisConfig.from_dict(cfg_doc)
    manifest = dataio.load_manifest(args.manifest)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def one(e):
        vi = dataio.read_image(e.visible_path)
        if vi.ndim == 2:
            vi = np.repeat(vi[..., None], 3, axis=2)
        ir = luma(dataio.read_image(e.infrared_path))
        labels = dataio.read_labels(e.label_path) if e.label_path else np.zeros(ir.shape, np.int64)
        if labels.shape != ir.shape:
            raise ValueError(f"label map shape {labels.shape} does not match image {ir.shape}")
        specs = synthesis.sample_specs(labels, cfg, synthesis.image_rng(cfg.seed, e.id))
        vi_oe, ir_out = synthesis.synthesize_pair(vi, ir, specs)
        # threshold the frame as stored so `mask` on the written PNG agrees
        vi_oe = dataio.to_bytes(vi_oe) / 255.0
        mask = maskgen.detect_overexposed(luma(vi_oe), threshold)
        contours = maskgen.trace_contours(mask)
        dataio.write_image(out / f"{e.id}_vi.png", vi_oe)
        dataio.write_image(out / f"{e.id}_ir.png", ir_out)
        dataio.write_mask(out / f"{e.id}_mask.png", mask)
        maskgen.save_contours(out / f"{e.id}_contours.json", contours)
        dataio.write_image(out / f"{e.id}_overlay.png", maskgen.overlay_contours(ir_out, contours))
        log.info("%s: %d spot(s), %d overexposed px", e.id, len(specs), int(mask.sum()))
        return dataio.ManifestEntry(e.id, out / f"{e.id}_vi.png", out / f"{e.id}_ir.png",
                                    mask_path=out / f"{e.id}_mask.png")

    entries, errors = _run_entries(manifest, one, args.workers)
    if errors:
        return 1
    if args.emit_manifest:
        dataio.dump_manifest(dataio.DatasetManifest(entries), args.emit_manifest)
    return 0


# mask --------------------------------------------------------------------------

def cmd_mask(args) -> int:
    sec = _section(args, "mask")
    threshold = _pick(args.threshold, sec, "threshold", maskgen.DEFAULT_THRESHOLD)
    img = dataio.read_image(args.image)
    m = maskgen.detect_overexposed(luma(img), threshold)
    contours = maskgen.trace_contours(m)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.id or Path(args.image).stem
    dataio.write_mask(out / f"{stem}_mask.png", m)
    maskgen.save_contours(out / f"{stem}_contours.json", contours)
    if args.ir:
        ir = luma(dataio.read_image(args.ir))
        dataio.write_image(out / f"{stem}_overlay.png", maskgen.overlay_contours(ir, contours))
    print(f"{stem}: {int(m.sum())} overexposed px, {len(contours)} contour(s)")
    return 0


# fuse --------------------------------------------------------------------------

def _fuse_one(vi_path, ir_path, mask_path, out, name, method, feather, threshold):
    vi = dataio.read_image(vi_path)
    ir = luma(dataio.read_image(ir_path))
    vi_y = luma(vi)
    mask = None
    if method == "exposure-aware":
        if mask_path:
            mask = dataio.read_mask(mask_path)
        else:
            mask = maskgen.detect_overexposed(vi_y, threshold)
    fused_y = baselines.fuse(vi_y, ir, method, mask=mask, feather=feather)
    rgb = baselines.assemble_color(fused_y, vi) if vi.ndim == 3 else fused_y
    dataio.write_image(out / f"{name}.png", rgb)
    dataio.write_image(out / f"{name}_y.png", fused_y)


def cmd_fuse(args) -> int:
    sec = _section(args, "fuse")
    method = _pick(args.method, sec, "method", "exposure-aware")
    feather = float(_pick(args.feather, sec, "feather", baselines.DEFAULT_FEATHER))
    threshold = _pick(args.threshold, sec, "threshold", maskgen.DEFAULT_THRESHOLD)
    if method not in baselines.METHODS:
        raise ValueError(f"unknown method {method!r}")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.manifest:
        manifest = dataio.load_manifest(args.manifest)
        _, errors = _run_entries(
            manifest,
            lambda e: _fuse_one(e.visible_path, e.infrared_path, e.mask_path, out, e.id,
                                method, feather, threshold),
            args.workers)
        return 1 if errors else 0
    if not (args.vi and args.ir):
        raise ValueError("fuse needs --manifest or both --vi and --ir")
    name = args.id or Path(args.vi).stem
    _fuse_one(args.vi, args.ir, args.mask, out, name, method, feather, threshold)
    return 0


# eval --------------------------------------------------------------------------

def _fused_y(fused_dir: Path, entry_id: str):
    y_path = fused_dir / f"{entry_id}_y.png"
    path = y_path if y_path.is_file() else fused_dir / f"{entry_id}.png"
    return luma(dataio.read_image(path))


def cmd_eval(args) -> int:
    sec = _section(args, "eval")
    vif_mode = _pick(args.vif_mode, sec, "vif_mode", "mean")
    fmt = _pick(args.format, sec, "format", None) or ("json" if str(args.out).endswith(".json") else "csv")
    manifest = dataio.load_manifest(args.manifest)
    fused_dir = Path(args.fused_dir)

    def one(e):
        vi = luma(dataio.read_image(e.visible_path))
        ir = luma(dataio.read_image(e.infrared_path))
        f = _fused_y(fused_dir, e.id)
        rep = metrics.evaluate_all(vi, ir, f, vif_mode=vif_mode)
        return dataio.ReportRow(e.id, rep.columns())

    rows, errors = _run_entries(manifest, one, args.workers)
    rows = [r for r in rows if r is not None]
    out = Path(args.out)
    dataio.write_report(out, rows, fmt)
    Path(str(out) + ".params.json").write_text(json.dumps(metrics.metric_params(vif_mode), indent=2) + "\n")
    if rows and not args.no_figure:
        plotting.metric_bars(rows, out.with_suffix(".png"))
    for r in rows:
        print(r.id + "  " + "  ".join(f"{k}={v:.4f}" for k, v in r.values.items()))
    return 1 if errors else 0


# loss --------------------------------------------------------------------------

def _parse_weights(text: str) -> dict:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, _, val = part.partition("=")
        if not _:
            raise ValueError(f"bad weight {part!r}; expected key=value")
        out[key.strip()] = float(val)
    return out


def cmd_loss(args) -> int:
    sec = _section(args, "loss")
    wdoc = dict(sec.get("weights", {}))
    if args.weights:
        wdoc.update(_parse_weights(args.weights))
    weights = LossWeights.from_dict(wdoc)
    reduction = _pick(args.reduction, sec, "reduction", "mean")
    vi = luma(dataio.read_image(args.vi))
    ir = luma(dataio.read_image(args.ir))
    f = luma(dataio.read_image(args.fused))
    mask = dataio.read_mask(args.mask)
    parts = compute_losses(f, vi, ir, mask, weights, seg=args.seg, diff=args.diff, reduction=reduction)
    label = dominance_classify(f, vi, ir, mask, weights.tau).value if mask.any() else None
    doc = {"losses": parts.to_dict(), "dominance": label, "weights": weights.to_dict(),
           "reduction": reduction}
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


# schedule-check ----------------------------------------------------------------

RECOVERY_TOL = 1e-6
INVERSION_TOL = 1e-9


def schedule_check(T, kind, n_steps, seed=0, mode="ddim", size=16):
    """Closed-loop recovery and inversion checks; returns (table, errors)."""
    sched = schedule.make_schedule(T, kind)
    steps = schedule.step_pairs(T, n_steps)
    rng = np.random.default_rng(seed)
    target = rng.random((size, size))
    traj = []
    out = schedule.sample_loop(np.zeros_like(target), schedule.oracle_denoiser(target), steps,
                               seed, sched, mode=mode, trajectory=traj)
    recovery = max(float(np.abs(out - target).max()), float(np.abs(traj[-1] - target).max()))
    eps = rng.standard_normal(target.shape)
    inversion = 0.0
    for t_now in rng.integers(0, T, size=20):
        c = schedule.cal(int(t_now), -1, sched)
        noised = schedule.add_noise(target, eps, c)
        inversion = max(inversion, float(np.abs(schedule.predict_noise(noised, target, c, mode) - eps).max()))
    table = [(now, nxt, schedule.cal(now, nxt, sched)) for now, nxt in steps]
    return sched, steps, table, recovery, inversion


def cmd_schedule_check(args) -> int:
    sec = _section(args, "schedule")
    T = int(_pick(args.T, sec, "T", 1000))
    kind = _pick(args.kind, sec, "kind", "linear")
    n = int(_pick(args.steps, sec, "steps", 3))
    mode = _pick(args.mode, sec, "mode", "ddim")
    sched, steps, table, recovery, inversion = schedule_check(T, kind, n, args.seed, mode)
    print(f"{'t_now':>6} {'t_next':>6} {'alpha_t':>12} {'beta_t':>12} {'alpha_next':>12} {'beta_next':>12}")
    for now, nxt, c in table:
        print(f"{now:>6} {nxt:>6} {c.alpha_now:12.8f} {c.beta_now:12.8f} {c.alpha_next:12.8f} {c.beta_next:12.8f}")
    ok_rec = recovery <= RECOVERY_TOL
    ok_inv = inversion <= INVERSION_TOL
    print(f"{'PASS' if ok_rec else 'FAIL'} recovery ≤ 1e-6 (max error {recovery:.3e}, {len(steps)} steps)")
    print(f"{'PASS' if ok_inv else 'FAIL'} noise inversion ≤ 1e-9 (max error {inversion:.3e})")
    if args.figure:
        plotting.schedule_curves(sched, steps, args.figure)
    return 0 if ok_rec and ok_inv else 1


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="expofuse", description="Exposure-aware infrared/visible fusion toolkit")
    p.add_argument("--config", help=f"JSON config (default: ${CONFIG_ENV})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="synthesize overexposed visible frames, masks and contours")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--synth-config", help="JSON SynthesisConfig document")
    s.add_argument("--seed", type=int)
    s.add_argument("--gain-range", type=float, nargs=2, metavar=("LO", "HI"))
    s.add_argument("--threshold", type=float)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--emit-manifest", help="write a manifest describing the outputs here")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("mask", help="threshold an image and trace overexposed contours")
    s.add_argument("image")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--threshold", type=float)
    s.add_argument("--ir", help="infrared frame to draw the contours on")
    s.add_argument("--id")
    s.set_defaults(func=cmd_mask)

    s = sub.add_parser("fuse", help="fuse a pair (or a manifest) with a baseline operator")
    s.add_argument("--vi")
    s.add_argument("--ir")
    s.add_argument("--manifest")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--id")
    s.add_argument("--method", choices=baselines.METHODS)
    s.add_argument("--mask")
    s.add_argument("--feather", type=float)
    s.add_argument("--threshold", type=float)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_fuse)

    s = sub.add_parser("eval", help="EN/MI/VIF/Qabf/SSIM report for fused images")
    s.add_argument("--manifest", required=True)
    s.add_argument("--fused-dir", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--format", choices=("csv", "json"))
    s.add_argument("--vif-mode", choices=("mean", "sum"))
    s.add_argument("--no-figure", action="store_true")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("loss", help="loss breakdown and failure-mode label for one fused image")
    s.add_argument("--vi", required=True)
    s.add_argument("--ir", required=True)
    s.add_argument("--fused", required=True)
    s.add_argument("--mask", required=True)
    s.add_argument("--weights", help="comma list, e.g. gamma=2,delta=1,zeta=1,phi=1,tau=0.05")
    s.add_argument("--reduction", choices=("mean", "sum"))
    s.add_argument("--seg", type=float, default=0.0)
    s.add_argument("--diff", type=float, default=0.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_loss)

    s = sub.add_parser("schedule-check", help="coefficient table and closed-loop recovery test")
    s.add_argument("--T", type=int)
    s.add_argument("--kind", choices=[k.value for k in schedule.ScheduleKind])
    s.add_argument("--steps", type=int)
    s.add_argument("--mode", choices=("ddim", "literal"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--figure")
    s.set_defaults(func=cmd_schedule_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.config_doc = load_config(args.config)
        return args.func(args)
    except (OSError, ValueError, dataio.ImageReadError) as exc:
        print(f"expofuse {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
