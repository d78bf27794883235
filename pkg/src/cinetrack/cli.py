"""Command-line entry point: ``cinetrack {track,eval,synth,bench}``.

Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 finished but
the mean per-frame latency exceeded the budget.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, FormatError, ValidationError
from .metrics import dsc, evaluate_run
from .seqio import (MASK_PATTERN, read_mask, read_masks, read_meta, read_sequence,
                    render_overlay, write_mask)
from .synthcine import PhantomSpec, write_phantom
from .tracker import TrackerConfig, run_sequence

log = logging.getLogger("cinetrack")

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME, EXIT_BUDGET = 0, 1, 2, 3
_INPUT_ERRORS = (ConfigError, FormatError, ValidationError, FileNotFoundError,
                 NotADirectoryError, json.JSONDecodeError)

# flag name -> TrackerConfig field
_CONFIG_FLAGS = {
    "k": "k",
    "capacity": "capacity",
    "top_k": "top_k",
    "alpha": "alpha",
    "tau": "tau",
    "resolution": "resolution",
    "budget_s": "latency_budget",
    "stride": "stride",
    "temperature": "temperature",
    "pad_factor": "pad_factor",
    "connectivity": "connectivity",
}


def _add_config_flags(p):
    g = p.add_argument_group("tracker configuration (flags override --config)")
    g.add_argument("--config", type=Path, help="JSON config, or a run manifest to replay")
    g.add_argument("--k", type=int, help="memory write cadence in frames (default 5)")
    g.add_argument("--capacity", type=int, help="memory capacity in entries (default 64)")
    g.add_argument("--top-k", type=int, help="stored sites per query softmax (default 8)")
    g.add_argument("--alpha", type=float, help="EMA coefficient (default 0.5)")
    g.add_argument("--tau", type=float, help="probability threshold (default 0.5)")
    g.add_argument("--resolution", type=int, help="square working resolution (default 384)")
    g.add_argument("--budget-s", type=float, help="mean latency budget in s (default 1.0)")
    g.add_argument("--stride", type=int, help="feature stride (default 4)")
    g.add_argument("--temperature", type=float, help="softmax temperature (default sqrt(C_k))")
    g.add_argument("--pad-factor", type=float, help="ROI padding factor (default 2.0)")
    g.add_argument("--connectivity", type=int, choices=(4, 8))


def build_config(args) -> TrackerConfig:
    values = {}
    if args.config is not None:
        data = json.loads(Path(args.config).read_text())
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]  # manifest
        values.update(data)
    for flag, name in _CONFIG_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    return TrackerConfig.from_dict(values)


def _utc():
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def _print_latency(summary):
    print(f"frames            {summary.frames}")
    print(f"mean latency      {summary.mean_latency * 1e3:10.1f} ms")
    print(f"median latency    {summary.median_latency * 1e3:10.1f} ms")
    print(f"p95 latency       {summary.p95_latency * 1e3:10.1f} ms")
    print(f"max latency       {summary.max_latency * 1e3:10.1f} ms")
    print(f"budget            {summary.budget * 1e3:10.1f} ms "
          f"({summary.budget_violations} frame(s) over)")
    print(f"memory high-water {summary.memory_high_water:10d} entries")
    print(f"fallbacks         {summary.fallbacks:10d}")


# --- track ---------------------------------------------------------------

def cmd_track(args) -> int:
    try:
        config = build_config(args)
        meta, frames = read_sequence(args.input)
        mask1 = read_mask(args.first_mask, index=0)
        if mask1.shape != meta.shape:
            raise ValidationError(f"first mask {mask1.shape} != frames {meta.shape}")
        if not mask1.any():
            raise ValidationError("empty initial mask")
    except _INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT

    started = _utc()
    try:
        results, summary = run_sequence(frames, mask1, config)
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        for r in results:
            write_mask(r.mask, out / MASK_PATTERN.format(r.index))
            if args.overlays:
                render_overlay(frames[r.index], r.mask, out / f"overlay_{r.index:05d}.ppm")
    except Exception as e:  # noqa: BLE001 - any failure past input validation is a runtime error
        log.exception("tracking failed")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    latencies = [{"frame": r.index, "seconds": r.elapsed} for r in results]
    (out / "latency.json").write_text(json.dumps(latencies, indent=1) + "\n")
    manifest = {
        "tool": "cinetrack",
        "version": __version__,
        "config": config.to_dict(),
        "input": str(Path(args.input).resolve()),
        "first_mask": str(Path(args.first_mask).resolve()),
        "output": str(out.resolve()),
        "started": started,
        "finished": _utc(),
        "latencies": [r.elapsed for r in results],
        "fallback_frames": [r.index for r in results if r.fallback],
        "summary": summary.to_dict(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    _print_latency(summary)
    if not summary.within_budget:
        print(f"mean latency {summary.mean_latency:.3f} s exceeds budget {summary.budget} s",
              file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


# --- eval ----------------------------------------------------------------

def _read_latency(path, n):
    data = json.loads(Path(path).read_text())
    by_frame = {int(d["frame"]): float(d["seconds"]) for d in data}
    return [by_frame.get(i) for i in range(n)]


def cmd_eval(args) -> int:
    try:
        pred = read_masks(args.pred)
        ref = read_masks(args.ref)
        if len(pred) != len(ref):
            raise ValidationError(
                f"frame count mismatch: {len(pred)} predictions vs {len(ref)} references"
            )
        if not pred:
            raise ValidationError("no mask files found")
        spacing = args.spacing
        if spacing is None and (Path(args.ref) / "meta.json").exists():
            spacing = read_meta(args.ref).pixel_spacing
        latencies = None
        if args.latency is not None:
            if Path(args.latency).exists():
                latencies = _read_latency(args.latency, len(pred))
                if any(v is None for v in latencies):
                    raise ValidationError("latency file does not cover every frame")
            else:
                print(f"warning: latency file {args.latency} not found; "
                      "runtime columns left empty", file=sys.stderr)
        report = evaluate_run(pred, ref, latencies, spacing, args.budget_s)
    except _INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT

    report_path = Path(args.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report.write_csv(report_path)
    report.write_json(report_path.with_suffix(".json"))

    agg = report.aggregates
    print(f"{'metric':<10}{'mean':>12}{'median':>12}{'n':>6}")
    for name, unit in (("dsc", ""), ("hd95", report.unit), ("msd", report.unit)):
        a = agg[name]
        mean = "-" if a["mean"] is None else f"{a['mean']:.4f}"
        med = "-" if a["median"] is None else f"{a['median']:.4f}"
        label = f"{name} ({unit})" if unit else name
        print(f"{label:<10}{mean:>12}{med:>12}{a['n']:>6}")
    if "runtime_s" in agg:
        rt = agg["runtime_s"]
        print(f"{'runtime s':<10}{rt['mean']:>12.4f}{rt['median']:>12.4f}{rt['n']:>6}")
        print(f"budget violations: {report.budget_violations}")
    if report.invalid_surface_frames:
        print(f"frames with undefined surface metrics: {report.invalid_surface_frames}")
    return EXIT_OK


# --- synth ---------------------------------------------------------------

def _phantom_spec(args, **extra) -> PhantomSpec:
    kw = dict(size=args.size, frames=args.frames, amplitude=args.amplitude,
              period=args.period, noise_sigma=args.noise, seed=args.seed,
              deformation=args.deformation, drift=args.drift)
    if getattr(args, "semi_axes", None):
        kw["semi_axes"] = tuple(args.semi_axes)
    if getattr(args, "contrast", None) is not None:
        kw["contrast"] = args.contrast
    if getattr(args, "spacing", None) is not None:
        kw["pixel_spacing"] = args.spacing
    kw.update(extra)
    return PhantomSpec(**kw)


def cmd_synth(args) -> int:
    try:
        spec = _phantom_spec(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    write_phantom(args.out, spec)
    print(f"wrote {spec.frames} frames ({spec.shape[1]}x{spec.shape[0]}) to {args.out}")
    return EXIT_OK


# --- bench ---------------------------------------------------------------

def cmd_bench(args) -> int:
    try:
        config = build_config(args)
        if args.amplitude is None:
            args.amplitude = args.size / 16.0
        if args.noise is None:
            args.noise = 0.02 * 400.0
        spec = _phantom_spec(args)
    except _INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT

    try:
        with tempfile.TemporaryDirectory(prefix="cinetrack-bench-") as tmp:
            _, _, truth = write_phantom(tmp, spec)
            _, frames = read_sequence(tmp)
        t0 = time.perf_counter()
        results, summary = run_sequence(frames, truth[0], config)
        wall = time.perf_counter() - t0
    except Exception as e:  # noqa: BLE001
        log.exception("benchmark failed")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    scores = [dsc(r.mask, m) for r, m in zip(results[1:], truth[1:])]
    print(f"phantom {spec.shape[1]}x{spec.shape[0]}, {spec.frames} frames, "
          f"working resolution {config.resolution[0]}x{config.resolution[1]}")
    _print_latency(summary)
    print(f"wall time         {wall:10.1f} s")
    if scores:
        print(f"mean DSC (t>=1)   {float(np.mean(scores)):10.4f}")
    if args.json is not None:
        payload = summary.to_dict()
        payload.update(
            config=config.to_dict(), size=args.size, wall_s=wall,
            latencies=[r.elapsed for r in results],
            mean_dsc=float(np.mean(scores)) if scores else None,
        )
        Path(args.json).write_text(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK if summary.within_budget else EXIT_BUDGET


# --- parser --------------------------------------------------------------

def _add_phantom_flags(p, bench=False):
    p.add_argument("--size", type=int, default=256 if bench else 128)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--amplitude", type=float, default=None if bench else 0.0,
                   help="vertical motion amplitude in px")
    p.add_argument("--period", type=float, default=20.0, help="motion period in frames")
    p.add_argument("--noise", type=float, default=None if bench else 0.0,
                   help="Gaussian noise sigma (intensity units)")
    p.add_argument("--deformation", type=float, default=0.0)
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cinetrack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cinetrack {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="propagate a first-frame mask through a sequence")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--first-mask", required=True, type=Path)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--overlays", action="store_true", help="also write overlay_%%05d.ppm")
    _add_config_flags(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score predicted masks against references")
    p.add_argument("--pred", required=True, type=Path)
    p.add_argument("--ref", required=True, type=Path)
    p.add_argument("--latency", type=Path)
    p.add_argument("--report", required=True, type=Path)
    p.add_argument("--spacing", type=float, help="mm per pixel (default: ref meta.json)")
    p.add_argument("--budget-s", type=float, default=1.0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="write a synthetic phantom sequence")
    p.add_argument("--out", required=True, type=Path)
    _add_phantom_flags(p)
    p.add_argument("--semi-axes", type=float, nargs=2, metavar=("AX", "AY"))
    p.add_argument("--contrast", type=float)
    p.add_argument("--spacing", type=float, help="pixel spacing in mm for meta.json")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="time tracking on a generated phantom")
    _add_phantom_flags(p, bench=True)
    p.add_argument("--json", type=Path, help="write the timing summary here")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
