"""Command-line surface for reproducible runs.

Subcommands: lattice, schedule, generate, render, degrade, eval,
distortion-curve. Exit codes: 0 on success, 1 on a domain error (bad values,
unreadable files, backend failures), 2 on usage errors. The remote denoiser
endpoint comes from --endpoint or the PANOSPHERE_ENDPOINT environment
variable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from .config import PipelineConfig, PromptSet, load_config, with_overrides
from .erp import (
    EVAL_VIEW_ANGLES,
    EVAL_VIEW_FOV_DEG,
    compose_erp,
    erp_to_perspective,
    load_png,
    load_raster,
    mock_decode,
    save_png,
    save_raster,
)
from .evalkit import (
    band_curvature,
    continuity_report,
    degrade_discontinuity,
    degrade_distortion,
    end_continuity_error,
    format_report,
    lattice_uniformity_report,
)
from .fusion import generate_view_schedule, run_pipeline
from .geometry import CameraModel, distortion_ratio, fibonacci_lattice
from .wire import WireError, make_denoiser


def _schedule_lines(cfg: PipelineConfig) -> list[str]:
    lines = []
    for view in generate_view_schedule(cfg):
        kernel = "beta" if view.is_foreground else "exponential"
        lines.append(
            f"azimuth={view.camera.azimuth_deg:.3f} "
            f"elevation={view.camera.elevation_deg:.3f} "
            f"fov={view.camera.fov_deg:.3f} "
            f"kernel={kernel} prompt={view.prompt_slot}"
        )
    return lines


def _load_cfg(args) -> tuple[PipelineConfig, PromptSet]:
    if getattr(args, "config", None):
        cfg, prompts = load_config(args.config)
    else:
        cfg, prompts = PipelineConfig(), PromptSet()
    cfg = with_overrides(
        cfg,
        lattice_size=getattr(args, "n", None),
        channels=getattr(args, "channels", None),
        total_steps=getattr(args, "steps", None),
        fov_deg=getattr(args, "fov", None),
        seed=getattr(args, "seed", None),
        erp_height=getattr(args, "height", None),
        tau=getattr(args, "tau", None),
    )
    return cfg, prompts


def _denoiser_spec(args, fallback: str | None = None) -> str:
    """Resolve the backend spec; --denoiser wins over a manifest's record."""
    spec = args.denoiser or fallback or "scheduler"
    if spec == "remote":
        endpoint = args.endpoint or os.environ.get("PANOSPHERE_ENDPOINT")
        if not endpoint:
            raise ValueError(
                "remote denoiser needs --endpoint or PANOSPHERE_ENDPOINT"
            )
        spec = f"remote:{endpoint}"
    return spec


def _load_image(path: str) -> np.ndarray:
    if path.endswith(".png"):
        return load_png(path)
    return load_raster(path)


def _save_image(path: str, raster: np.ndarray):
    if path.endswith(".png"):
        save_png(path, raster)
    else:
        save_raster(path, raster)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def cmd_lattice(args) -> int:
    dirs = fibonacci_lattice(args.n)
    report = lattice_uniformity_report(dirs, cap_deg=args.cap_deg)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for d in dirs:
                fh.write(f"{d[0]:.17g} {d[1]:.17g} {d[2]:.17g}\n")
    sys.stdout.write(format_report(report))
    return 0


def cmd_schedule(args) -> int:
    cfg, _ = _load_cfg(args)
    for line in _schedule_lines(cfg):
        print(line)
    return 0


def cmd_generate(args) -> int:
    if args.from_manifest:
        manifest = json.loads(Path(args.from_manifest).read_text())
        cfg, prompts = config_mod.config_from_dict(manifest["config"])
        spec = _denoiser_spec(args, fallback=manifest.get("denoiser"))
    else:
        cfg, prompts = _load_cfg(args)
        spec = _denoiser_spec(args)
    handle = make_denoiser(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    result = run_pipeline(cfg, prompts, handle)
    erp, holes = compose_erp(
        result.latents, result.views, mock_decode, cfg.erp_height
    )
    png_path = out_dir / "erp.png"
    raw_path = out_dir / "erp.raw"
    save_png(png_path, erp)
    save_raster(raw_path, erp)

    schedule_digest = hashlib.sha256(
        "\n".join(_schedule_lines(cfg)).encode()
    ).hexdigest()
    manifest = {
        "config": config_mod.config_to_dict(cfg, prompts),
        "denoiser": spec,
        "seed": cfg.seed,
        "schedule_digest": schedule_digest,
        "coverage": [
            {"step": i + 1, "covered": st.covered, "uncovered": st.uncovered}
            for i, st in enumerate(result.coverage)
        ],
        "erp_holes": holes,
        "outputs": {
            "erp.png": _sha256(png_path),
            "erp.raw": _sha256(raw_path),
        },
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {png_path}, {raw_path}, {manifest_path}")
    return 0


def cmd_render(args) -> int:
    erp = _load_image(args.erp)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.eval_views:
        cameras = [
            (f"view_az{int(az):03d}_el{int(el):+03d}",
             CameraModel.from_angles(az, el, EVAL_VIEW_FOV_DEG))
            for az, el in EVAL_VIEW_ANGLES
        ]
    else:
        cameras = [
            (f"view_az{int(args.azimuth):03d}_el{int(args.elevation):+03d}",
             CameraModel.from_angles(args.azimuth, args.elevation, args.fov))
        ]
    for name, cam in cameras:
        raster = erp_to_perspective(erp, cam, args.size, args.size)
        _save_image(str(out_dir / f"{name}.png"), raster)
    print(f"wrote {len(cameras)} view(s) to {out_dir}")
    return 0


def cmd_degrade(args) -> int:
    img = _load_image(args.infile)
    if args.kind == "discontinuity":
        out = degrade_discontinuity(img, int(args.level))
    else:
        out = degrade_distortion(img, float(args.level), size=args.size)
    _save_image(args.out, out)
    print(f"wrote {args.out}")
    return 0


def cmd_eval(args) -> int:
    for path in args.files:
        img = _load_image(path)
        record: dict = {"file": path}
        if args.metric == "continuity":
            record.update(continuity_report(img))
            record["end_continuity_error"] = end_continuity_error(img)
        else:
            record["band_curvature"] = band_curvature(img)
        sys.stdout.write(format_report(record))
    return 0


def cmd_distortion_curve(args) -> int:
    degrees = np.arange(0.0, args.max_deg + 1e-9, args.step_deg)
    ratios = distortion_ratio(np.radians(degrees))
    print("theta_deg ratio")
    for theta, ratio in zip(degrees, np.atleast_1d(ratios)):
        print(f"{theta:9.3f} {ratio:.12f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="panosphere",
        description="Spherical-latent panorama pipeline tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", help="emit lattice directions and uniformity stats")
    p.add_argument("--n", type=int, default=2600)
    p.add_argument("--cap-deg", type=float, default=40.0)
    p.add_argument("--out", help="write directions as 'x y z' lines")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("schedule", help="emit the view schedule, one line per view")
    p.add_argument("--config")
    p.add_argument("--fov", type=float)
    p.add_argument("--tau", type=float)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("generate", help="run the pipeline and write an ERP image")
    p.add_argument("--config")
    p.add_argument("--from-manifest", help="re-run from a previous manifest")
    p.add_argument("--denoiser",
                   help="identity|constant[:v]|analytic|scheduler|remote[:host:port]"
                        " (default scheduler, or the manifest's record)")
    p.add_argument("--endpoint", help="remote denoiser host:port")
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--fov", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--height", type=int, help="ERP height in pixels")
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("render", help="render perspective views from an ERP image")
    p.add_argument("--erp", required=True, help="input .png or .raw")
    p.add_argument("--eval-views", action="store_true",
                   help="render the standard 14-view evaluation set")
    p.add_argument("--azimuth", type=float, default=0.0)
    p.add_argument("--elevation", type=float, default=0.0)
    p.add_argument("--fov", type=float, default=90.0)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--out-dir", default="views")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("degrade", help="apply a synthetic degradation")
    p.add_argument("--kind", choices=("discontinuity", "distortion"), required=True)
    p.add_argument("--level", type=float, required=True,
                   help="pixels for discontinuity, degrees for distortion")
    p.add_argument("--size", type=int, default=512, help="render size (distortion)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("eval", help="compute metrics over image files")
    p.add_argument("--metric", choices=("continuity", "curvature"),
                   default="continuity")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("distortion-curve", help="print the tan(theta)/theta table")
    p.add_argument("--max-deg", type=float, default=60.0)
    p.add_argument("--step-deg", type=float, default=5.0)
    p.set_defaults(func=cmd_distortion_curve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, WireError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
