"""Command line entry points: ``corosa simulate|restore|evaluate``.

Exit codes: 0 on success, 2 for configuration or input errors, 3 when a
solver fails.  Outputs are deterministic given the config and seed; wall
time goes to a separate ``timing.json`` so that every other file is
byte-reproducible.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig, load_config
from .errors import ParameterError, SolverError
from .metrics import snr_db, ssim
from .models import (
    CalibratedComplexGaussian, Convolution, FourierMask, MixedPoissonGaussian,
    make_gaussian_psf, make_mask, mri_simulate, tirf_simulate,
)
from .phantom import mixed_phantom
from .restore import restore

log = logging.getLogger("corosa")

__all__ = ["main", "cmd_simulate", "cmd_restore", "cmd_evaluate", "SCORE_COLUMNS"]

SCORE_COLUMNS = ("image", "method", "lambda", "gamma", "p", "K", "ssim", "snr_db", "seconds")
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest_config(cfg: RunConfig) -> dict:
    # the output directory is where the manifest lives; leave it out so
    # reruns into different directories stay identical
    return {k: v for k, v in cfg.flat().items() if k != "io.out"}


def _load_truth(cfg: RunConfig):
    raw = cfg.get("io", "ground_truth")
    if raw is None:
        raise ConfigError("io.ground_truth", "missing required key")
    if raw.startswith("phantom:"):
        try:
            n = int(raw.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError("io.ground_truth", f"bad phantom size in {raw!r}") from exc
        return mixed_phantom(n)[0]
    path = cfg.path("ground_truth")
    if not path.exists():
        raise ConfigError("io.ground_truth", f"{path} does not exist")
    img = io.read_image(path)
    if np.iscomplexobj(img):
        raise ConfigError("io.ground_truth", "ground truth must be real")
    return img


def _image_name(cfg: RunConfig) -> str:
    if cfg.get("io", "image_name"):
        return cfg.get("io", "image_name")
    gt = cfg.get("io", "ground_truth") or "image"
    return gt if gt.startswith("phantom:") else Path(gt).stem


def _measurement_path(cfg: RunConfig) -> Path:
    ext = "f64" if cfg.get("model", "kind") == "convolution" else "c64"
    return cfg.path("measurement", cfg.out_dir / f"measurement.{ext}")


def _mask_path(cfg: RunConfig) -> Path:
    return cfg.path("mask", cfg.out_dir / "mask.pgm")


# --------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> dict:
    """Write the noisy measurement (and mask for Fourier sampling) plus a manifest."""
    truth = _load_truth(cfg)
    seed = cfg.get("io", "seed")
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    if cfg.get("model", "kind") == "convolution":
        psf = make_gaussian_psf(cfg.get("model", "psf_sigma"), cfg.get("model", "psf_radius"))
        noise = MixedPoissonGaussian(cfg.get("noise", "gamma_p"), cfg.get("noise", "sigma_eta"))
        m = tirf_simulate(truth, psf, noise, seed)
    else:
        mask = make_mask(cfg.get("model", "mask_kind"), truth.shape,
                         cfg.get("model", "mask_density"), seed)
        m = mri_simulate(truth, mask, CalibratedComplexGaussian(cfg.get("noise", "target_psnr_db")),
                         seed)
        files["mask"] = io.write_mask_pgm(_mask_path(cfg), mask).name
    files["measurement"] = io.write_raw(_measurement_path(cfg), m).name
    manifest = {"command": "simulate", "config": _manifest_config(cfg), "seed": seed,
                "shape": list(truth.shape), "files": files}
    _write_json(out / "simulate_manifest.json", manifest)
    return manifest


def _build_model(cfg: RunConfig, shape):
    if cfg.get("model", "kind") == "convolution":
        return Convolution(make_gaussian_psf(cfg.get("model", "psf_sigma"),
                                             cfg.get("model", "psf_radius")))
    path = _mask_path(cfg)
    if not path.exists():
        raise ConfigError("io.mask", f"{path} does not exist")
    mask = io.read_mask(path)
    if mask.shape != tuple(shape):
        raise ConfigError("io.mask", f"mask {mask.shape} does not match measurement {shape}")
    return FourierMask(mask)


def _load_measurement(cfg: RunConfig):
    path = _measurement_path(cfg)
    if not path.exists():
        raise ConfigError("io.measurement", f"{path} does not exist")
    m = io.read_raw(path)
    if cfg.get("model", "kind") == "convolution":
        if np.iscomplexobj(m):
            raise ConfigError("io.measurement", "convolution data must be real")
        # photon counts back to unit intensity
        m = m / cfg.get("noise", "gamma_p")
    return m


def _score_row(name, preset, solver, truth, est, seconds):
    return {"image": name, "method": preset, "lambda": repr(solver["lambda"]),
            "gamma": repr(solver["gamma"]), "p": solver["p"], "K": solver["K"],
            "ssim": repr(ssim(truth, est)), "snr_db": repr(snr_db(truth, est)),
            "seconds": "" if seconds is None else f"{seconds:.3f}"}


def cmd_restore(cfg: RunConfig, lambda_grid=None) -> dict:
    """Restore the measurement with the configured preset.

    With ``lambda_grid`` every value is solved, scored against the ground
    truth and recorded in ``sweep.csv``; the best-SSIM run is written out.
    """
    m = _load_measurement(cfg)
    model = _build_model(cfg, m.shape)
    preset = cfg.get("method", "preset")
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    sweep = []
    if lambda_grid:
        truth = _load_truth(cfg)
        best = None
        for lam in lambda_grid:
            t = time.perf_counter()
            res = restore(m, model, preset, cfg.solver(lam))
            if res.image.shape != truth.shape:
                raise ConfigError("io.ground_truth", "shape differs from the restoration")
            row = _score_row(_image_name(cfg), preset, {**cfg.values["solver"], "lambda": lam},
                             truth, res.image, None)
            sweep.append(row)
            log.info("lambda %g: ssim %s (%.1f s)", lam, row["ssim"], time.perf_counter() - t)
            if best is None or float(row["ssim"]) > float(best[1]["ssim"]):
                best = (res, row, lam)
        res, _, lam = best
        with open(out / "sweep.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, SCORE_COLUMNS, lineterminator="\n")
            w.writeheader()
            w.writerows(sweep)
    else:
        lam = cfg.get("solver", "lambda")
        res = restore(m, model, preset, cfg.solver())

    files = {"image": io.write_raw(out / "restored.f64", res.image).name,
             "preview": io.write_png(out / "restored.png", res.image).name}
    if res.beta is not None:
        files["beta"] = io.write_raw(out / "beta.f64", res.beta).name
    res.trace.to_csv(out / "trace.csv")
    files["trace"] = "trace.csv"
    if sweep:
        files["sweep"] = "sweep.csv"
    params = {k: v for k, v in res.params.items()}
    manifest = {"command": "restore", "config": _manifest_config(cfg),
                "lambda": lam, "lambda_grid": list(lambda_grid or []),
                "params": params, "files": files,
                "bcd": {"converged": res.trace.converged, "warnings": res.trace.warnings},
                "levels": [{"level": r.level, "J_warm": r.J_warm, "J_out": r.J_out,
                            "iters": r.iters, "fallback": r.fallback} for r in res.levels]}
    _write_json(out / "manifest.json", manifest)
    _write_json(out / "timing.json", {"seconds": time.perf_counter() - t0})
    return manifest


def cmd_evaluate(cfg: RunConfig) -> dict:
    """Append an SSIM/SNR row for the estimate against the ground truth."""
    truth = _load_truth(cfg)
    est_path = cfg.path("estimate", cfg.out_dir / "restored.f64")
    if not est_path.exists():
        raise ConfigError("io.estimate", f"{est_path} does not exist")
    est = io.read_image(est_path)
    if est.shape != truth.shape:
        raise ConfigError("io.estimate", f"estimate {est.shape} does not match reference {truth.shape}")
    solver = dict(cfg.values["solver"])
    preset = cfg.get("method", "preset")
    seconds = None
    man = est_path.parent / "manifest.json"
    if man.exists():
        with open(man) as fh:
            info = json.load(fh)
        preset = info["params"].get("preset", preset)
        solver.update({"lambda": info["lambda"], "gamma": info["params"]["gamma"],
                       "p": info["params"]["p"], "K": info["params"]["K"]})
    timing = est_path.parent / "timing.json"
    if timing.exists():
        with open(timing) as fh:
            seconds = json.load(fh)["seconds"]
    row = _score_row(_image_name(cfg), preset, solver, truth, est, seconds)
    scores = cfg.path("scores", cfg.out_dir / "scores.csv")
    scores.parent.mkdir(parents=True, exist_ok=True)
    new = not scores.exists() or scores.stat().st_size == 0
    with open(scores, "a", newline="") as fh:
        w = csv.DictWriter(fh, SCORE_COLUMNS, lineterminator="\n")
        if new:
            w.writeheader()
        w.writerow(row)
    return row


# --------------------------------------------------------------------------

def _parse_grid(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad lambda grid {text!r}") from exc
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("lambda grid needs nonnegative values")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="corosa", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=("simulate", "restore", "evaluate"))
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--seed", type=int, help="override io.seed")
    ap.add_argument("--lambda-grid", type=_parse_grid, help="comma-separated lambda sweep")
    ap.add_argument("--out", help="override io.out")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed, out=args.out)
        if args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "restore":
            cmd_restore(cfg, args.lambda_grid)
        else:
            row = cmd_evaluate(cfg)
            print(",".join(str(row[c]) for c in SCORE_COLUMNS))
    except (ConfigError, ParameterError) as exc:
        print(f"corosa: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"corosa: solver failed: {exc}", file=sys.stderr)
        for k, v in sorted(exc.diagnostics.items()):
            if k == "residuals":
                v = v[-5:]
            print(f"  {k}: {v}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
