"""INI run configuration with a fixed, documented schema.

Sections and keys (defaults in brackets)::

    [model]   kind = convolution | fourier        (required)
              psf_sigma [2.0]  psf_radius [8]
              mask_kind [spiral-with-center-fill]  mask_density [0.1]
    [noise]   gamma_p [10]  sigma_eta [1]  target_psnr_db [20]
    [solver]  lambda [0.05]  gamma [10]  p [1]  u [auto]  K [4]
              admm_iters [100]  cg_max_iters [50]  cg_rel_tol [1e-5]
              primal_tol [1e-4]  bcd_cycles [10]  bcd_tol [1e-5]
              intensity_scale [1]  precond [matched]
    [method]  preset [corosa]
    [io]      ground_truth  measurement  mask  estimate  scores
              image_name  out [out]  seed [0]

Relative paths are resolved against the directory of the config file.
``ground_truth`` may also be ``phantom:<n>`` for the built-in test image.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .restore import PRESETS, SolverConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "SCHEMA"]


class ConfigError(ValueError):
    """A config key is missing or invalid; ``key`` names it as ``section.key``."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


_REQ = object()

SCHEMA = {
    "model": {"kind": (str, _REQ), "psf_sigma": (float, 2.0), "psf_radius": (int, 8),
              "mask_kind": (str, "spiral-with-center-fill"), "mask_density": (float, 0.1)},
    "noise": {"gamma_p": (float, 10.0), "sigma_eta": (float, 1.0), "target_psnr_db": (float, 20.0)},
    "solver": {"lambda": (float, 0.05), "gamma": (float, 10.0), "p": (int, 1), "u": (float, None),
               "K": (int, 4), "admm_iters": (int, 100), "cg_max_iters": (int, 50),
               "cg_rel_tol": (float, 1e-5), "primal_tol": (float, 1e-4),
               "bcd_cycles": (int, 10), "bcd_tol": (float, 1e-5),
               "intensity_scale": (float, 1.0), "precond": (str, "matched")},
    "method": {"preset": (str, "corosa")},
    "io": {"ground_truth": (str, None), "measurement": (str, None), "mask": (str, None),
           "estimate": (str, None), "scores": (str, None), "image_name": (str, None),
           "out": (str, "out"), "seed": (int, 0)},
}

_CHOICES = {
    ("model", "kind"): ("convolution", "fourier"),
    ("model", "mask_kind"): ("spiral-with-center-fill", "variable-density-random"),
    ("solver", "p"): (1, 2),
    ("solver", "precond"): ("matched", "unweighted", "none"),
    ("method", "preset"): PRESETS,
}


@dataclass
class RunConfig:
    values: dict
    base_dir: Path = field(default_factory=Path.cwd)

    def get(self, section, key):
        return self.values[section][key]

    def path(self, key, default=None) -> Path | None:
        raw = self.values["io"][key]
        if raw is None:
            return default
        p = Path(raw)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def out_dir(self) -> Path:
        return self.path("out")

    def solver(self, lam=None) -> SolverConfig:
        s = self.values["solver"]
        kw = {k: v for k, v in s.items() if k != "lambda"}
        return SolverConfig(lam=s["lambda"] if lam is None else lam, **kw)

    def flat(self) -> dict:
        return {f"{sec}.{k}": v for sec, kv in self.values.items() for k, v in kv.items()}


def _convert(key, typ, raw):
    try:
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(key, f"expected {typ.__name__}, got {raw!r}") from exc


def _validate(v):
    checks = [
        ("model.psf_sigma", v["model"]["psf_sigma"] > 0, "must be positive"),
        ("model.psf_radius", v["model"]["psf_radius"] >= 0, "must be nonnegative"),
        ("model.mask_density", 0 < v["model"]["mask_density"] <= 1, "must lie in (0, 1]"),
        ("noise.gamma_p", v["noise"]["gamma_p"] > 0, "must be positive"),
        ("noise.sigma_eta", v["noise"]["sigma_eta"] >= 0, "must be nonnegative"),
        ("solver.lambda", v["solver"]["lambda"] >= 0, "must be nonnegative"),
        ("solver.gamma", v["solver"]["gamma"] > 0, "must be positive"),
        ("solver.u", v["solver"]["u"] is None or v["solver"]["u"] > 0, "must be positive"),
        ("solver.K", v["solver"]["K"] >= 0, "must be nonnegative"),
        ("solver.admm_iters", v["solver"]["admm_iters"] >= 0, "must be nonnegative"),
        ("solver.cg_max_iters", v["solver"]["cg_max_iters"] >= 1, "must be positive"),
        ("solver.bcd_cycles", v["solver"]["bcd_cycles"] >= 0, "must be nonnegative"),
        ("solver.intensity_scale", v["solver"]["intensity_scale"] > 0, "must be positive"),
    ]
    for key, ok, msg in checks:
        if not ok:
            raise ConfigError(key, msg)


def load_config(path, seed=None, out=None) -> RunConfig:
    """Parse and validate ``path``; ``seed`` and ``out`` override ``[io]``."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError("config", str(exc).splitlines()[0]) from exc

    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(sec, "unknown section")
        for key in parser[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{sec}.{key}", "unknown key")

    values = {}
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (typ, default) in keys.items():
            name = f"{sec}.{key}"
            raw = parser.get(sec, key, fallback=None) if parser.has_section(sec) else None
            if raw is None or raw.strip() == "":
                if default is _REQ:
                    raise ConfigError(name, "missing required key")
                val = default
            else:
                val = _convert(name, typ, raw.strip())
            if (sec, key) in _CHOICES and val not in _CHOICES[(sec, key)]:
                raise ConfigError(name, f"must be one of {_CHOICES[(sec, key)]}, got {val!r}")
            values[sec][key] = val
    if seed is not None:
        values["io"]["seed"] = int(seed)
    _validate(values)
    cfg = RunConfig(values, path.resolve().parent)
    if out is not None:
        values["io"]["out"] = str(Path(out).resolve())
    return cfg
