"""Method presets and the end-to-end restoration pipeline."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .admm import AdmmConfig, admm_solve
from .bcd import BcdTrace, bcd_solve, check_null_space
from .errors import ParameterError
from .grid import grad, hess
from .models import Convolution, FourierMask, zero_filled
from .multires import PyramidSchedule, multires_init
from .prox import schatten_norm

__all__ = ["PRESETS", "SolverConfig", "RestoreResult", "restore", "default_box_bound",
           "baseline_estimate", "constant_beta"]

PRESETS = ("tv1", "tv2", "hs", "cotv", "cohs", "corosa-i", "corosa")


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 0.05
    gamma: float = 10.0
    p: int = 1
    u: float | None = None
    K: int = 4
    admm_iters: int = 100
    cg_max_iters: int = 50
    cg_rel_tol: float = 1e-5
    primal_tol: float = 1e-4
    bcd_cycles: int = 10
    bcd_tol: float = 1e-5
    intensity_scale: float = 1.0
    precond: str = "matched"

    def admm(self, u: float, p: int | None = None) -> AdmmConfig:
        return AdmmConfig(lam=self.lam, gamma=self.gamma, p=self.p if p is None else p, u=u,
                          max_iters=self.admm_iters, cg_max_iters=self.cg_max_iters,
                          cg_rel_tol=self.cg_rel_tol, primal_tol=self.primal_tol,
                          precond=self.precond)

    def as_dict(self):
        return asdict(self)


@dataclass
class RestoreResult:
    image: np.ndarray
    beta: np.ndarray | None
    trace: BcdTrace = field(default_factory=BcdTrace)
    levels: list = field(default_factory=list)
    params: dict = field(default_factory=dict)


def baseline_estimate(model, m) -> np.ndarray:
    """Measurement-domain estimate: the blurred image or the zero-filled inverse."""
    if isinstance(model, FourierMask):
        return zero_filled(m)
    return np.asarray(m, dtype=float)


def default_box_bound(model, m) -> float:
    peak = float(np.max(baseline_estimate(model, m)))
    return 1.2 * peak if peak > 0 else 1.0


def constant_beta(f, p, grid=np.round(np.arange(0.1, 0.91, 0.1), 10)) -> float:
    """Constant weight with the lowest combined regularization cost on ``f``."""
    g = grad(f)
    r1 = float(np.sum(np.sqrt(g[0] ** 2 + g[1] ** 2)))
    r2 = float(np.sum(schatten_norm(hess(f), p)))
    costs = [b * r1 + (1 - b) * r2 for b in grid]
    return float(grid[int(np.argmin(costs))])


def _pad_to(m, mult):
    rows, cols = m.shape
    pr, pc = (-rows) % mult, (-cols) % mult
    if pr == 0 and pc == 0:
        return m
    return np.pad(m, ((0, pr), (0, pc)), mode="edge")


def restore(m, model, preset: str, cfg: SolverConfig) -> RestoreResult:
    """Restore an image from measurement ``m`` with one of :data:`PRESETS`.

    Convolution measurements are edge-padded to a multiple of ``2**K`` for
    the multiresolution presets and the result is cropped back.  Fourier
    measurements must already have compatible dimensions.
    """
    if preset not in PRESETS:
        raise ParameterError(f"unknown preset {preset!r}; choose from {PRESETS}")
    p = {"tv2": 2, "hs": 1, "cotv": 2, "cohs": 1}.get(preset, cfg.p)
    u = cfg.u if cfg.u is not None else default_box_bound(model, m)
    acfg = cfg.admm(u, p)
    params = {"preset": preset, "p": p, "u": u, **{k: v for k, v in cfg.as_dict().items()
                                                   if k not in ("p", "u")}}
    orig_shape = np.shape(m) if not isinstance(model, FourierMask) else model.mask.shape
    if isinstance(model, Convolution) and preset in ("corosa-i", "corosa"):
        m = _pad_to(np.asarray(m, dtype=float), 2**cfg.K)
    shape = np.shape(m) if not isinstance(model, FourierMask) else model.mask.shape
    check_null_space(model, cfg.lam, shape)

    trace, levels = BcdTrace(), []
    if preset in ("tv1", "tv2", "hs"):
        beta = np.full(shape, 1.0 if preset == "tv1" else 0.0)
        s = admm_solve(np.zeros(shape), beta, model, m, 0, acfg)
        out_beta = None
    elif preset in ("cotv", "cohs"):
        b = constant_beta(baseline_estimate(model, m), p)
        params["beta_const"] = b
        beta = np.full(shape, b)
        s = admm_solve(np.zeros(shape), beta, model, m, 0, acfg)
        out_beta = beta
    else:
        s, out_beta, levels = multires_init(model, m, acfg, PyramidSchedule(cfg.K),
                                            cfg.intensity_scale, shape)
        if preset == "corosa":
            s, out_beta, trace = bcd_solve(s, model, m, acfg, cfg.bcd_cycles, cfg.bcd_tol,
                                           cfg.intensity_scale)
    rows, cols = orig_shape
    s = s[:rows, :cols]
    if out_beta is not None:
        out_beta = out_beta[:rows, :cols]
    return RestoreResult(s, out_beta, trace, levels, params)
