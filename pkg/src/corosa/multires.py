"""Coarse-to-fine initialization of the adaptive restoration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .admm import AdmmConfig, admm_solve
from .errors import ParameterError, SolverError
from .grid import upsample2, upsample_j
from .weights import beta_solve, d_map, tau_map

log = logging.getLogger(__name__)

__all__ = ["PyramidSchedule", "LevelRecord", "multires_init", "adaptive_weights", "warm_start_ratio"]


@dataclass(frozen=True)
class PyramidSchedule:
    """Number of levels and optional per-level solver overrides."""

    K: int = 4
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.K < 0:
            raise ParameterError("number of levels must be nonnegative")

    def config(self, base: AdmmConfig, j: int) -> AdmmConfig:
        return base.with_(**self.overrides.get(j, {}))


@dataclass
class LevelRecord:
    level: int
    shape: tuple
    J_warm: float
    J_out: float
    iters: int
    fallback: bool
    beta: np.ndarray | None = None
    tau: np.ndarray | None = None
    s: np.ndarray | None = None


def adaptive_weights(f, p, scale=1.0, tau=None):
    """Closed-form weight map for image ``f``; ``tau`` defaults to ``tau_map(f / scale)``."""
    if tau is None:
        tau = tau_map(np.asarray(f) / scale)
    return beta_solve(d_map(f, p), tau), tau


def multires_init(model, m, cfg: AdmmConfig, K=4, scale: float = 1.0, shape=None):
    """Run the multiresolution loop; returns ``(s, beta, records)``.

    Level ``K`` starts from zeros with ``beta = 0``.  Every finer level ``j``
    recomputes the weight from ``f = E^(j+1) s^(j+1)`` (with the barrier map
    taken from ``f`` itself) and warm-starts ADMM at ``upsample2(s^(j+1))``.
    With ``K = 0`` the returned weight is computed once from the output.
    """
    sched = K if isinstance(K, PyramidSchedule) else PyramidSchedule(int(K))
    shape = tuple(shape or np.shape(m))
    K = sched.K
    if shape[0] % 2**K or shape[1] % 2**K:
        raise ParameterError(f"grid {shape} is not divisible by 2**{K}")
    records = []

    def solve(s_init, beta, j, tau=None):
        c = sched.config(cfg, j)
        try:
            s, info = admm_solve(s_init, beta, model, m, j, c, full_output=True)
        except SolverError as exc:
            exc.diagnostics["level"] = j
            raise SolverError(f"level {j}: {exc}", exc.diagnostics) from exc
        records.append(LevelRecord(j, s.shape, info["J_init"], info["J_out"], info["iters"],
                                   info["fallback"], beta, tau, s))
        log.info("level %d: %d ADMM iterations, J %.6g -> %.6g", j, info["iters"],
                 info["J_init"], info["J_out"])
        return s

    coarse = (shape[0] // 2**K, shape[1] // 2**K)
    s = solve(np.zeros(coarse), np.zeros(shape), K)
    beta = None
    for j in range(K - 1, -1, -1):
        f = upsample_j(s, j + 1)
        beta, tau = adaptive_weights(f, cfg.p, scale)
        s = solve(upsample2(s), beta, j, tau)
    if beta is None:
        beta, _ = adaptive_weights(s, cfg.p, scale)
    return s, beta, records


def warm_start_ratio(record: LevelRecord) -> float:
    """J at the warm start over J at the level solution (quality proxy)."""
    return record.J_warm / record.J_out if record.J_out > 0 else np.inf

