"""ADMM solver for the fixed-weight restoration subproblem.

For a weight map ``beta`` and level ``j`` the solver minimizes over the coarse
image ``s`` (fine image ``q = E^(j) s``)

    ||H q - m||^2 + lam * sum beta |grad q| + lam * sum (1-beta) ||eig(hess q)||_p
    + indicator(0 <= q <= u)

by splitting ``d_f = beta grad q``, ``d_s = (1-beta) hess q``, ``d_0 = q``.
The Hessian split is measured in the Frobenius metric (weight 2 on the mixed
derivative) so the ``d_s`` prox is exact.  The ``s`` update solves the normal
equations with preconditioned CG; the preconditioner is the circulant
approximation of the system obtained by dropping the pixelwise weights.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParameterError, SolverError
from .grid import (
    DX, DXX, DXY, DY, DYY, grad, grad_adjoint, hess, hess_adjoint,
    interp_kernel, kernel_spectrum, upsample_j, upsample_j_adjoint,
)
from .models import Convolution, FourierMask
from .prox import HESS_METRIC, box_project, hs_prox, schatten_norm, vec_soft_threshold

log = logging.getLogger(__name__)

__all__ = [
    "AdmmConfig",
    "SplitState",
    "weighted_grad",
    "weighted_grad_adjoint",
    "weighted_hess",
    "weighted_hess_adjoint",
    "precond_spectrum",
    "precond_apply",
    "pcg",
    "SUpdateSystem",
    "s_update_cg",
    "objective_terms",
    "objective_eval",
    "admm_solve",
    "primal_residual",
]

_W = HESS_METRIC[:, None, None]


@dataclass(frozen=True)
class AdmmConfig:
    lam: float
    gamma: float = 10.0
    p: int = 1
    u: float = 1.0
    max_iters: int = 100
    cg_max_iters: int = 50
    cg_rel_tol: float = 1e-5
    primal_tol: float = 1e-4
    precond: str = "matched"   # "matched" | "unweighted" | "none"

    def __post_init__(self):
        if self.lam < 0 or self.gamma <= 0 or self.u <= 0:
            raise ParameterError("lam must be >= 0; gamma and u must be positive")
        if self.p not in (1, 2):
            raise ParameterError(f"p must be 1 or 2, got {self.p}")
        if self.max_iters < 0 or self.cg_max_iters < 1:
            raise ParameterError("iteration budgets must be positive")
        if self.precond not in ("matched", "unweighted", "none"):
            raise ParameterError(f"unknown preconditioner {self.precond!r}")

    def with_(self, **kw) -> "AdmmConfig":
        return replace(self, **kw)


@dataclass
class SplitState:
    s: np.ndarray
    d_f: np.ndarray
    d_s: np.ndarray
    d_0: np.ndarray
    w_f: np.ndarray
    w_s: np.ndarray
    w_0: np.ndarray


def _check_beta(q, beta):
    if np.shape(beta) != np.shape(q):
        raise ParameterError(f"weight map {np.shape(beta)} does not match image {np.shape(q)}")


def weighted_grad(q, beta):
    _check_beta(q, beta)
    return beta * grad(q)


def weighted_grad_adjoint(v, beta):
    return grad_adjoint(beta * v)


def weighted_hess(q, beta):
    _check_beta(q, beta)
    return (1.0 - beta) * hess(q)


def weighted_hess_adjoint(v, beta):
    return hess_adjoint((1.0 - beta) * v)


# --------------------------------------------------------------------------
# preconditioner

def precond_spectrum(coarse_shape, j: int, identity: float = 1.0, first: float = 1.0,
                     second: float = 1.0, data=None) -> np.ndarray:
    """Eigenvalues (DFT order) of the circulant coarse-grid operator

        E^T (identity I + first Df^T Df + second Ds^T W Ds + data) E.

    ``data`` is an optional fine-grid spectrum of an extra circulant term.
    The defaults give the unweighted approximation of the s-update matrix.
    """
    scale = 2**j
    fine = (coarse_shape[0] * scale, coarse_shape[1] * scale)
    spec = identity + first * (np.abs(kernel_spectrum(DX, fine)) ** 2
                               + np.abs(kernel_spectrum(DY, fine)) ** 2)
    spec = spec + second * (np.abs(kernel_spectrum(DXX, fine)) ** 2
                            + np.abs(kernel_spectrum(DYY, fine)) ** 2
                            + 2.0 * np.abs(kernel_spectrum(DXY, fine)) ** 2)
    if data is not None:
        spec = spec + data
    if j == 0:
        return spec.real
    spec = spec * np.abs(kernel_spectrum(interp_kernel(j), fine)) ** 2
    kernel = np.fft.ifft2(spec).real[::scale, ::scale]
    return np.fft.fft2(kernel).real


def precond_apply(x, j: int = 0, spectrum=None) -> np.ndarray:
    """Apply the inverse of the circulant preconditioner to ``x``."""
    x = np.asarray(x, dtype=float)
    if spectrum is None:
        spectrum = precond_spectrum(x.shape, j)
    return np.fft.ifft2(np.fft.fft2(x) / (np.abs(spectrum) + 1e-12)).real


# --------------------------------------------------------------------------
# conjugate gradient

def pcg(apply_A, b, x0=None, precond=None, max_iters=50, rel_tol=1e-6, stall_window=10,
        callback=None):
    """Preconditioned conjugate gradient for symmetric positive definite ``A``.

    Returns ``(x, info)`` where ``info`` holds the iteration count and the
    residual-norm history.  Raises :class:`SolverError` when the residual
    grows for ``stall_window`` consecutive iterations.  ``callback(it, x)``
    runs after every iteration; returning True stops the loop.
    """
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_A(x)
    bnorm = np.linalg.norm(b)
    history = [float(np.linalg.norm(r))]
    info = {"iters": 0, "residuals": history, "converged": False}
    if bnorm == 0:
        info["converged"] = True
        return np.zeros_like(b), info
    if history[0] <= rel_tol * bnorm:
        info["converged"] = True
        return x, info
    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = float(np.vdot(r, z))
    growth = 0
    for it in range(1, max_iters + 1):
        Ap = apply_A(p)
        pAp = float(np.vdot(p, Ap))
        if pAp <= 0:
            raise SolverError("CG met a non-positive curvature direction",
                              {"iter": it, "pAp": pAp, "residuals": history})
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rn = float(np.linalg.norm(r))
        growth = growth + 1 if rn > history[-1] else 0
        history.append(rn)
        info["iters"] = it
        if growth >= stall_window:
            raise SolverError("CG residual grew for %d consecutive iterations" % stall_window,
                              {"iter": it, "residuals": history})
        if rn <= rel_tol * bnorm:
            info["converged"] = True
            break
        if callback is not None and callback(it, x):
            break
        z = precond(r) if precond is not None else r
        rz_new = float(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, info


@dataclass
class SUpdateSystem:
    """Normal equations of the s update at level ``j``.

    ``A = 2 E^T H^T H E + gamma E^T (Df'^T Df' + Ds'^T W Ds' + I) E``.
    """

    model: object
    beta: np.ndarray
    j: int
    gamma: float
    first: bool = True
    second: bool = True
    _spectrum: dict = field(default_factory=dict, repr=False)

    def E(self, s):
        return upsample_j(s, self.j)

    def Et(self, q):
        return upsample_j_adjoint(q, self.j)

    def fine_normal(self, q):
        out = 2.0 * self.model.adjoint(self.model.forward(q))
        reg = q.copy()
        b = self.beta
        if self.first:
            reg += grad_adjoint(b * b * grad(q))
        if self.second:
            nb = 1.0 - b
            reg += hess_adjoint(nb * nb * _W * hess(q))
        return out + self.gamma * reg

    def apply(self, s):
        return self.Et(self.fine_normal(self.E(s)))

    def rhs(self, m, d_f, d_s, d_0):
        """``2 E^T H^T m + gamma E^T M'^T W (d)`` for ``d`` already shifted by the duals."""
        fine = 2.0 * self.model.adjoint(m) + self.gamma * d_0
        if self.first:
            fine = fine + self.gamma * weighted_grad_adjoint(d_f, self.beta)
        if self.second:
            fine = fine + self.gamma * weighted_hess_adjoint(_W * d_s, self.beta)
        return self.Et(fine)

    def spectrum(self, coarse_shape, kind):
        key = (tuple(coarse_shape), kind)
        if key not in self._spectrum:
            if kind == "unweighted":
                spec = precond_spectrum(coarse_shape, self.j)
            else:
                fine = (coarse_shape[0] * 2**self.j, coarse_shape[1] * 2**self.j)
                ident, data = self.gamma, None
                if isinstance(self.model, Convolution):
                    data = 2.0 * self.model.gram_spectrum(fine)
                elif isinstance(self.model, FourierMask):
                    ident += 2.0 * self.model.density
                else:
                    ident += 2.0
                b = self.beta
                spec = precond_spectrum(
                    coarse_shape, self.j, identity=ident,
                    first=self.gamma * float(np.mean(b * b)) if self.first else 0.0,
                    second=self.gamma * float(np.mean((1 - b) ** 2)) if self.second else 0.0,
                    data=data)
            self._spectrum[key] = spec
        return self._spectrum[key]


def s_update_cg(system: SUpdateSystem, rhs, x0=None, cfg: AdmmConfig | None = None,
                precond: str | None = None):
    """Solve ``system.apply(s) = rhs`` by (preconditioned) CG; returns ``(s, info)``."""
    cfg = cfg or AdmmConfig(lam=0.0)
    kind = precond or cfg.precond
    pc = None
    if kind != "none":
        spec = system.spectrum(rhs.shape, kind)
        pc = lambda r: precond_apply(r, system.j, spec)  # noqa: E731
    return pcg(system.apply, rhs, x0=x0, precond=pc,
               max_iters=cfg.cg_max_iters, rel_tol=cfg.cg_rel_tol)


# --------------------------------------------------------------------------
# objective

def _data_fit(q, model, m):
    r = model.forward(q) - m
    return float(np.sum(np.abs(r) ** 2))


def objective_terms(s, beta, tau, model, m, j, lam, p, u, slack=1e-12):
    """Return ``dict(F, R, L, feasible)`` for the level-``j`` cost at ``s``.

    ``R`` already includes the factor ``lam``.  ``L`` is the log barrier
    ``-lam * tau * log(beta (1 - beta))`` (``None`` when ``tau`` is ``None``);
    scaling it by ``lam`` makes the closed-form weight update the exact
    minimizer of the full cost.
    """
    q = upsample_j(s, j)
    _check_beta(q, beta)
    F = _data_fit(q, model, m)
    R = 0.0
    if np.any(beta != 0):
        g = grad(q)
        R += float(np.sum(beta * np.sqrt(g[0] ** 2 + g[1] ** 2)))
    if np.any(beta != 1):
        R += float(np.sum((1.0 - beta) * schatten_norm(hess(q), p)))
    L = None
    if tau is not None:
        with np.errstate(divide="ignore"):
            L = float(-lam * np.sum(tau * np.log(beta * (1.0 - beta))))
        if not np.isfinite(L):
            L = np.inf
    feasible = bool(q.min() >= -slack and q.max() <= u + slack)
    return {"F": F, "R": lam * R, "L": L, "feasible": feasible}


def objective_eval(s, beta, tau, model, m, j, cfg: AdmmConfig) -> float:
    """Level-``j`` cost; ``tau=None`` drops the barrier (fixed-weight presets)."""
    t = objective_terms(s, beta, tau, model, m, j, cfg.lam, cfg.p, cfg.u)
    if not t["feasible"]:
        return np.inf
    return t["F"] + t["R"] + (t["L"] or 0.0)


# --------------------------------------------------------------------------
# ADMM

def _constraints(q, beta, first, second):
    c_f = beta * grad(q) if first else None
    c_s = (1.0 - beta) * hess(q) if second else None
    return c_f, c_s, q


def primal_residual(state: SplitState, beta, j) -> float:
    """``||M' E s - d|| / ||d||`` with the Hessian block in the Frobenius metric."""
    q = upsample_j(state.s, j)
    c_f, c_s = beta * grad(q), (1.0 - beta) * hess(q)
    num = (np.sum((c_f - state.d_f) ** 2) + np.sum(_W * (c_s - state.d_s) ** 2)
           + np.sum((q - state.d_0) ** 2))
    den = np.sum(state.d_f**2) + np.sum(_W * state.d_s**2) + np.sum(state.d_0**2)
    return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))


def admm_solve(s_init, beta, model, m, j: int, cfg: AdmmConfig, full_output=False):
    """Minimize the fixed-weight level-``j`` cost starting from ``s_init``.

    The returned image is clipped to the box and never has a higher cost than
    ``s_init``: if ADMM ends above the starting cost the start is returned.
    With ``full_output`` a ``(s, info)`` pair is returned; ``info`` carries
    the primal-residual history, CG iteration counts, the costs at the
    start and end, and whether the fallback fired.
    """
    s = np.array(s_init, dtype=float)
    beta = np.asarray(beta, dtype=float)
    fine_shape = (s.shape[0] * 2**j, s.shape[1] * 2**j)
    if beta.shape != fine_shape:
        raise ParameterError(f"weight map {beta.shape} does not match level-{j} grid {fine_shape}")
    first = bool(np.any(beta != 0))
    second = bool(np.any(beta != 1))
    system = SUpdateSystem(model, beta, j, cfg.gamma, first, second)
    t = cfg.lam / cfg.gamma
    g = cfg.gamma

    q = upsample_j(s, j)
    zeros2, zeros3 = np.zeros((2,) + fine_shape), np.zeros((3,) + fine_shape)
    c_f, c_s, c_0 = _constraints(q, beta, first, second)
    st = SplitState(s, c_f if first else zeros2, c_s if second else zeros3, c_0.copy(),
                    zeros2.copy(), zeros3.copy(), np.zeros(fine_shape))

    residuals, cg_iters = [], []
    for it in range(cfg.max_iters):
        if first:
            st.d_f = vec_soft_threshold(c_f + st.w_f / g, t)
        if second:
            st.d_s = hs_prox(c_s + st.w_s / g, t, cfg.p)
        st.d_0 = box_project(c_0 + st.w_0 / g, cfg.u)

        rhs = system.rhs(m, st.d_f - st.w_f / g, st.d_s - st.w_s / g, st.d_0 - st.w_0 / g)
        try:
            st.s, info = s_update_cg(system, rhs, x0=st.s, cfg=cfg)
        except SolverError as exc:
            exc.diagnostics.update({"admm_iter": it, "level": j})
            raise
        cg_iters.append(info["iters"])

        q = upsample_j(st.s, j)
        c_f, c_s, c_0 = _constraints(q, beta, first, second)
        if first:
            st.w_f = st.w_f + g * (c_f - st.d_f)
        if second:
            st.w_s = st.w_s + g * (c_s - st.d_s)
        st.w_0 = st.w_0 + g * (c_0 - st.d_0)

        res = primal_residual(st, beta, j)
        residuals.append(res)
        if res <= cfg.primal_tol:
            break

    s_out = box_project(st.s, cfg.u)
    j_init = objective_eval(np.asarray(s_init, dtype=float), beta, None, model, m, j, cfg)
    j_out = objective_eval(s_out, beta, None, model, m, j, cfg)
    fallback = bool(j_out > j_init)
    if fallback:
        log.warning("ADMM at level %d ended above its start (%.6g > %.6g); keeping start",
                    j, j_out, j_init)
        s_out = np.array(s_init, dtype=float)
    if not full_output:
        return s_out
    return s_out, {
        "residuals": residuals,
        "cg_iters": cg_iters,
        "iters": len(residuals),
        "J_init": j_init,
        "J_out": min(j_out, j_init),
        "fallback": fallback,
        "state": st,
    }
