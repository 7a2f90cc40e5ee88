"""Least-squares fits of Q versus scaled strength.

Model family: ``a exp(-b x^2) + c x^2 + d``. The Gaussian-only form pins
``c = 0``; any other parameter may be pinned as well (the long-string
discrete curve pins ``c = d = 0``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidParameter, NotConverged, SingularJacobian

PARAM_NAMES = ("a", "b", "c", "d")
MAX_ITER = 500
CI_Z = 1.96


@dataclass(frozen=True)
class FitModel:
    form: str  # "gauss_only" or "gauss_quad"
    fixed: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.form not in ("gauss_only", "gauss_quad"):
            raise InvalidParameter(f"unknown fit form {self.form!r}")
        fixed = dict(self.fixed)
        if self.form == "gauss_only":
            fixed["c"] = 0.0
        unknown = set(fixed) - set(PARAM_NAMES)
        if unknown:
            raise InvalidParameter(f"unknown parameters {sorted(unknown)}")
        object.__setattr__(self, "fixed", fixed)

    @classmethod
    def gauss_only(cls, **fixed):
        return cls("gauss_only", fixed)

    @classmethod
    def gauss_quad(cls, **fixed):
        return cls("gauss_quad", fixed)

    @property
    def free(self) -> np.ndarray:
        return np.array([name not in self.fixed for name in PARAM_NAMES])


@dataclass(frozen=True)
class FitResult:
    params: tuple[float, float, float, float]
    half_widths_95: tuple[float, float, float, float]
    rms_error: float
    converged: bool
    iterations: int = 0

    def as_dict(self) -> dict[str, float]:
        return dict(zip(PARAM_NAMES, self.params))


def model_value(x, params):
    a, b, c, d = params
    x2 = np.asarray(x, dtype=float) ** 2
    return a * np.exp(-b * x2) + c * x2 + d


def model_jacobian(x, params) -> np.ndarray:
    """d model / d (a, b, c, d), shape (len(x), 4)."""
    a, b, _, _ = params
    x2 = np.asarray(x, dtype=float) ** 2
    e = np.exp(-b * x2)
    return np.column_stack([e, -a * x2 * e, x2, np.ones_like(x2)])


def _project(p):
    p = p.copy()
    p[0] = max(p[0], 0.0)
    p[1] = max(p[1], 0.0)
    return p


def default_init(x, y) -> np.ndarray:
    order = np.argsort(x)
    q0, q1 = y[order[0]], y[order[-1]]
    return np.array([q0 - q1, 3.0, 0.0, q1])


def fit(
    data: Sequence[tuple[float, float]],
    model: FitModel,
    init: Sequence[float] | None = None,
) -> FitResult:
    """Damped Gauss-Newton (Levenberg-Marquardt) least squares.

    Raises SingularJacobian when the normal matrix at the optimum cannot be
    inverted, NotConverged when 500 iterations pass without meeting the
    relative-decrease or step-size tolerance (both 1e-10).
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidParameter("data must be a sequence of (sigma_bar, q) pairs")
    x, y = arr[:, 0], arr[:, 1]
    if len(x) < 8:
        raise InvalidParameter(f"need at least 8 points, got {len(x)}")
    if len(np.unique(x)) != len(x):
        raise InvalidParameter("sigma_bar values must be distinct")
    if x.min() < 0.0 or x.max() > 1.0:
        raise InvalidParameter("sigma_bar values must lie in [0, 1]")

    free = model.free
    p = np.array(init, dtype=float) if init is not None else default_init(x, y)
    for k, name in enumerate(PARAM_NAMES):
        if name in model.fixed:
            p[k] = model.fixed[name]
    p = _project(p)

    def ssr(params):
        r = y - model_value(x, params)
        return float(r @ r)

    cost = ssr(p)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        J = model_jacobian(x, p)[:, free]
        r = y - model_value(x, p)
        A = J.T @ J
        g = J.T @ r
        diag = np.diag(A).copy()
        diag[diag == 0.0] = 1.0
        improved = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = p.copy()
            trial[free] += step
            trial = _project(trial)
            new_cost = ssr(trial)
            if new_cost <= cost:
                moved = np.linalg.norm(trial - p)
                decrease = (cost - new_cost) / cost if cost > 0.0 else 0.0
                p, cost = trial, new_cost
                lam = max(lam / 10.0, 1e-12)
                improved = True
                if decrease < 1e-10 or moved < 1e-10:
                    converged = True
                break
            lam *= 10.0
        if not improved:
            # no descent direction left at working precision
            converged = True
        if converged:
            break
    if not converged:
        raise NotConverged(f"no convergence after {MAX_ITER} iterations (params {p})")

    J = model_jacobian(x, p)[:, free]
    A = J.T @ J
    if np.linalg.matrix_rank(A) < A.shape[0] or np.linalg.cond(A) > 1e14:
        raise SingularJacobian("normal matrix is singular at the optimum")
    rms = math.sqrt(cost / len(x))
    cov_diag = np.diag(np.linalg.inv(A))
    half = np.zeros(4)
    half[free] = CI_Z * np.sqrt(np.maximum(cov_diag, 0.0)) * rms
    return FitResult(tuple(float(v) for v in p), tuple(float(v) for v in half), rms, True, it)
