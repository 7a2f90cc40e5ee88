"""Disorder families for the noisy gates and their strength calibration.

Quantum (Bloch-sphere) families perturb where a noisy Hadamard sends
``|0>``; every family is generated around the north pole and rotated so
its mean (or mode) sits on +x. Classical families perturb the
"no-flip" probability ``p`` of a bit-flip operator on [0, 1].

Strengths are root-mean-square distances from the noiseless value
(geodesic angle on the sphere, ``p`` itself classically); the scaled
strength divides by the largest strength the family can reach.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .bloch import BlochAngles, TWO_PI, angles_from_arrays, pole_frame_to_world
from .errors import DegenerateParam, InvalidParameter, RejectionStall, Unreachable

# Full-sphere uniform: sqrt(<theta^2>) = sqrt((pi^2 - 4) / 2) ~= 1.7128
SIGMA_MAX_SPHERE = math.sqrt((math.pi**2 - 4.0) / 2.0)
SIGMA_MAX_CLASSICAL = 1.0 / math.sqrt(3.0)
SQUEEZE_D_DEFAULT = 0.524

BISECT_TOL = 1e-4
BISECT_MAXITER = 200
_REJECTION_MIN_RATE = 1e-4
_REJECTION_PROBE = 100_000


class QuantumKind(str, enum.Enum):
    UNIFORM_CAP = "uniform"
    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"
    DISCRETE = "discrete"
    SQUEEZED = "squeezed"


class ClassicalKind(str, enum.Enum):
    UNIFORM = "uniform"
    HALF_GAUSSIAN = "gaussian"
    HALF_CAUCHY = "cauchy"
    DISCRETE = "discrete"


@dataclass(frozen=True)
class StrengthReport:
    sigma: float
    sigma_max: float
    sigma_bar: float


@dataclass(frozen=True)
class QuantumDisorder:
    """One quantum disorder family with its parameter.

    ``param`` is the cap/circle angle ``d`` for UNIFORM_CAP and DISCRETE,
    the concentration ``kappa`` for GAUSSIAN (``inf`` = noiseless,
    ``0`` = full sphere) and ``rho`` for CAUCHY (``1`` = noiseless).
    SQUEEZED ignores ``param`` and reads ``squeeze = (D, r)``: ellipse
    area ``D = pi a b`` and axis ratio ``r = a / b`` with ``a`` along y.
    """

    kind: QuantumKind
    param: float = 0.0
    squeeze: tuple[float, float] | None = None

    def __post_init__(self):
        kind = QuantumKind(self.kind)
        object.__setattr__(self, "kind", kind)
        p = float(self.param)
        object.__setattr__(self, "param", p)
        if kind in (QuantumKind.UNIFORM_CAP, QuantumKind.DISCRETE):
            if not 0.0 <= p <= math.pi:
                raise InvalidParameter(f"{kind.value}: d={p!r} outside [0, pi]")
        elif kind is QuantumKind.GAUSSIAN:
            if not p >= 0.0:
                raise InvalidParameter(f"gaussian: kappa={p!r} must be >= 0")
        elif kind is QuantumKind.CAUCHY:
            if not 0.0 <= p <= 1.0:
                raise InvalidParameter(f"cauchy: rho={p!r} outside [0, 1]")
        else:
            if self.squeeze is None:
                raise InvalidParameter("squeezed disorder needs squeeze=(D, r)")
            D, r = (float(v) for v in self.squeeze)
            object.__setattr__(self, "squeeze", (D, r))
            if not 0.0 < D <= math.pi:
                raise InvalidParameter(f"squeezed: D={D!r} outside (0, pi]")
            lo, hi = squeeze_r_range(D)
            if not lo * (1 - 1e-12) <= r <= hi * (1 + 1e-12):
                raise InvalidParameter(f"squeezed: r={r!r} outside [{lo:.6g}, {hi:.6g}]")

    # convenience constructors
    @classmethod
    def uniform_cap(cls, d):
        return cls(QuantumKind.UNIFORM_CAP, d)

    @classmethod
    def gaussian(cls, kappa):
        return cls(QuantumKind.GAUSSIAN, kappa)

    @classmethod
    def cauchy(cls, rho):
        return cls(QuantumKind.CAUCHY, rho)

    @classmethod
    def discrete(cls, d):
        return cls(QuantumKind.DISCRETE, d)

    @classmethod
    def squeezed(cls, D, r):
        return cls(QuantumKind.SQUEEZED, 0.0, (D, r))

    @property
    def semi_axes(self) -> tuple[float, float]:
        """Ellipse semi-axes ``(a, b)`` along world y and z (SQUEEZED only)."""
        D, r = self.squeeze
        a = min(1.0, math.sqrt(D * r / math.pi))
        b = min(1.0, math.sqrt(D / (math.pi * r)))
        return a, b


@dataclass(frozen=True)
class ClassicalDisorder:
    """Distribution of the no-flip probability ``p`` on [0, 1].

    UNIFORM: p ~ U[0, v]. DISCRETE: p = v. HALF_GAUSSIAN / HALF_CAUCHY:
    densities exp(-p^2 / 2v^2) and 1 / (1 + p^2 / v^2) truncated to
    [0, 1]; v = 0 is the point mass at 0 and v = inf the flat density.
    """

    kind: ClassicalKind
    param: float

    def __post_init__(self):
        kind = ClassicalKind(self.kind)
        object.__setattr__(self, "kind", kind)
        v = float(self.param)
        object.__setattr__(self, "param", v)
        if kind in (ClassicalKind.UNIFORM, ClassicalKind.DISCRETE):
            if not 0.0 <= v <= 1.0:
                raise InvalidParameter(f"{kind.value}: v={v!r} outside [0, 1]")
        elif not v >= 0.0:
            raise InvalidParameter(f"{kind.value}: v={v!r} must be >= 0")


def squeeze_r_range(D: float) -> tuple[float, float]:
    return D / math.pi, math.pi / D


# -- inverse CDFs of the polar angle (pole frame) ----------------------------
#
# Each family yields the pair (1 - cos t, 1 + cos t), which keeps both
# ends of [0, pi] exact: u = 0 gives t = 0 and u = 1 gives t = pi.


def _cap_halves(u, d):
    w_minus = 2.0 * u * math.sin(0.5 * d) ** 2
    return w_minus, 2.0 - w_minus


def _vmf_halves(u, kappa):
    if math.isinf(kappa):
        zero = np.zeros_like(u, dtype=float)
        return zero, zero + 2.0
    # 1 - cos t = -(1/k) ln(1 - u (1 - e^{-2k}))
    # 1 + cos t =  (1/k) ln(u + (1 - u) e^{2k})
    with np.errstate(divide="ignore"):
        w_minus = -np.log1p(u * np.expm1(-2.0 * kappa)) / kappa
        w_plus = np.logaddexp(np.log(u), np.log1p(-u) + 2.0 * kappa) / kappa
    return w_minus, w_plus


def _cauchy_halves(u, rho):
    denom = (1.0 + rho) ** 2 - 4.0 * rho * u
    return 2.0 * u * (1.0 - rho) ** 2 / denom, 2.0 * (1.0 - u) * (1.0 + rho) ** 2 / denom


def _polar_from_halves(w_minus, w_plus):
    return 2.0 * np.arctan2(np.sqrt(w_minus), np.sqrt(w_plus))


def uniform_cap_polar_angle(u, d):
    """Polar angle with cos t uniform on [cos d, 1]."""
    return _polar_from_halves(*_cap_halves(np.asarray(u, dtype=float), d))


def vmf_polar_angle(u, kappa):
    """Inverse CDF of the spherical-Gaussian polar angle.

    Algebraically ``arccos[ln(e^k - 2 u sinh k) / k]``, rewritten so it
    neither overflows for large ``k`` nor loses the endpoints.
    """
    if kappa <= 0.0:
        return uniform_cap_polar_angle(u, math.pi)
    return _polar_from_halves(*_vmf_halves(np.asarray(u, dtype=float), kappa))


def cauchy_polar_angle(u, rho):
    """Inverse CDF of the spherical Cauchy polar angle.

    tan(t/2) = sqrt(u / (1 - u)) (1 - rho) / (1 + rho), which equals
    cos t = [1 + rho^2 - (1 - rho^2)^2 / ((1 + rho)^2 - 4 rho u)] / (2 rho).
    """
    u = np.asarray(u, dtype=float)
    return 2.0 * np.arctan2(np.sqrt(u) * (1.0 - rho), np.sqrt(1.0 - u) * (1.0 + rho))


# -- samplers -----------------------------------------------------------------


def _cos_sin_from_halves(w_minus, w_plus):
    return 0.5 * (w_plus - w_minus), np.sqrt(np.maximum(w_minus * w_plus, 0.0))


def _symmetric_pole_sample(model: QuantumDisorder, rng: np.random.Generator, size: int):
    kind, p = model.kind, model.param
    if kind is QuantumKind.DISCRETE:
        cos_t = np.full(size, math.cos(p))
        sin_t = np.full(size, math.sin(p))
    else:
        u = rng.random(size)
        if kind is QuantumKind.UNIFORM_CAP:
            halves = _cap_halves(u, p)
        elif kind is QuantumKind.GAUSSIAN:
            if p == 0.0:
                warnings.warn(
                    "kappa = 0: sampling the exact full-sphere uniform limit",
                    DegenerateParam,
                    stacklevel=3,
                )
                halves = _cap_halves(u, math.pi)
            else:
                halves = _vmf_halves(u, p)
        else:
            halves = _cauchy_halves(u, p)
        cos_t, sin_t = _cos_sin_from_halves(*halves)
    az = TWO_PI * rng.random(size)
    return sin_t * np.cos(az), sin_t * np.sin(az), cos_t


def _squeezed_pole_sample(model: QuantumDisorder, rng: np.random.Generator, size: int):
    a, b = model.semi_axes
    cap = math.asin(min(1.0, max(a, b)))
    out_x, out_y, out_z = [], [], []
    have = tried = 0
    while have < size:
        batch = max(2 * (size - have), 1024)
        cos_t, sin_t = _cos_sin_from_halves(*_cap_halves(rng.random(batch), cap))
        az = TWO_PI * rng.random(batch)
        x, y = sin_t * np.cos(az), sin_t * np.sin(az)
        # world y = pole y, world z = -pole x
        keep = (y / a) ** 2 + (x / b) ** 2 <= 1.0
        n_keep = int(keep.sum())
        tried += batch
        have += n_keep
        if tried >= _REJECTION_PROBE and have < _REJECTION_MIN_RATE * tried:
            raise RejectionStall(
                f"acceptance {have}/{tried} below {_REJECTION_MIN_RATE} for (D, r)={model.squeeze}"
            )
        out_x.append(x[keep])
        out_y.append(y[keep])
        out_z.append(cos_t[keep])
    return (
        np.concatenate(out_x)[:size],
        np.concatenate(out_y)[:size],
        np.concatenate(out_z)[:size],
    )


def sample_pole_frame(model: QuantumDisorder, rng: np.random.Generator, size: int):
    """``size`` draws as pole-frame Cartesian arrays (x, y, z), mean on +z."""
    if model.kind is QuantumKind.SQUEEZED:
        return _squeezed_pole_sample(model, rng, size)
    return _symmetric_pole_sample(model, rng, size)


def sample_world_cartesian(model: QuantumDisorder, rng: np.random.Generator, size: int):
    """``size`` draws as world-frame Cartesian arrays, mean on +x."""
    return pole_frame_to_world(*sample_pole_frame(model, rng, size))


def sample_quantum(model: QuantumDisorder, rng: np.random.Generator, size: int | None = None):
    """Draw noisy-Hadamard images of ``|0>`` around +x.

    With ``size=None`` returns one :class:`BlochAngles`; otherwise a
    ``(theta, phi)`` pair of arrays.
    """
    n = 1 if size is None else int(size)
    theta, phi = angles_from_arrays(*sample_world_cartesian(model, rng, n))
    if size is None:
        return BlochAngles(float(theta[0]), float(phi[0]))
    return theta, phi


def sample_classical(model: ClassicalDisorder, rng: np.random.Generator, size: int | None = None):
    n = 1 if size is None else int(size)
    p = classical_quantile(model, rng.random(n))
    return float(p[0]) if size is None else p


def classical_quantile(model: ClassicalDisorder, q):
    """Inverse CDF of ``p``; ``q`` in [0, 1]."""
    q = np.asarray(q, dtype=float)
    kind, v = model.kind, model.param
    if kind is ClassicalKind.DISCRETE:
        return np.full_like(q, v)
    if kind is ClassicalKind.UNIFORM:
        return v * q
    if v == 0.0:
        return np.zeros_like(q)
    if math.isinf(v):
        return q.copy()
    if kind is ClassicalKind.HALF_GAUSSIAN:
        s = math.sqrt(2.0) * v
        return np.minimum(s * special.erfinv(q * math.erf(1.0 / s)), 1.0)
    return np.minimum(v * np.tan(q * math.atan(1.0 / v)), 1.0)


# -- strengths ----------------------------------------------------------------


def _theta2_sin_integral(d):
    """int_0^d t^2 sin t dt, with a series branch against cancellation."""
    if d < 0.5:
        total, term_sign, fact = 0.0, 1.0, 1.0
        for k in range(12):
            if k:
                fact *= (2 * k) * (2 * k + 1)
            total += term_sign * d ** (2 * k + 4) / (fact * (2 * k + 4))
            term_sign = -term_sign
        return total
    return -d * d * math.cos(d) + 2.0 * d * math.sin(d) + 2.0 * math.cos(d) - 2.0


def uniform_cap_variance(d: float) -> float:
    """(d^2 cos d - 2 d sin d - 2 cos d + 2) / (cos d - 1), continuous at 0."""
    if d == 0.0:
        return 0.0
    return _theta2_sin_integral(d) / (2.0 * math.sin(0.5 * d) ** 2)


def vmf_variance(kappa: float) -> float:
    if math.isinf(kappa):
        return 0.0
    if kappa == 0.0:
        return SIGMA_MAX_SPHERE**2
    norm = -math.expm1(-2.0 * kappa)

    def density(t):
        return kappa * math.exp(-2.0 * kappa * math.sin(0.5 * t) ** 2) * math.sin(t) / norm

    upper = min(math.pi, 40.0 / math.sqrt(kappa))
    pts = [s / math.sqrt(kappa) for s in (1.0, 3.0, 10.0) if s / math.sqrt(kappa) < upper]
    val, _ = integrate.quad(lambda t: t * t * density(t), 0.0, upper, points=pts or None,
                            epsabs=0.0, epsrel=1e-10, limit=400)
    return val


def cauchy_variance(rho: float) -> float:
    if rho >= 1.0:
        return 0.0
    w = (1.0 - rho) ** 2
    c = (1.0 - rho * rho) ** 2 / 2.0

    def integrand(t):
        s = math.sin(0.5 * t)
        return c * t * t * math.sin(t) / (w + 4.0 * rho * s * s) ** 2

    scale = 1.0 - rho
    pts = [scale * m for m in (0.5, 2.0, 10.0, 50.0) if scale * m < math.pi]
    val, _ = integrate.quad(integrand, 0.0, math.pi, points=pts or None,
                            epsabs=0.0, epsrel=1e-10, limit=400)
    return val


def squeezed_variance(D: float, r: float) -> float:
    """Mean squared geodesic angle from +x over the lifted ellipse.

    Uniform surface measure restricted to the x > 0 sheet above the
    ellipse (y/a)^2 + (z/b)^2 <= 1. In elliptic polar coordinates the
    radial integrals close, leaving one smooth integral over the ellipse
    angle (quarter period by symmetry).
    """
    model = QuantumDisorder.squeezed(D, r)
    a, b = model.semi_axes

    def radius(t):
        return math.sqrt((a * math.cos(t)) ** 2 + (b * math.sin(t)) ** 2)

    def numer(t):
        c = radius(t)
        return _theta2_sin_integral(math.asin(min(c, 1.0))) / (c * c)

    def denom(t):
        c = radius(t)
        return 1.0 / (1.0 + math.sqrt(max(0.0, 1.0 - c * c)))

    opts = dict(epsabs=0.0, epsrel=1e-11, limit=400)
    num, _ = integrate.quad(numer, 0.0, 0.5 * math.pi, **opts)
    den, _ = integrate.quad(denom, 0.0, 0.5 * math.pi, **opts)
    return num / den


def squeezed_sigma_max(D: float) -> float:
    lo, hi = squeeze_r_range(D)
    grid = np.geomspace(lo, hi, 41)
    return max(math.sqrt(squeezed_variance(D, float(r))) for r in grid)


def _quantum_sigma(model: QuantumDisorder) -> float:
    kind, p = model.kind, model.param
    if kind is QuantumKind.UNIFORM_CAP:
        return math.sqrt(uniform_cap_variance(p))
    if kind is QuantumKind.DISCRETE:
        return p
    if kind is QuantumKind.GAUSSIAN:
        return math.sqrt(vmf_variance(p))
    if kind is QuantumKind.CAUCHY:
        return math.sqrt(cauchy_variance(p))
    return math.sqrt(squeezed_variance(*model.squeeze))


def quantum_sigma_max(kind: QuantumKind, squeeze_D: float | None = None) -> float:
    kind = QuantumKind(kind)
    if kind is QuantumKind.DISCRETE:
        return math.pi
    if kind is QuantumKind.SQUEEZED:
        if squeeze_D is None:
            raise InvalidParameter("squeezed sigma_max needs D")
        return squeezed_sigma_max(squeeze_D)
    return SIGMA_MAX_SPHERE


def quantum_strength(model: QuantumDisorder) -> StrengthReport:
    sigma = _quantum_sigma(model)
    D = model.squeeze[0] if model.squeeze else None
    sigma_max = quantum_sigma_max(model.kind, D)
    return StrengthReport(sigma, sigma_max, min(1.0, sigma / sigma_max))


def classical_mean_and_strength(model: ClassicalDisorder) -> tuple[float, StrengthReport]:
    kind, v = model.kind, model.param
    sigma_max = 1.0 if kind is ClassicalKind.DISCRETE else SIGMA_MAX_CLASSICAL
    if kind is ClassicalKind.DISCRETE:
        m, sigma = v, v
    elif kind is ClassicalKind.UNIFORM:
        m, sigma = v / 2.0, v / math.sqrt(3.0)
    elif v == 0.0:
        m, sigma = 0.0, 0.0
    elif math.isinf(v):
        m, sigma = 0.5, SIGMA_MAX_CLASSICAL
    elif kind is ClassicalKind.HALF_GAUSSIAN:
        s = math.sqrt(2.0) * v
        norm = math.sqrt(2.0 / (math.pi * v * v)) / math.erf(1.0 / s)
        tail = math.exp(-1.0 / (2.0 * v * v))
        m = norm * v * v * -math.expm1(-1.0 / (2.0 * v * v))
        sigma = v * math.sqrt(max(0.0, 1.0 - norm * tail))
    else:
        vat = v * math.atan(1.0 / v)
        norm = 1.0 / vat
        m = norm * v * v / 2.0 * math.log1p(1.0 / (v * v))
        sigma = v * math.sqrt(max(0.0, norm * (1.0 - vat)))
    return m, StrengthReport(sigma, sigma_max, min(1.0, sigma / sigma_max))


# -- calibration --------------------------------------------------------------


def _bisect(fn, target, lo, hi, increasing=True):
    """Solve fn(x) = target on [lo, hi] for monotone ``fn``."""
    f_lo, f_hi = fn(lo), fn(hi)
    if not increasing:
        f_lo, f_hi = -f_lo, -f_hi
        target_s = -target
    else:
        target_s = target
    if target_s <= f_lo:
        return lo
    if target_s >= f_hi:
        return hi
    x = 0.5 * (lo + hi)
    for _ in range(BISECT_MAXITER):
        x = 0.5 * (lo + hi)
        fx = fn(x) if increasing else -fn(x)
        if abs(fx - target_s) < 1e-9 or hi - lo < 1e-15 * max(1.0, abs(x)):
            break
        if fx < target_s:
            lo = x
        else:
            hi = x
    return x


def _check_target(target):
    if not 0.0 <= target <= 1.0:
        raise Unreachable(f"scaled strength {target!r} outside [0, 1]")


def quantum_param_for_strength(
    kind, sigma_bar_target: float, squeeze_D: float | None = None, *, branch: str = "above"
) -> QuantumDisorder:
    """Family member whose scaled strength equals ``sigma_bar_target``.

    For SQUEEZED, ``branch`` picks ``r >= 1`` ("above") or ``r <= 1``
    ("below").
    """
    kind = QuantumKind(kind)
    t = float(sigma_bar_target)
    _check_target(t)
    if kind is QuantumKind.DISCRETE:
        model = QuantumDisorder.discrete(t * math.pi)
    elif kind is QuantumKind.UNIFORM_CAP:
        sbar = lambda d: math.sqrt(uniform_cap_variance(d)) / SIGMA_MAX_SPHERE  # noqa: E731
        model = QuantumDisorder.uniform_cap(_bisect(sbar, t, 0.0, math.pi))
    elif kind is QuantumKind.GAUSSIAN:
        if t == 0.0:
            return QuantumDisorder.gaussian(math.inf)
        if t == 1.0:
            return QuantumDisorder.gaussian(0.0)
        # sigma decreases with kappa; search in log kappa
        sbar = lambda lk: math.sqrt(vmf_variance(math.exp(lk))) / SIGMA_MAX_SPHERE  # noqa: E731
        model = QuantumDisorder.gaussian(math.exp(_bisect(sbar, t, -20.0, 40.0, increasing=False)))
    elif kind is QuantumKind.CAUCHY:
        if t == 0.0:
            return QuantumDisorder.cauchy(1.0)
        # search in s = -ln(1 - rho); sigma decreases with s
        sbar = lambda s: math.sqrt(cauchy_variance(-math.expm1(-s))) / SIGMA_MAX_SPHERE  # noqa: E731
        model = QuantumDisorder.cauchy(-math.expm1(-_bisect(sbar, t, 0.0, 36.0, increasing=False)))
    else:
        if squeeze_D is None:
            raise InvalidParameter("squeezed calibration needs squeeze_D")
        D = float(squeeze_D)
        smax = squeezed_sigma_max(D)
        lo, hi = squeeze_r_range(D)
        s_min = math.sqrt(squeezed_variance(D, 1.0)) / smax
        if t < s_min - BISECT_TOL:
            raise Unreachable(f"squeezed D={D}: scaled strength {t} below minimum {s_min:.6g}")
        sbar = lambda lr: math.sqrt(squeezed_variance(D, math.exp(lr))) / smax  # noqa: E731
        if branch == "above":
            lr = _bisect(sbar, t, 0.0, math.log(hi))
        elif branch == "below":
            lr = _bisect(sbar, t, math.log(lo), 0.0, increasing=False)
        else:
            raise InvalidParameter(f"branch must be 'above' or 'below', got {branch!r}")
        model = QuantumDisorder.squeezed(D, min(max(math.exp(lr), lo), hi))
    got = quantum_strength(model).sigma_bar
    if abs(got - t) > BISECT_TOL:
        raise Unreachable(f"{kind.value}: reached scaled strength {got:.6g}, wanted {t:.6g}")
    return model


def classical_param_for_strength(kind, sigma_bar_target: float) -> ClassicalDisorder:
    kind = ClassicalKind(kind)
    t = float(sigma_bar_target)
    _check_target(t)
    if kind in (ClassicalKind.UNIFORM, ClassicalKind.DISCRETE):
        return ClassicalDisorder(kind, t)
    if t == 0.0:
        return ClassicalDisorder(kind, 0.0)
    if t == 1.0:
        return ClassicalDisorder(kind, math.inf)

    def sbar(lv):
        return classical_mean_and_strength(ClassicalDisorder(kind, math.exp(lv)))[1].sigma_bar

    model = ClassicalDisorder(kind, math.exp(_bisect(sbar, t, -40.0, 14.0)))
    got = classical_mean_and_strength(model)[1].sigma_bar
    if abs(got - t) > BISECT_TOL:
        raise Unreachable(f"{kind.value}: reached scaled strength {got:.6g}, wanted {t:.6g}")
    return model
