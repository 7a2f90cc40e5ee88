"""Success probability of one frozen noise realization of the BV circuit.

Qubit k sees a noisy Hadamard H(theta_k, phi_k), the phase oracle and a
second noisy Hadamard H(theta'_k, phi'_k), where

    H(t, p)|0> = cos(t/2)|0> + e^{ip} sin(t/2)|1>
    H(t, p)|1> = sin(t/2)|0> - e^{ip} cos(t/2)|1>

The circuit has no entangling gate, so the probability of reading the
secret string is a product of one factor per bit:

    s_k = 0:  |X|^2,  X = cos(t/2)cos(t'/2) + e^{ip} sin(t/2) sin(t'/2)
    s_k = 1:  |Y|^2,  Y = e^{ip'} (cos(t/2) sin(t'/2) + e^{ip} sin(t/2) cos(t'/2))
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bloch import BlochAngles
from .disorder import ClassicalDisorder, classical_mean_and_strength
from .errors import InvalidParameter, LengthMismatch

STATEVECTOR_MAX_QUBITS = 20
FULL_TENSOR_MAX_QUBITS = 12


@dataclass(frozen=True)
class SecretString:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise InvalidParameter("secret string must have at least one bit")
        if any(b not in (0, 1) for b in bits):
            raise InvalidParameter(f"bits must be 0/1, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def parse(cls, text: str) -> "SecretString":
        return cls(tuple(int(ch) for ch in text.strip()))

    @classmethod
    def zeros(cls, n: int) -> "SecretString":
        return cls((0,) * n)

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def zero_positions(self) -> tuple[int, ...]:
        """1-based positions holding 0."""
        return tuple(k + 1 for k, b in enumerate(self.bits) if b == 0)

    @property
    def one_positions(self) -> tuple[int, ...]:
        return tuple(k + 1 for k, b in enumerate(self.bits) if b == 1)

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.int8)

    def __str__(self):
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class NoiseRealization:
    """Angles of the gates before (``pre``) and after (``post``) the oracle."""

    pre: tuple[BlochAngles, ...]
    post: tuple[BlochAngles, ...]

    def __post_init__(self):
        object.__setattr__(self, "pre", tuple(self.pre))
        object.__setattr__(self, "post", tuple(self.post))
        if len(self.pre) != len(self.post):
            raise LengthMismatch(f"{len(self.pre)} pre-oracle gates vs {len(self.post)} post-oracle")

    @property
    def n(self) -> int:
        return len(self.pre)

    @classmethod
    def noiseless(cls, n: int) -> "NoiseRealization":
        h = BlochAngles(math.pi / 2, 0.0)
        return cls((h,) * n, (h,) * n)

    @classmethod
    def from_arrays(cls, theta, phi, theta_post, phi_post) -> "NoiseRealization":
        pre = tuple(BlochAngles(t, p) for t, p in zip(theta, phi))
        post = tuple(BlochAngles(t, p) for t, p in zip(theta_post, phi_post))
        return cls(pre, post)


def _check(s: SecretString, r: NoiseRealization):
    if s.n != r.n:
        raise LengthMismatch(f"secret has {s.n} bits, realization has {r.n} gate pairs")


def bit_factor(bit: int, pre: BlochAngles, post: BlochAngles) -> float:
    """|X|^2 for a 0 bit, |Y|^2 for a 1 bit."""
    c, s = math.cos(pre.theta / 2), math.sin(pre.theta / 2)
    cp, sp = math.cos(post.theta / 2), math.sin(post.theta / 2)
    e = cmath.exp(1j * pre.phi)
    if bit == 0:
        amp = c * cp + e * s * sp
    else:
        amp = cmath.exp(1j * post.phi) * (c * sp + e * s * cp)
    return abs(amp) ** 2


def success_probability(s: SecretString, r: NoiseRealization) -> float:
    _check(s, r)
    prob = 1.0
    for bit, pre, post in zip(s.bits, r.pre, r.post):
        prob *= bit_factor(bit, pre, post)
    return prob


def bit_factors_cartesian(bits: np.ndarray, pre, post) -> np.ndarray:
    """Per-bit factors for a batch, from world-frame Cartesian gate images.

    ``pre`` and ``post`` are (x, y, z) triples of arrays shaped (batch, n);
    ``bits`` broadcasts against them. The half-angle terms come straight
    from z (cos(t/2) = sqrt((1 + z) / 2)) and e^{ip} from (x + iy) / rho.
    """
    x, y, z = pre
    zp = post[2]
    c = np.sqrt(np.maximum(0.5 * (1.0 + z), 0.0))
    s = np.sqrt(np.maximum(0.5 * (1.0 - z), 0.0))
    cp = np.sqrt(np.maximum(0.5 * (1.0 + zp), 0.0))
    sp = np.sqrt(np.maximum(0.5 * (1.0 - zp), 0.0))
    rho = np.hypot(x, y)
    safe = np.where(rho > 0.0, rho, 1.0)
    cos_phi = np.where(rho > 0.0, x / safe, 1.0)
    sin_phi = np.where(rho > 0.0, y / safe, 0.0)
    one = np.asarray(bits, dtype=bool)
    # bit 0 pairs (c cp, s sp); bit 1 pairs (c sp, s cp)
    first = np.where(one, c * sp, c * cp)
    second = np.where(one, s * cp, s * sp)
    re = first + cos_phi * second
    im = sin_phi * second
    return re * re + im * im


def success_probability_batch(bits: np.ndarray, pre, post) -> np.ndarray:
    return np.prod(bit_factors_cartesian(bits, pre, post), axis=-1)


# -- state-vector oracle ------------------------------------------------------


def hadamard_matrix(a: BlochAngles) -> np.ndarray:
    """Columns are H|0> and H|1>."""
    c, s = math.cos(a.theta / 2), math.sin(a.theta / 2)
    e = cmath.exp(1j * a.phi)
    return np.array([[c, s], [e * s, -e * c]], dtype=complex)


def _apply_1q(state: np.ndarray, gate: np.ndarray, k: int, n: int) -> np.ndarray:
    psi = state.reshape([2] * n)
    psi = np.moveaxis(np.tensordot(gate, psi, axes=([1], [k])), 0, k)
    return psi.reshape(-1)


def _full_tensor_probability(s: SecretString, r: NoiseRealization) -> float:
    n = s.n
    state = np.zeros(2**n, dtype=complex)
    state[0] = 1.0
    for k in range(n):
        state = _apply_1q(state, hadamard_matrix(r.pre[k]), k, n)
    # U_f |x> = (-1)^{s.x} |x>, qubit 0 is the most significant index
    basis = np.arange(2**n)
    parity = np.zeros(2**n, dtype=np.int64)
    for k, bit in enumerate(s.bits):
        if bit:
            parity ^= (basis >> (n - 1 - k)) & 1
    state = state * np.where(parity == 1, -1.0, 1.0)
    for k in range(n):
        state = _apply_1q(state, hadamard_matrix(r.post[k]), k, n)
    target = int(str(s), 2)
    return float(abs(state[target]) ** 2)


def statevector_success_probability(
    s: SecretString, r: NoiseRealization, *, full_tensor: bool = False
) -> float:
    """|<s|psi'_3>|^2 by explicit gate application.

    By default each qubit is evolved as its own 2-vector (exact, since no
    gate entangles). ``full_tensor=True`` builds the 2^n amplitude vector
    with the global phase oracle instead, for n <= 12.
    """
    _check(s, r)
    if full_tensor:
        if s.n > FULL_TENSOR_MAX_QUBITS:
            raise InvalidParameter(f"full-tensor mode limited to n <= {FULL_TENSOR_MAX_QUBITS}")
        return _full_tensor_probability(s, r)
    if s.n > STATEVECTOR_MAX_QUBITS:
        raise InvalidParameter(f"state-vector oracle limited to n <= {STATEVECTOR_MAX_QUBITS}")
    prob = 1.0
    ket0 = np.array([1.0, 0.0], dtype=complex)
    for bit, pre, post in zip(s.bits, r.pre, r.post):
        psi = hadamard_matrix(pre) @ ket0
        psi = np.array([1.0, -1.0 if bit else 1.0]) * psi
        psi = hadamard_matrix(post) @ psi
        prob *= abs(psi[bit]) ** 2
    return float(prob)


def classical_success(model: ClassicalDisorder, n: int) -> float:
    """One-query classical success (1 - m) / 2^(n-1): one bit probed, the rest guessed."""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    m, _ = classical_mean_and_strength(model)
    return (1.0 - m) / 2.0 ** (n - 1)
