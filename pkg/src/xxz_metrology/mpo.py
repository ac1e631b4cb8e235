"""Auxiliary-space MPO matrices and their contraction to dense operators.

Two tridiagonal families live here.  The A family (perturbative
current-carrying operator Z) acts on {|L>, |R>, |1>, ..., |n//2>}; the
B family (extreme-driving amplitude operator S) acts on
{|0>, ..., |n//2>} with both boundary vectors |0>.

Index sums referencing |n//2 + 1> are clamped to the stated basis:
states above n//2 are unreachable from the right boundary in n steps,
so clamping cannot change any n-site contraction (the test suite widens
the space and checks this).

The pairing between auxiliary matrices and Pauli factors is fixed by
requiring the assembled steady states to actually annihilate the
Liouvillian: the A family pairs A_+ with sigma^- and A_- with sigma^+
(equivalently, Z is the transpose of the naive reading), while the B
family pairs literally.  With any other pairing the first-order fixed
point fails, which the lindblad tests would catch immediately.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .model import DENSE_CAP, pauli
from .transfer import bracket_LTnR_log


@dataclass
class AuxMatrices:
    """Tridiagonal auxiliary-space matrices and their boundary vectors."""

    family: str               # 'A' or 'B'
    dim_aux: int
    a0: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray
    left_index: int
    right_index: int
    conjugate_paulis: bool    # pair the +/- matrices with the flipped sigmas

    def __post_init__(self):
        # nearest-neighbor moves on the auxiliary chain only; for the A
        # family both boundary vectors attach to |1> (indices 0, 1 <-> 2)
        dim = self.dim_aux
        idx = np.arange(dim)
        allowed = np.abs(idx[:, None] - idx[None, :]) <= 1
        if self.family == "A":
            allowed[:2, :] = allowed[:, :2] = False
            allowed[0, 0] = allowed[1, 1] = True
            allowed[0, 2] = allowed[2, 1] = True
        for name in ("a0", "a_plus", "a_minus"):
            m = getattr(self, name)
            if np.any(m[~allowed] != 0):
                raise ValueError(f"{name} has entries off the auxiliary band")


def build_aux_A(n: int, eta: complex) -> AuxMatrices:
    """A-family matrices on {|L>, |R>, |1>, ..., |n//2>} (dim n//2 + 2).

    A_0 = |L><L| + |R><R| + sum_k cos(eta k) |k><k|
    A_+ = |1><R| - sum_k sin(eta k) |k+1><k|
    A_- = |L><1| + sum_k sin(eta (k+1)) |k><k+1|
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    m = n // 2
    dim = m + 2
    L, R = 0, 1
    ix = lambda k: 1 + k
    a0 = np.zeros((dim, dim), dtype=complex)
    ap = np.zeros((dim, dim), dtype=complex)
    am = np.zeros((dim, dim), dtype=complex)
    a0[L, L] = 1.0
    a0[R, R] = 1.0
    for k in range(1, m + 1):
        a0[ix(k), ix(k)] = cmath.cos(eta * k)
    ap[ix(1), R] = 1.0
    am[L, ix(1)] = 1.0
    for k in range(1, m):
        ap[ix(k + 1), ix(k)] = -cmath.sin(eta * k)
        am[ix(k), ix(k + 1)] = cmath.sin(eta * (k + 1))
    return AuxMatrices(family="A", dim_aux=dim, a0=a0, a_plus=ap, a_minus=am,
                       left_index=L, right_index=R, conjugate_paulis=True)


def build_aux_B(n: int, eta: complex, s: complex) -> AuxMatrices:
    """B-family matrices on {|0>, ..., |n//2>} for the mu = 1 amplitude operator.

    B_0 = sum_k sin(eta (s - k)) |k><k|
    B_+ = sum_k sin(eta (k - 2s)) |k><k+1|
    B_- = sum_k sin(eta (k + 1)) |k+1><k|
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if abs(cmath.sin(eta)) < 1e-12:
        raise ValueError("B family undefined at the isotropic point (sin eta = 0)")
    m = n // 2
    dim = m + 1
    b0 = np.zeros((dim, dim), dtype=complex)
    bp = np.zeros((dim, dim), dtype=complex)
    bm = np.zeros((dim, dim), dtype=complex)
    for k in range(0, m + 1):
        b0[k, k] = cmath.sin(eta * (s - k))
        if k + 1 <= m:
            bp[k, k + 1] = cmath.sin(eta * (k - 2 * s))
            bm[k + 1, k] = cmath.sin(eta * (k + 1))
    return AuxMatrices(family="B", dim_aux=dim, a0=b0, a_plus=bp, a_minus=bm,
                       left_index=0, right_index=0, conjugate_paulis=False)


def solve_s(epsilon: float, eta: complex) -> complex:
    """Solve cot(s eta) = epsilon / (4 i sin(eta)) on the principal branch.

    Closed form: s eta = pi/2 + i artanh(epsilon / (4 sin eta)), which
    reduces to s = pi/(2 eta) as epsilon -> 0.
    """
    eta = complex(eta)
    if abs(eta) < 1e-12 or abs(cmath.sin(eta)) < 1e-12:
        raise ValueError("s is undefined at the isotropic point")
    s = (math.pi / 2 + 1j * cmath.atanh(epsilon / (4 * cmath.sin(eta)))) / eta
    residual = 1 / cmath.tan(s * eta) * 4j * cmath.sin(eta) - epsilon
    if abs(residual) > 1e-10 * max(1.0, abs(epsilon)):
        raise ArithmeticError(f"solve_s round-trip residual {abs(residual):.2e}")
    return s


def contract_to_dense(aux: AuxMatrices, n: int) -> np.ndarray:
    """Contract an MPO to the dense 2**n x 2**n operator.

    Propagates the right boundary vector through the site loop, carrying
    a map from reachable auxiliary indices to partial dense operators
    (never enumerating the 3**n strings): O(n * dim_aux * 4**n) work and
    O(dim_aux * 4**n) memory.
    """
    if n > DENSE_CAP:
        raise ValueError(f"dense contraction capped at n <= {DENSE_CAP}, got {n}")
    needed = n // 2 + (2 if aux.family == "A" else 1)
    if aux.dim_aux < needed:
        raise ValueError(f"auxiliary space of dim {aux.dim_aux} too small for "
                         f"an {n}-site contraction (need >= {needed})")
    if aux.conjugate_paulis:
        pairs = (("0", aux.a0), ("-", aux.a_plus), ("+", aux.a_minus))
    else:
        pairs = (("0", aux.a0), ("+", aux.a_plus), ("-", aux.a_minus))
    sigma = {"0": np.eye(2, dtype=complex), "+": pauli("+"), "-": pauli("-")}
    partial: dict[int, np.ndarray] = {aux.right_index: np.eye(1, dtype=complex)}
    for _ in range(n):
        step: dict[int, np.ndarray] = {}
        for label, mat in pairs:
            sig = sigma[label]
            rows, cols = np.nonzero(mat)
            for a, b in zip(rows, cols):
                block = partial.get(b)
                if block is None:
                    continue
                contrib = mat[a, b] * np.kron(sig, block)
                if a in step:
                    step[a] += contrib
                else:
                    step[a] = contrib
        partial = step
    dim = 2 ** n
    return partial.get(aux.left_index, np.zeros((dim, dim), dtype=complex))


def hs_norm_sq_via_transfer(n: int, eta: complex, log: bool = False) -> float:
    """||Z||_HS^2 = 2**n <L|T^n|R>, overflow-safe when ``log`` is set.

    Identity between the dense contraction of the A family and the
    transfer-matrix bracket; the test suite cross-checks it against
    hs_norm(contract_to_dense(...))**2 wherever the dense form fits.
    """
    val = bracket_LTnR_log(n, eta)
    log_norm = val.log + n * math.log(2.0)
    if log:
        return log_norm
    return math.exp(log_norm) if log_norm < math.log(np.finfo(float).max) else math.inf


def validity_threshold(n: int, eta: complex, mu: float, log: bool = False) -> float:
    """Largest lambda/J for which the perturbative expansion is controlled.

    sqrt(2**(n+1)) / (mu ||Z||_HS); above it the first order overtakes
    the identity.  Vacuous at mu = 0.
    """
    if mu == 0:
        raise ValueError("validity condition is vacuous at mu = 0 "
                         "(first order vanishes identically)")
    log_thr = (0.5 * (n + 1) * math.log(2.0) - math.log(abs(mu))
               - 0.5 * hs_norm_sq_via_transfer(n, eta, log=True))
    if log:
        return log_thr
    return math.exp(log_thr)
