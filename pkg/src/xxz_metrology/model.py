"""Chain parameters and dense spin-1/2 operator algebra.

Operators live on the full 2**n Hilbert space as plain complex numpy
arrays.  Site indices are 1-based and site 1 is the leftmost tensor
factor, i.e. ``embed(2, 1, op) == kron(op, eye(2))``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

# Dense operators get unwieldy quickly; 2**12 = 4096 is the largest
# Hilbert space we allow before forcing the transfer-matrix route.
DENSE_CAP = 12

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "+": np.array([[0, 1], [0, 0]], dtype=complex),
    "-": np.array([[0, 0], [1, 0]], dtype=complex),
}


def eta_from_delta(delta: float) -> complex:
    """Anisotropy angle eta with cos(eta) = Delta.

    Real for |Delta| <= 1, i*arccosh(Delta) for Delta > 1 and
    pi + i*arccosh(-Delta) for Delta < -1, so that cos(eta) = Delta on
    every branch.
    """
    if abs(delta) <= 1:
        return complex(math.acos(delta))
    if delta > 1:
        return 1j * math.acosh(delta)
    return complex(math.pi, math.acosh(-delta))


@dataclass(frozen=True)
class ChainParams:
    """Physical parameters of the boundary-driven chain.

    ``lam`` is the dissipation rate (lambda), ``mu`` the driving bias in
    [-1, 1], ``omega`` the uniform field whose generator commutes with
    the rest of the dynamics.  ``eta = arccos(delta)`` is derived.
    """

    n: int
    j_coupling: float = 1.0
    delta: float = 1.0
    lam: float = 0.0
    mu: float = 1.0
    omega: float = 0.0
    eta: complex = field(init=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least two sites, got n={self.n}")
        if not -1.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [-1, 1], got {self.mu}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.j_coupling <= 0:
            raise ValueError(f"J must be > 0, got {self.j_coupling}")
        eta = eta_from_delta(self.delta)
        if abs(cmath.cos(eta) - self.delta) > 1e-12:
            raise ValueError("eta branch failed cos(eta) = Delta check")
        object.__setattr__(self, "eta", eta)

    @property
    def dim(self) -> int:
        return 2 ** self.n

    def replace(self, **kwargs) -> "ChainParams":
        fields = dict(n=self.n, j_coupling=self.j_coupling, delta=self.delta,
                      lam=self.lam, mu=self.mu, omega=self.omega)
        fields.update(kwargs)
        return ChainParams(**fields)


def pauli(axis: str) -> np.ndarray:
    """2x2 Pauli matrix; sigma^+- = (sigma^x +- i sigma^y)/2."""
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}; expected one of x y z + -")


def _check_dense_cap(n: int):
    if n > DENSE_CAP:
        raise ValueError(
            f"dense representation capped at n <= {DENSE_CAP}; got n={n}. "
            "Use the transfer-matrix routines for larger chains.")


def embed(n: int, site: int, op: np.ndarray) -> np.ndarray:
    """Tensor-embed a single-site operator at ``site`` (1-based) in an n-site chain."""
    _check_dense_cap(n)
    if not 1 <= site <= n:
        raise ValueError(f"site {site} out of range 1..{n}")
    left = 2 ** (site - 1)
    right = 2 ** (n - site)
    out = np.kron(np.eye(left, dtype=complex), np.asarray(op, dtype=complex))
    return np.kron(out, np.eye(right, dtype=complex))


def hamiltonian_xxz(params: ChainParams) -> np.ndarray:
    """Bare XXZ Hamiltonian sum_j (sx sx + sy sy + Delta sz sz); J multiplies elsewhere."""
    n = params.n
    _check_dense_cap(n)
    d = 2 ** n
    H = np.zeros((d, d), dtype=complex)
    for j in range(1, n):
        for ax in ("x", "y"):
            H += embed(n, j, pauli(ax)) @ embed(n, j + 1, pauli(ax))
        H += params.delta * embed(n, j, pauli("z")) @ embed(n, j + 1, pauli("z"))
    return H


def magnetization_z(n: int) -> np.ndarray:
    """Total magnetization M_z = sum_j sigma_j^z."""
    _check_dense_cap(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return pauli("z")
    return sum(embed(n, j, pauli("z")) for j in range(1, n + 1))


def lindblad_jump_ops(params: ChainParams) -> list[np.ndarray]:
    """The four boundary jump operators.

    L_1, L_2 act on site 1 with rates (1 +- mu)/2 on sigma^+-; L_3, L_4
    act on site n with the opposite bias, so mu = +1 pumps spin-up in at
    the left edge and out at the right edge.
    """
    n, mu = params.n, params.mu
    return [
        math.sqrt((1 + mu) / 2) * embed(n, 1, pauli("+")),
        math.sqrt((1 - mu) / 2) * embed(n, 1, pauli("-")),
        math.sqrt((1 - mu) / 2) * embed(n, n, pauli("+")),
        math.sqrt((1 + mu) / 2) * embed(n, n, pauli("-")),
    ]


def hs_norm(op: np.ndarray) -> float:
    """Hilbert-Schmidt norm sqrt(Tr O O^dag)."""
    return float(np.linalg.norm(op))
