"""Transfer-matrix machinery for the auxiliary-space contractions.

The transfer matrix T acts on the basis {|L>, |R>, |1>, ..., |d>} and
its n-th power's (L, R) element gives the squared Hilbert-Schmidt norm
of the perturbative MPO (up to 2**n).  The vertex matrix D inserts the
anisotropy-derivative defect.  Everything here is real:

    <L|T|L> = <R|T|R> = 1,   <L|T|1> = <1|T|R> = 1/2,
    <k|T|k> = cos^2(eta k),
    <k+1|T|k> = sin^2(eta k)/2,   <k|T|k+1> = sin^2(eta (k+1))/2,

with cos^2/sin^2 understood as analytic squares, so for |Delta| > 1
(imaginary eta) the diagonal holds cosh^2 and the off-diagonals hold
-sinh^2/2.  Every R -> L path carries equally many climbs and descents,
hence all path amplitudes -- and every quantity computed here -- stay
positive; powers may therefore be taken with |T| elementwise, which is
what the log-domain mode exploits.

Internally the matrix is stored as a tridiagonal system over the
ordering [L, 1, 2, ..., d] plus the source column R (R never receives
amplitude, it only feeds |1> with weight 1/2), which makes an n-step
propagation O(n d) time and O(d) memory.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

_LOG_MAX = math.log(np.finfo(float).max) - 8.0


class SignedLog(NamedTuple):
    """A real number stored as (sign, log|value|); sign 0 means exactly 0."""

    sign: float
    log: float

    @property
    def value(self) -> float:
        if self.sign == 0.0:
            return 0.0
        if self.log > _LOG_MAX:
            return math.inf * self.sign
        return self.sign * math.exp(self.log)

    @property
    def log10(self) -> float:
        return self.log / math.log(10.0)


def _split_eta(eta: complex) -> tuple[float, bool]:
    """Reduce eta to (t, easy_axis).

    Easy plane: eta real, t = eta.  Easy axis: eta = i t or pi + i t
    (Delta < -1); both give the same transfer entries, cosh^2(t k) on
    the diagonal and -sinh^2/2 off it.
    """
    eta = complex(eta)
    if abs(eta.imag) < 1e-14:
        return float(eta.real), False
    if abs(eta.real) > 1e-14 and abs(eta.real - math.pi) > 1e-12:
        raise ValueError(f"eta must be real, i*t or pi + i*t; got {eta}")
    return abs(eta.imag), True


def _delta_from_eta(eta: complex) -> float:
    return float(cmath.cos(eta).real)


@dataclass
class TransferSystem:
    """Transfer matrix T and vertex matrix D truncated at index d.

    Dense matrices on the basis [L, R, 1..d] (indices 0, 1, 2..d+1),
    entries exactly as written above; for |Delta| > 1 the off-diagonal
    T entries are negative.
    """

    d: int
    eta: complex
    T: np.ndarray
    D: np.ndarray

    @property
    def delta(self) -> float:
        return _delta_from_eta(self.eta)

    def index(self, label) -> int:
        if label == "L":
            return 0
        if label == "R":
            return 1
        return 1 + int(label)


def _bulk_entries(d: int, eta: complex) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(diag[k], climb[k] = <k+1|T|k>, descent[k] = <k|T|k+1>) for k = 1..d."""
    t, easy_axis = _split_eta(eta)
    k = np.arange(1, d + 1, dtype=float)
    if easy_axis:
        diag = np.cosh(t * k) ** 2
        s2 = -np.sinh(t * k) ** 2
        s2next = -np.sinh(t * (k + 1)) ** 2
    else:
        diag = np.cos(t * k) ** 2
        s2 = np.sin(t * k) ** 2
        s2next = np.sin(t * (k + 1)) ** 2
    return diag, s2 / 2, s2next / 2


def build_transfer(d: int, eta: complex) -> TransferSystem:
    """Transfer matrix T and vertex matrix D truncated at auxiliary index d."""
    if d < 1:
        raise ValueError(f"truncation index must be >= 1, got d={d}")
    dim = d + 2
    T = np.zeros((dim, dim))
    L, R = 0, 1
    ix = lambda k: 1 + k
    T[L, L] = 1.0
    T[R, R] = 1.0
    T[L, ix(1)] = 0.5
    T[ix(1), R] = 0.5
    diag, climb, desc = _bulk_entries(d, eta)
    for k in range(1, d + 1):
        T[ix(k), ix(k)] = diag[k - 1]
        if k + 1 <= d:
            T[ix(k + 1), ix(k)] = climb[k - 1]
            T[ix(k), ix(k + 1)] = desc[k - 1]
    D = np.zeros((dim, dim))
    sgn = math.copysign(1.0, 1.0 - _delta_from_eta(eta) ** 2)
    for k in range(1, d + 1):
        D[ix(k), ix(k)] = sgn * k ** 2 / 2
        if k + 1 <= d:
            D[ix(k + 1), ix(k)] = k ** 2 / 4
            D[ix(k), ix(k + 1)] = (k + 1) ** 2 / 4
    return TransferSystem(d=d, eta=eta, T=T, D=D)


# ---------------------------------------------------------------------------
# banded propagation engine over the ordering [L, 1, ..., d] + source R
# ---------------------------------------------------------------------------

class _Bands:
    """|T| over [L, 1..d] as three diagonals; R is a unit source into |1>."""

    def __init__(self, d: int, eta: complex):
        self.d = d
        self.t, self.easy_axis = _split_eta(eta)
        diag_bulk, climb, desc = _bulk_entries(d, eta)
        dim = d + 1  # L plus 1..d
        self.diag = np.empty(dim)
        self.diag[0] = 1.0
        self.diag[1:] = np.abs(diag_bulk)
        # lower[i] multiplies v[i-1] into v'[i]: climbs k -> k+1
        self.lower = np.zeros(dim)
        self.lower[2:] = np.abs(climb[: d - 1])
        # upper[i] multiplies v[i+1] into v'[i]: descents k+1 -> k and 1 -> L
        self.upper = np.zeros(dim)
        self.upper[0] = 0.5
        self.upper[1:d] = np.abs(desc[: d - 1])
        self.source = 0.5  # <1|T|R>

    def t_derivative_bands(self):
        """First and second t-derivatives of the band entries.

        Easy plane: d/dt cos^2(tk) = -k sin(2tk), d/dt sin^2(tk)/2 =
        (k/2) sin(2tk); easy axis: the hyperbolic counterparts of |T|.
        The boundary entries are constants.
        """
        d = self.d
        dim = d + 1
        k = np.arange(1, d + 1, dtype=float)
        kc = k[: d - 1]
        t = self.t
        if self.easy_axis:
            diag1_b = k * np.sinh(2 * t * k)
            diag2_b = 2 * k ** 2 * np.cosh(2 * t * k)
            climb1 = kc / 2 * np.sinh(2 * t * kc)
            climb2 = kc ** 2 * np.cosh(2 * t * kc)
            desc1 = (kc + 1) / 2 * np.sinh(2 * t * (kc + 1))
            desc2 = (kc + 1) ** 2 * np.cosh(2 * t * (kc + 1))
        else:
            diag1_b = -k * np.sin(2 * t * k)
            diag2_b = -2 * k ** 2 * np.cos(2 * t * k)
            climb1 = kc / 2 * np.sin(2 * t * kc)
            climb2 = kc ** 2 * np.cos(2 * t * kc)
            desc1 = (kc + 1) / 2 * np.sin(2 * t * (kc + 1))
            desc2 = (kc + 1) ** 2 * np.cos(2 * t * (kc + 1))
        d1 = (np.zeros(dim), np.zeros(dim), np.zeros(dim))
        d2 = (np.zeros(dim), np.zeros(dim), np.zeros(dim))
        d1[0][1:] = diag1_b
        d2[0][1:] = diag2_b
        d1[1][2:] = climb1
        d2[1][2:] = climb2
        d1[2][1:d] = desc1
        d2[2][1:d] = desc2
        return d1, d2

    @staticmethod
    def _band_apply(bands, v: np.ndarray) -> np.ndarray:
        diag, lower, upper = bands
        out = diag * v
        out[1:] += lower[1:] * v[:-1]
        out[:-1] += upper[:-1] * v[1:]
        return out

    def matvec(self, v: np.ndarray, r: float) -> np.ndarray:
        out = self.diag * v
        out[1:] += self.lower[1:] * v[:-1]
        out[:-1] += self.upper[:-1] * v[1:]
        out[1] += self.source * r
        return out

    def _log_terms(self, lg: np.ndarray, log_r: float) -> np.ndarray:
        with np.errstate(divide="ignore"):
            terms = np.full((4, lg.size), -np.inf)
            np.log(self.diag, where=self.diag > 0, out=terms[0])
            terms[0] += lg
            lo = np.log(self.lower[1:], where=self.lower[1:] > 0,
                        out=np.full(lg.size - 1, -np.inf))
            terms[1, 1:] = lo + lg[:-1]
            up = np.log(self.upper[:-1], where=self.upper[:-1] > 0,
                        out=np.full(lg.size - 1, -np.inf))
            terms[2, :-1] = up + lg[1:]
            terms[3, 1] = math.log(self.source) + log_r
        return terms

    def log_matvec(self, lg: np.ndarray, log_r: float) -> np.ndarray:
        """One |T| step on a nonnegative vector stored as log components."""
        terms = self._log_terms(lg, log_r)
        m = terms.max(axis=0)
        safe = m > -np.inf
        out = np.full(lg.size, -np.inf)
        out[safe] = m[safe] + np.log(np.exp(terms[:, safe] - m[safe]).sum(axis=0))
        return out

    def signed_log_matvec(self, sg: np.ndarray,
                          lg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """One |T| step on a signed vector; entries of |T| are nonnegative."""
        terms = self._log_terms(lg, -math.inf)
        signs = np.zeros_like(terms)
        signs[0] = sg
        signs[1, 1:] = sg[:-1]
        signs[2, :-1] = sg[1:]
        return _signed_lse(signs, terms)


class _VertexBands:
    """The vertex matrix D over [L, 1..d]; carries the sign(1 - Delta^2) diagonal."""

    def __init__(self, d: int, eta: complex):
        dim = d + 1
        k = np.arange(1, d + 1, dtype=float)
        sgn = math.copysign(1.0, 1.0 - _delta_from_eta(eta) ** 2)
        self.diag = np.zeros(dim)
        self.diag[1:] = sgn * k ** 2 / 2
        self.lower = np.zeros(dim)
        self.lower[2:] = k[: d - 1] ** 2 / 4
        self.upper = np.zeros(dim)
        self.upper[1:d] = (k[: d - 1] + 1) ** 2 / 4

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[1:] += self.lower[1:] * v[:-1]
        out[:-1] += self.upper[:-1] * v[1:]
        return out

    def signed_log_matvec(self, lg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        with np.errstate(divide="ignore"):
            logs = np.full((3, lg.size), -np.inf)
            signs = np.zeros((3, lg.size))
            logs[0] = np.log(np.abs(self.diag), where=self.diag != 0,
                             out=np.full(lg.size, -np.inf)) + lg
            signs[0] = np.sign(self.diag)
            logs[1, 1:] = np.log(self.lower[1:], where=self.lower[1:] > 0,
                                 out=np.full(lg.size - 1, -np.inf)) + lg[:-1]
            signs[1, 1:] = (self.lower[1:] > 0).astype(float)
            logs[2, :-1] = np.log(self.upper[:-1], where=self.upper[:-1] > 0,
                                  out=np.full(lg.size - 1, -np.inf)) + lg[1:]
            signs[2, :-1] = (self.upper[:-1] > 0).astype(float)
        return _signed_lse(signs, logs)


def _signed_lse(signs: np.ndarray, logs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise sum of sign*exp(log) terms, returned as (sign, log)."""
    m = logs.max(axis=0)
    out_s = np.zeros(logs.shape[1])
    out_l = np.full(logs.shape[1], -np.inf)
    safe = m > -np.inf
    if np.any(safe):
        tot = (signs[:, safe] * np.exp(logs[:, safe] - m[safe])).sum(axis=0)
        nz = tot != 0.0
        idx = np.flatnonzero(safe)[nz]
        out_s[idx] = np.sign(tot[nz])
        out_l[idx] = m[safe][nz] + np.log(np.abs(tot[nz]))
    return out_s, out_l


def _signed_log_add(a: tuple[np.ndarray, np.ndarray],
                    b: tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    return _signed_lse(np.stack([a[0], b[0]]), np.stack([a[1], b[1]]))


def _resolve_d(n: int, d: int | None) -> int:
    if d is None:
        d = max(n // 2, 1)
    if d < 1:
        raise ValueError(f"truncation index must be >= 1, got d={d}")
    return d


def bracket_series(n: int, eta: complex, d: int | None = None) -> np.ndarray:
    """<L|T^m|R> for m = 0..n in one linear-domain pass."""
    d = _resolve_d(n, d)
    bands = _Bands(d, eta)
    v = np.zeros(d + 1)
    out = np.empty(n + 1)
    out[0] = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(1, n + 1):
            v = bands.matvec(v, 1.0)
            out[m] = v[0]
    return out


def defect_series(n: int, eta: complex, d: int | None = None) -> np.ndarray:
    """sum_k <L|T^{k-1} D T^{m-k}|R> for m = 0..n.

    Propagates the pair (v, w) with w' = |T| w + D v, v' = |T| v, which
    is the first-order expansion of (|T| + s D)^m in s.
    """
    d = _resolve_d(n, d)
    bands = _Bands(d, eta)
    vertex = _VertexBands(d, eta)
    v = np.zeros(d + 1)
    w = np.zeros(d + 1)
    out = np.empty(n + 1)
    out[0] = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(1, n + 1):
            w = bands.matvec(w, 0.0) + vertex.matvec(v)
            v = bands.matvec(v, 1.0)
            out[m] = w[0]
    return out


def bracket_LTnR_log(n: int, eta: complex, d: int | None = None) -> SignedLog:
    """<L|T^n|R> as a SignedLog; overflow-safe for |Delta| > 1."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    d = _resolve_d(n, d)
    bands = _Bands(d, eta)
    lg = np.full(d + 1, -np.inf)
    for _ in range(n):
        lg = bands.log_matvec(lg, 0.0)
    if lg[0] == -np.inf:
        return SignedLog(0.0, -math.inf)
    return SignedLog(1.0, float(lg[0]))


def bracket_LTnR(n: int, eta: complex, d: int | None = None,
                 log_domain: str = "auto") -> float | SignedLog:
    """<L|T^n|R> by iterated banded matrix-vector products.

    ``log_domain='off'`` returns a float and raises OverflowError when the
    value is not representable; 'on' always returns a SignedLog; 'auto'
    returns a float but falls back to a SignedLog on overflow.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if log_domain == "on":
        return bracket_LTnR_log(n, eta, d)
    val = float(bracket_series(n, eta, d)[n])
    if math.isfinite(val):
        return val
    if log_domain == "off":
        raise OverflowError(
            "<L|T^n|R> overflows a float; use log_domain='on'")
    return bracket_LTnR_log(n, eta, d)


def sum_defect_log(n: int, eta: complex, d: int | None = None) -> SignedLog:
    """Log-domain version of :func:`sum_defect` with exact sign tracking."""
    d = _resolve_d(n, d)
    bands = _Bands(d, eta)
    vertex = _VertexBands(d, eta)
    v_lg = np.full(d + 1, -np.inf)
    w_sg = np.zeros(d + 1)
    w_lg = np.full(d + 1, -np.inf)
    for _ in range(n):
        tw_sg, tw_lg = bands.signed_log_matvec(w_sg, w_lg)
        dv_sg, dv_lg = vertex.signed_log_matvec(v_lg)
        w_sg, w_lg = _signed_log_add((tw_sg, tw_lg), (dv_sg, dv_lg))
        v_lg = bands.log_matvec(v_lg, 0.0)
    if w_sg[0] == 0.0:
        return SignedLog(0.0, -math.inf)
    return SignedLog(float(w_sg[0]), float(w_lg[0]))


def sum_defect(n: int, eta: complex, d: int | None = None,
               log_domain: str = "auto") -> float | SignedLog:
    """sum_{k=1}^n <L|T^{k-1} D T^{n-k}|R> in O(n d) time and O(d) memory."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if log_domain == "on":
        return sum_defect_log(n, eta, d)
    val = float(defect_series(n, eta, d)[n])
    if math.isfinite(val):
        return val
    if log_domain == "off":
        raise OverflowError("defect sum overflows a float; use log_domain='on'")
    return sum_defect_log(n, eta, d)


# ---------------------------------------------------------------------------
# leading-order Fisher information
# ---------------------------------------------------------------------------

_PREFACTOR_DERIVS = {
    # d/dx of lambda*mu/J, as a function of (J, lam, mu)
    "lambda": lambda J, lam, mu: mu / J,
    "mu": lambda J, lam, mu: lam / J,
    "J": lambda J, lam, mu: -lam * mu / J ** 2,
}


def f0_x(params, parameter: str):
    """Leading-order Fisher information for x in {J, lambda, mu}.

    F_x^(0) = (d(lambda mu / J)/dx)^2 <L|T^n|R> / 2.  Returns a
    FisherEstimate; for |Delta| > 1 the value may only be representable
    through its ``log_value``.
    """
    from .fisher import FisherEstimate  # local import to avoid a cycle

    if parameter not in _PREFACTOR_DERIVS:
        raise ValueError(
            f"parameter must be one of J, lambda, mu (got {parameter!r}); "
            "use f0_delta for the anisotropy")
    pref = _PREFACTOR_DERIVS[parameter](params.j_coupling, params.lam, params.mu)
    br = bracket_LTnR_log(params.n, params.eta)
    if pref == 0.0 or br.sign == 0.0:
        return FisherEstimate(value=0.0, log_value=-math.inf,
                              method="leading-order", parameter=parameter,
                              params=params)
    log_f = 2 * math.log(abs(pref)) + br.log - math.log(2.0)
    value = math.exp(log_f) if log_f <= _LOG_MAX else math.inf
    return FisherEstimate(value=value, log_value=log_f, method="leading-order",
                          parameter=parameter, params=params)


def second_eta_derivative_bracket(n: int, eta: complex, d: int | None = None,
                                  method: str = "analytic",
                                  step: float = 1e-4) -> float:
    """d^2/dt^2 of <L|T^n|R> along the real parametrization of eta.

    For |Delta| < 1 the derivative is in eta itself; for |Delta| > 1 it
    is taken along the imaginary axis, i.e. in t with eta = i t, which
    equals -(d/d eta)^2.

    The default differentiates the band entries analytically and
    propagates (v, dv, d2v) in one pass; this stays exact even where the
    second derivative nearly cancels against the defect sum (the
    isotropic limit).  ``method='central'`` is the step-1e-4 stencil
    with a Richardson check, kept as an independent cross-check.
    """
    if method == "analytic":
        d = _resolve_d(n, d)
        bands = _Bands(d, eta)
        d1b, d2b = bands.t_derivative_bands()
        v = np.zeros(d + 1)
        dv = np.zeros(d + 1)
        d2v = np.zeros(d + 1)
        for _ in range(n):
            d2v = (bands.matvec(d2v, 0.0) + 2 * bands._band_apply(d1b, dv)
                   + bands._band_apply(d2b, v))
            dv = bands.matvec(dv, 0.0) + bands._band_apply(d1b, v)
            v = bands.matvec(v, 1.0)
        return float(d2v[0])
    if method != "central":
        raise ValueError(f"unknown method {method!r}")
    t0, easy_axis = _split_eta(eta)
    reconstruct = (lambda t: 1j * t) if easy_axis else (lambda t: complex(t))

    def d2(h):
        bp = bracket_series(n, reconstruct(t0 + h), d)[n]
        b0 = bracket_series(n, reconstruct(t0), d)[n]
        bm = bracket_series(n, reconstruct(abs(t0 - h)), d)[n]
        return (bp - 2 * b0 + bm) / h ** 2

    coarse = d2(step)
    fine = d2(step / 2)
    richardson = (4 * fine - coarse) / 3
    scale = max(abs(richardson), 1e-30)
    if abs(fine - coarse) / 3 > 1e-3 * scale + 1e-12:
        warnings.warn("second eta-derivative stencil poorly converged; "
                      f"estimates {coarse:.6g} vs {fine:.6g}")
    return float(richardson)


def f0_delta(params, d: int | None = None, method: str = "analytic"):
    """Leading-order Fisher information for the anisotropy Delta.

    F_Delta^(0) = lam^2 mu^2 / (2 J^2 |1 - Delta^2|) *
                  [ sum_defect + (1/4) d^2/dt^2 <L|T^n|R> ],

    with both pieces evaluated on the full (d = n//2) matrices and the
    second derivative taken along the real parametrization of eta.  The
    |1 - Delta^2| prefactor together with the sign carried by D keeps
    the expression positive on both sides of the isotropic point.  Near
    eta = 0 the two terms cancel to O(eta^2), which is why the second
    derivative is analytic by default.
    """
    from .fisher import FisherEstimate

    delta = params.delta
    if abs(abs(delta) - 1.0) < 1e-12:
        raise ValueError("f0_delta is singular at |Delta| = 1; "
                         "use isotropic_f_delta near the isotropic point")
    sd = sum_defect(params.n, params.eta, d, log_domain="off")
    d2 = second_eta_derivative_bracket(params.n, params.eta, d, method=method)
    pref = params.lam ** 2 * params.mu ** 2 / (
        2 * params.j_coupling ** 2 * abs(1 - delta ** 2))
    value = pref * (sd + 0.25 * d2)
    log_value = math.log(value) if value > 0 else -math.inf
    return FisherEstimate(value=value, log_value=log_value,
                          method="leading-order", parameter="Delta",
                          params=params)


# ---------------------------------------------------------------------------
# isotropic expansions
# ---------------------------------------------------------------------------

def isotropic_bracket_series(n: int, eta: float) -> float:
    """Small-eta expansion of <L|T^n|R> through eta^6."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    eta = float(np.real_if_close(eta))
    if abs(eta) * n >= 0.2:
        warnings.warn(f"|eta|*n = {abs(eta) * n:.3g} >= 0.2: outside the "
                      "validity window of the isotropic series")
    lead = n * (n - 1) / 8
    corr = (eta ** 2
            - eta ** 4 / 6 * (3 * n - 7)
            + eta ** 6 / 180 * (989 + 3 * n * (36 * n - 217)))
    return lead - n * (n - 1) * (n - 2) / 24 * corr


def isotropic_f_delta(params) -> float:
    """Isotropic-limit F_Delta^(0) = lam^2 mu^2/(96 J^2) n(n-1)(n-2)(3n-7 - ...)."""
    n = params.n
    eta = float(np.real_if_close(complex(params.eta)))
    if abs(eta) * n >= 0.2:
        warnings.warn(f"|eta|*n = {abs(eta) * n:.3g} >= 0.2: outside the "
                      "validity window of the isotropic series")
    pref = params.lam ** 2 * params.mu ** 2 / (96 * params.j_coupling ** 2)
    poly = 3 * n - 7 - eta ** 2 / 30 * (n - 3) * (261 * n - 799)
    return pref * n * (n - 1) * (n - 2) * poly


# ---------------------------------------------------------------------------
# Jordan structure of the truncated transfer matrix
# ---------------------------------------------------------------------------

@dataclass
class JordanData:
    """Jordan decomposition V^-1 T V = [[1,1],[0,1]] (+) diag(tau_j)."""

    taus: np.ndarray          # bulk eigenvalues, |tau_1| >= ... >= |tau_d|
    V: np.ndarray
    V_inv: np.ndarray
    psi_R: float
    psi: np.ndarray           # defective components psi_1..psi_d
    chi: float                # <L|V|L><R|V^-1|R>
    chi1: float               # <L|V^-1|R>
    residual: float           # ||V^-1 T V - Jordan form||_max


def defective_vector(ts: TransferSystem) -> tuple[float, np.ndarray]:
    """Components (psi_R, psi_1..psi_d) of the defective eigenvector.

    Solves (T - 1)|psi> = |L> through the closed-form recurrence with the
    continued fractions C_k eliminated: psi_1 = 2,
    psi_R = 2(d+1)/d * (1 - T_11) and
    psi_k = 2(d-k+1)/(d-k+2) * T_{k,k-1}/(1 - T_{k,k}) * psi_{k-1}.
    """
    d, T = ts.d, ts.T
    ix = lambda k: 1 + k
    psi = np.zeros(d)
    psi[0] = 2.0
    psi_R = 2 * (d + 1) / d * (1.0 - T[ix(1), ix(1)])
    for k in range(2, d + 1):
        denom = 1.0 - T[ix(k), ix(k)]
        if abs(denom) < 1e-14:
            raise ZeroDivisionError(
                f"1 - T_kk vanishes at k={k} (degenerate eta); the defective "
                "recurrence is singular here")
        psi[k - 1] = (2 * (d - k + 1) / (d - k + 2)
                      * T[ix(k), ix(k - 1)] / denom * psi[k - 2])
    return float(psi_R), psi


def jordan_decompose(ts: TransferSystem) -> JordanData:
    """Assemble the similarity V from the analytically known eigenstructure.

    The bulk remainder T' (rows/columns 1..d) is diagonalized numerically;
    each bulk eigenvector is lifted to T via the |L> admixture
    <1|tau'>/(2 tau - 2).  The defective pair at eigenvalue 1 is written
    down structurally (|L> and the defective vector) rather than detected
    numerically.
    """
    d, T = ts.d, ts.T
    Tb = T[2:, 2:]
    taus, vecs = np.linalg.eig(Tb)
    if np.max(np.abs(taus.imag)) < 1e-10:
        taus = taus.real
        vecs = vecs.real
    order = np.argsort(-np.abs(taus))
    taus = taus[order]
    vecs = vecs[:, order]
    if np.any(np.abs(taus - 1.0) < 1e-10):
        raise ValueError(
            "bulk transfer block has an eigenvalue 1: for rational eta/pi "
            "the truncation must satisfy d <= |p| - 1")
    dim = d + 2
    V = np.zeros((dim, dim), dtype=taus.dtype)
    V[0, 0] = 1.0
    psi_R, psi = defective_vector(ts)
    V[1, 1] = psi_R
    V[2:, 1] = psi
    V[0, 2:] = vecs[0, :] / (2 * taus - 2)
    V[2:, 2:] = vecs
    V_inv = np.linalg.inv(V)
    jordan = np.zeros((dim, dim), dtype=taus.dtype)
    jordan[0, 0] = jordan[1, 1] = 1.0
    jordan[0, 1] = 1.0
    jordan[2:, 2:] = np.diag(taus)
    residual = float(np.max(np.abs(V_inv @ T @ V - jordan)))
    chi = float(np.real(V[0, 0] * V_inv[1, 1]))
    chi1 = float(np.real(V_inv[0, 1]))
    return JordanData(taus=taus, V=V, V_inv=V_inv, psi_R=psi_R, psi=psi,
                      chi=chi, chi1=chi1, residual=residual)


def toeplitz_eigs_check(d: int) -> np.ndarray:
    """Numeric eigenvalues (ascending) of A = 1 - (shift + shift^T)/2.

    Analytically these are 1 - cos(j pi / (d+1)), j = 1..d.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    A = np.eye(d)
    off = -0.5 * np.ones(d - 1)
    A += np.diag(off, 1) + np.diag(off, -1)
    return np.sort(np.linalg.eigvalsh(A))


def toeplitz_eigs_analytic(d: int) -> np.ndarray:
    j = np.arange(1, d + 1)
    return np.sort(1 - np.cos(j * np.pi / (d + 1)))


# ---------------------------------------------------------------------------
# continued fractions
# ---------------------------------------------------------------------------

def continued_fraction_C(k: int) -> Fraction:
    """Closed form C_k = (k+2)/(2k+2), exact."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return Fraction(k + 2, 2 * k + 2)


def continued_fraction_C_recurrence(k: int) -> Fraction:
    """C_0 = 1, C_k = 1 - 1/(4 C_{k-1}), evaluated in exact arithmetic."""
    if k < 0:
        raise ValueError("k must be >= 0")
    c = Fraction(1)
    for _ in range(k):
        c = 1 - Fraction(1, 4) / c
    return c


# ---------------------------------------------------------------------------
# growth coefficients chi and xi
# ---------------------------------------------------------------------------

def _check_rational(delta: float, rational_eta: tuple[int, int]) -> tuple[int, int]:
    p, q = rational_eta
    if p < 2 or not 0 < q < abs(p):
        raise ValueError(f"need 0 < q < p with p >= 2, got (p, q) = {(p, q)}")
    if math.gcd(p, q) != 1:
        raise ValueError(f"(p, q) = {(p, q)} are not coprime")
    if abs(math.cos(q * math.pi / p) - delta) > 1e-12:
        raise ValueError(
            f"cos(q pi / p) = {math.cos(q * math.pi / p)!r} does not match "
            f"delta = {delta!r}")
    return p, q


def _fit_line(ns: np.ndarray, ys: np.ndarray) -> tuple[float, float, float]:
    """Least-squares slope, intercept and R^2 of ys against ns."""
    A = np.vstack([ns, np.ones_like(ns)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    fit = A @ coef
    ss_res = float(np.sum((ys - fit) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(coef[0]), float(coef[1]), r2


def chi_coefficient(delta: float, rational_eta: tuple[int, int] | None = None,
                    d_max: int = 400) -> tuple[float, float]:
    """(chi, chi_1) for the linear growth <L|T^n|R> = chi n + chi_1.

    chi = d/(2(d+1)) * 1/(1 - Delta^2) with d = |p| - 1 for rational
    eta/pi = q/p and d = d_max on the irrational pathway; chi_1 is the
    diagnostic constant <L|V^-1|R> from the Jordan similarity.
    """
    if not abs(delta) < 1:
        raise ValueError("chi is defined for |Delta| < 1")
    if rational_eta is not None:
        p, q = _check_rational(delta, rational_eta)
        d = abs(p) - 1
        eta = q * math.pi / p
    else:
        d = d_max
        eta = math.acos(delta)
    chi = d / (2 * (d + 1)) / (1 - delta ** 2)
    try:
        chi1 = jordan_decompose(build_transfer(d, eta)).chi1
    except ValueError:
        if rational_eta is not None:
            raise
        # a float delta can hit a rational eta/pi exactly (delta = 0 say),
        # where the oversized truncation is defective; chi1 is only a
        # diagnostic, so report it as unavailable
        chi1 = math.nan
    return chi, chi1


def chi_second_derivative(delta: float, d: int, step: float = 1e-4) -> float:
    """d^2 chi/d eta^2 of chi(eta) = d/(2(d+1))/sin^2(eta) by central difference.

    Closed form: d/(d+1) * (2 Delta^2 + 1)/(1 - Delta^2)^2.
    """
    eta = math.acos(delta)
    c = d / (2 * (d + 1))
    chi = lambda e: c / math.sin(e) ** 2
    return (chi(eta + step) - 2 * chi(eta) + chi(eta - step)) / step ** 2


def xi_coefficient(delta: float, n: int,
                   rational_eta: tuple[int, int] | None = None,
                   return_diagnostics: bool = False):
    """Growth coefficient xi of F_Delta^(0) = (lam mu / J)^2 xi n.

    Rational eta/pi = q/p: the transfer and vertex matrices are
    restricted to d = |p| - 1 (the transitions through |p| vanish in
    T^n), the defect-sum slope xi_1 is fitted over the window [n, 2n],
    and xi = (xi_1 - chi''/4) / (2 (1 - Delta^2)) with chi'' the closed
    form above.  The result is n-independent; callers probe several n
    and assert the spread.  This restricted combination is what the
    full-matrix quantity [sum_defect - (1/4) d^2 bracket / d eta^2]/n
    converges to as n grows, which the tests check.

    Irrational pathway (float delta): the full d = n//2 matrices are
    used and the n-dependent value

        xi(n) = [sum_defect(n) + (1/4) d^2/dt^2 <L|T^n|R>] / (2 |1-Delta^2| n)

    is returned, i.e. exactly f0_delta / (n (lam mu / J)^2).  Its growth
    (piecewise powers between n^2 and n^5, and an initial n^2 window
    close to rational points) is the quantity of interest.  The two
    pathways deliberately differ: at rational eta/pi the full Fisher
    information keeps a secular n^2 piece fed by paths dwelling on the
    absorbing state |p|, which the restriction removes; the restricted
    coefficient is the regularized linear rate, the irrational value is
    the literal one.
    """
    if not abs(delta) < 1:
        raise ValueError("xi is defined for |Delta| < 1")
    if n < 8:
        raise ValueError("need n >= 8 for a meaningful window")
    if rational_eta is not None:
        p, q = _check_rational(delta, rational_eta)
        d = abs(p) - 1
        eta = q * math.pi / p
        series = defect_series(2 * n, eta, d)
        ns = np.arange(n, 2 * n + 1)
        xi1, _, r2 = _fit_line(ns.astype(float), series[n:])
        if r2 < 1 - 1e-9:
            warnings.warn(f"defect-sum window fit not linear (R^2 = {r2}); "
                          "transients may not have decayed")
        cdd = chi_second_derivative(delta, d)
        xi = (xi1 - 0.25 * cdd) / (2 * (1 - delta ** 2))
        diag = {"route": "rational", "d": d, "xi1": xi1, "chi_dd": cdd, "r2": r2}
    else:
        eta = math.acos(delta)
        d = max(n // 2, 1)
        sd = float(defect_series(n, eta, d)[n])
        d2 = second_eta_derivative_bracket(n, eta, d)
        xi = (sd + 0.25 * d2) / (2 * abs(1 - delta ** 2) * n)
        diag = {"route": "irrational", "d": d, "sum_defect": sd, "d2_bracket": d2}
    if return_diagnostics:
        return xi, diag
    return xi


# ---------------------------------------------------------------------------
# easy-axis bounds
# ---------------------------------------------------------------------------

class EasyAxisBounds(NamedTuple):
    """log <L|T^n|R>, the single-path product and the factorial lower bound."""

    log_bracket: float
    log_path: float
    log_bound: float


def easy_axis_lower_bound(n: int, eta: complex) -> EasyAxisBounds:
    """Superexponential chain bound <= path <= bracket, all as natural logs.

    The single path climbs |R> -> |1> -> ... -> |n/2| and descends back,
    giving 2^-n prod_{k=1}^{n/2-1} sinh^2(k t) sinh^2((k+1) t); bounding
    sinh^2(y) >= y^2 yields t^{2(n-2)}/2^n ((n/2)! (n/2-1)!)^2.
    """
    t, easy_axis = _split_eta(eta)
    if not easy_axis or t <= 0:
        raise ValueError("easy-axis bound requires |Delta| > 1 (imaginary eta)")
    if n % 2 != 0 or n < 4:
        raise ValueError("the single-path estimate is for even n >= 4")
    log_bracket = bracket_LTnR_log(n, eta).log
    log_path = -n * math.log(2.0)
    for k in range(1, n // 2):
        log_path += 2 * (math.log(math.sinh(k * t)) + math.log(math.sinh((k + 1) * t)))
    log_bound = (2 * (n - 2) * math.log(t) - n * math.log(2.0)
                 + 2 * (math.lgamma(n // 2 + 1) + math.lgamma(n // 2)))
    return EasyAxisBounds(log_bracket=float(log_bracket), log_path=log_path,
                          log_bound=log_bound)
