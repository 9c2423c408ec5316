"""Chebyshev prototypes, coupling plans and the coupling-matrix response engine.

Normalisation (used by every formula below).  For an N-pole plan with
fractional bandwidth ``fbw``, each resonator i has normalised detuning

    p_i(f) = j*(f/f_i - f_i/f)/fbw + 1/(fbw*qu)

where f_i = f0 + offset_i.  With normalised external Qs ``q1 = qe_in*fbw``
and ``qn = qe_out*fbw`` and normalised couplings ``m = k/fbw``, the loop
matrix is the tridiagonal

    A = diag(p_i) + diag(1/q1, 0, ..., 0, 1/qn) - j*m    (m symmetric, zero diagonal)

and the scattering parameters are

    S21 = 2/sqrt(q1*qn) * inv(A)[n, 1]
    S11 = 1 - (2/q1) * inv(A)[1, 1]
    S22 = 1 - (2/qn) * inv(A)[n, n]

This is the lowpass-to-bandpass mapping of N synchronously tuned resonators
coupled through frequency-invariant inverters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import SolverError
from .network import FrequencyGrid, TwoPortSweep


@dataclass(frozen=True)
class PrototypeTable:
    n: int
    ripple_db: float
    g: tuple

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(float(x) for x in self.g))
        if len(self.g) != self.n + 2:
            raise ValueError("prototype needs n + 2 g-values")
        if any(x <= 0 for x in self.g):
            raise ValueError("g-values must be > 0")

    @property
    def elements(self) -> tuple:
        """g1..gn"""
        return self.g[1:-1]


def ripple_from_return_loss(rl_db: float) -> float:
    """Passband ripple (dB) of a Chebyshev response whose reflection peaks at -rl_db."""
    x = 10 ** (-abs(rl_db) / 10)
    eps2 = x / (1 - x)
    return 10 * math.log10(1 + eps2)


def return_loss_from_ripple(ripple_db: float) -> float:
    """Peak in-band |S11| in dB (negative) for a given ripple."""
    return 10 * math.log10(1 - 10 ** (-ripple_db / 10))


def chebyshev_prototype(n: int, ripple_db: float) -> PrototypeTable:
    if n < 1:
        raise ValueError("order must be >= 1")
    if not ripple_db > 0:
        raise ValueError("ripple_db must be > 0")
    beta = math.log(1 / math.tanh(ripple_db / 17.37))
    gamma = math.sinh(beta / (2 * n))
    a = [math.sin((2 * k - 1) * math.pi / (2 * n)) for k in range(1, n + 1)]
    b = [gamma**2 + math.sin(k * math.pi / n) ** 2 for k in range(1, n + 1)]
    g = [1.0, 2 * a[0] / gamma]
    for k in range(2, n + 1):
        g.append(4 * a[k - 2] * a[k - 1] / (b[k - 2] * g[k - 1]))
    g.append(1.0 if n % 2 else 1 / math.tanh(beta / 4) ** 2)
    return PrototypeTable(n=n, ripple_db=ripple_db, g=tuple(g))


@dataclass(frozen=True)
class FilterPlan:
    f0: float
    fbw: float
    proto: PrototypeTable
    k_adj: tuple
    qe_in: float
    qe_out: float
    qu: float = math.inf
    f_offsets: Optional[tuple] = None  # per-resonator detuning in Hz

    def __post_init__(self):
        object.__setattr__(self, "k_adj", tuple(float(k) for k in self.k_adj))
        if self.f_offsets is not None:
            object.__setattr__(self, "f_offsets", tuple(float(x) for x in self.f_offsets))
            if len(self.f_offsets) != self.n:
                raise ValueError("f_offsets needs one entry per resonator")
        if not 0 < self.fbw < 1:
            raise ValueError("fbw must lie in (0, 1)")
        if len(self.k_adj) != self.n - 1:
            raise ValueError(f"expected {self.n - 1} couplings, got {len(self.k_adj)}")
        if any(k <= 0 for k in self.k_adj):
            raise ValueError("couplings must be > 0")
        if not (self.qe_in > 0 and self.qe_out > 0):
            raise ValueError("external Qs must be > 0")
        if not self.qu > 0:
            raise ValueError("qu must be > 0 (use inf for lossless)")

    @property
    def n(self) -> int:
        return self.proto.n

    def with_qu(self, qu: float) -> "FilterPlan":
        return replace(self, qu=qu)

    def to_dict(self) -> dict:
        return {
            "order": self.n,
            "f0_hz": self.f0,
            "fbw": self.fbw,
            "ripple_db": self.proto.ripple_db,
            "g": list(self.proto.g),
            "k_adj": list(self.k_adj),
            "qe_in": self.qe_in,
            "qe_out": self.qe_out,
            "qu": None if math.isinf(self.qu) else self.qu,
            "f_offsets_hz": None if self.f_offsets is None else list(self.f_offsets),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FilterPlan":
        proto = PrototypeTable(n=int(d["order"]), ripple_db=float(d["ripple_db"]), g=tuple(d["g"]))
        qu = d.get("qu")
        offs = d.get("f_offsets_hz")
        return cls(
            f0=float(d["f0_hz"]), fbw=float(d["fbw"]), proto=proto, k_adj=tuple(d["k_adj"]),
            qe_in=float(d["qe_in"]), qe_out=float(d["qe_out"]),
            qu=math.inf if qu is None else float(qu),
            f_offsets=None if offs is None else tuple(offs),
        )


def coupling_plan(proto: PrototypeTable, f0: float, fbw: float, qu: float = math.inf) -> FilterPlan:
    if not 0 < fbw < 1:
        raise ValueError("fbw must lie in (0, 1)")
    g = proto.g
    n = proto.n
    k = tuple(fbw / math.sqrt(g[i] * g[i + 1]) for i in range(1, n))
    return FilterPlan(
        f0=f0, fbw=fbw, proto=proto, k_adj=k,
        qe_in=g[0] * g[1] / fbw, qe_out=g[n] * g[n + 1] / fbw, qu=qu,
    )


def band_plan(n: int, f_lo: float, f_hi: float, ripple_db: float, qu: float = math.inf) -> FilterPlan:
    """Plan centred on the geometric mean of the band edges."""
    f0 = math.sqrt(f_lo * f_hi)
    return coupling_plan(chebyshev_prototype(n, ripple_db), f0, (f_hi - f_lo) / f0, qu)


def _tridiag_solve_e1(diag, off):
    """Solve A x = e1 for every column of ``diag`` (n, nf) with A symmetric tridiagonal.

    ``off`` is (n-1,) and shared by all frequencies.  Returns x of shape (n, nf).
    Thomas algorithm without pivoting.  On a zero pivot returns
    ``(None, indices_of_bad_frequencies)``.
    """
    n, nf = diag.shape
    c = np.empty((max(n - 1, 0), nf), dtype=complex)
    d = np.zeros((n, nf), dtype=complex)
    piv = diag[0].copy()
    bad = piv == 0
    if np.any(bad):
        return None, np.flatnonzero(bad)
    if n > 1:
        c[0] = off[0] / piv
    d[0] = 1.0 / piv
    for i in range(1, n):
        piv = diag[i] - off[i - 1] * c[i - 1]
        bad = piv == 0
        if np.any(bad):
            return None, np.flatnonzero(bad)
        if i < n - 1:
            c[i] = off[i] / piv
        d[i] = (0.0 - off[i - 1] * d[i - 1]) / piv
    x = d
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x, None


def loop_matrix_diagonal(plan: FilterPlan, f: np.ndarray) -> np.ndarray:
    """Diagonal of A, shape (n, nf), including the terminations."""
    n = plan.n
    f = np.asarray(f, dtype=float)
    offs = np.zeros(n) if plan.f_offsets is None else np.asarray(plan.f_offsets)
    fi = (plan.f0 + offs)[:, None]
    loss = 0.0 if math.isinf(plan.qu) else 1.0 / (plan.fbw * plan.qu)
    diag = 1j * (f[None, :] / fi - fi / f[None, :]) / plan.fbw + loss
    diag[0] += 1.0 / (plan.qe_in * plan.fbw)
    diag[-1] += 1.0 / (plan.qe_out * plan.fbw)
    return diag


def frequency_response(plan: FilterPlan, grid: FrequencyGrid, z_ref: float = 50.0) -> TwoPortSweep:
    """S-parameters of ``plan`` on ``grid`` (see module docstring for the model)."""
    f = grid.points
    q1 = plan.qe_in * plan.fbw
    qn = plan.qe_out * plan.fbw
    diag = loop_matrix_diagonal(plan, f)
    off = -1j * np.asarray(plan.k_adj, dtype=complex) / plan.fbw
    x, bad = _tridiag_solve_e1(diag, off)
    if x is None:
        raise SolverError(f"singular coupling matrix at f = {f[bad[0]]:.9g} Hz")
    # A is symmetric, so inv(A)[n,1] = inv(A)[1,n] and S22 needs the e_n solve:
    # reverse the resonator order and reuse the same routine.
    xr, bad = _tridiag_solve_e1(diag[::-1].copy(), off[::-1].copy())
    if xr is None:
        raise SolverError(f"singular coupling matrix at f = {f[bad[0]]:.9g} Hz")
    s21 = 2.0 / math.sqrt(q1 * qn) * x[-1]
    s11 = 1.0 - 2.0 / q1 * x[0]
    s22 = 1.0 - 2.0 / qn * xr[0]
    return TwoPortSweep(grid=grid, s11=s11, s21=s21, s12=s21, s22=s22, z_ref=z_ref)


def midband_il_estimate(proto: PrototypeTable, fbw: float, qu: float) -> float:
    """Dissipation loss at band centre, in dB as a positive number."""
    if math.isinf(qu):
        return 0.0
    if not qu > 0:
        raise ValueError("qu must be > 0")
    return 4.343 * sum(proto.elements) / (fbw * qu)
