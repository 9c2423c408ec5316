"""Gap-to-coupling surrogate and Nelder-Mead tuning of a coupled-resonator filter.

The design vector is ``[gap_1 .. gap_{n-1}, offset_1 .. offset_n]``: gaps
between neighbouring resonators in m, then each resonator's detuning from
the plan centre frequency in Hz.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import DomainError
from .filter_design import FilterPlan, frequency_response
from .network import BandSpec, FrequencyGrid, passband_metrics


@dataclass(frozen=True)
class CouplingModel:
    """k(s) = k0 * exp(-s / s0)"""

    k0: float
    s0: float

    def __post_init__(self):
        if not (self.k0 > 0 and self.s0 > 0):
            raise ValueError("k0 and s0 must be > 0")

    def to_dict(self):
        return {"k0": self.k0, "s0_m": self.s0}

    @classmethod
    def from_dict(cls, d):
        return cls(k0=float(d["k0"]), s0=float(d["s0_m"]))


def calibrate_coupling(samples: Sequence) -> CouplingModel:
    """Least-squares fit of ln k = ln k0 - s/s0 to ``(gap_m, k)`` samples."""
    if len(samples) < 2:
        raise ValueError("need at least 2 (gap, k) samples")
    s = np.array([float(a) for a, _ in samples])
    k = np.array([float(b) for _, b in samples])
    if np.any(k <= 0):
        raise DomainError("coupling samples must be > 0")
    if len(np.unique(s)) != len(s):
        raise ValueError("degenerate input: coupling samples need distinct gaps")
    design = np.column_stack([np.ones_like(s), s])
    (ln_k0, slope), *_ = np.linalg.lstsq(design, np.log(k), rcond=None)
    if not slope < 0:
        raise DomainError("coupling does not decay with gap; exponential model rejected")
    return CouplingModel(k0=math.exp(ln_k0), s0=-1.0 / slope)


def gap_to_coupling(s: float, model: CouplingModel) -> float:
    if s < 0:
        raise DomainError("gap must be >= 0")
    return model.k0 * math.exp(-s / model.s0)


def coupling_to_gap(k: float, model: CouplingModel) -> float:
    """Inverse of :func:`gap_to_coupling`; requires 0 < k <= k0."""
    if not 0 < k <= model.k0:
        raise DomainError(f"coupling {k:g} outside (0, k0={model.k0:g}]")
    return model.s0 * math.log(model.k0 / k)


@dataclass(frozen=True)
class TuneSpec:
    band: BandSpec
    max_il_db: float  # worst in-band |S21| must stay above this
    min_rl_db: float  # worst in-band |S11| must stay below this
    min_rejection_db: float  # stopband |S21| must stay below this
    w_il: float = 1.0
    w_rl: float = 1.0
    w_rejection: float = 1.0
    rejection_threshold_db: float = -60.0

    def __post_init__(self):
        for name in ("max_il_db", "min_rl_db", "min_rejection_db"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if min(self.w_il, self.w_rl, self.w_rejection) < 0:
            raise ValueError("weights must be >= 0")


@dataclass
class TuneResult:
    variables: tuple
    residual: float
    iterations: int
    converged: bool
    evaluations: int = 0
    trace: List[float] = field(default_factory=list)  # best residual after each iteration

    def couplings(self, model: CouplingModel, n: int) -> tuple:
        return tuple(gap_to_coupling(max(s, 0.0), model) for s in self.variables[: n - 1])


def design_vector(gaps: Sequence[float], offsets: Optional[Sequence[float]] = None) -> tuple:
    gaps = [float(s) for s in gaps]
    if offsets is None:
        offsets = [0.0] * (len(gaps) + 1)
    return tuple(gaps) + tuple(float(o) for o in offsets)


def apply_design(x: Sequence[float], model: CouplingModel, template: FilterPlan) -> FilterPlan:
    """FilterPlan realised by design vector ``x`` (negative gaps clip to 0)."""
    n = template.n
    if len(x) != 2 * n - 1:
        raise ValueError(f"design vector for {n} resonators needs {2 * n - 1} entries, got {len(x)}")
    k = tuple(gap_to_coupling(max(s, 0.0), model) for s in x[: n - 1])
    return replace(template, k_adj=k, f_offsets=tuple(x[n - 1 :]))


def default_grid(band: BandSpec, points_in_band: int = 200) -> FrequencyGrid:
    if band.stop_hi <= band.stop_lo:
        raise ValueError("band has no span")
    step = (band.f_hi - band.f_lo) / points_in_band
    return FrequencyGrid.from_step(band.stop_lo, band.stop_hi, step)


def objective(x, spec: TuneSpec, model: CouplingModel, template: FilterPlan, grid: FrequencyGrid) -> float:
    """Weighted squared hinge on IL, RL and stopband violations; 0 iff spec met."""
    n = template.n
    negative = sum(min(s, 0.0) ** 2 for s in x[: n - 1]) / model.s0**2
    plan = apply_design(x, model, template)
    m = passband_metrics(frequency_response(plan, grid), spec.band, spec.rejection_threshold_db)
    v_il = max(0.0, spec.max_il_db - m.il_worst_db)
    v_rl = max(0.0, m.rl_worst_db - spec.min_rl_db)
    floor = m.rejection_floor_db
    v_rej = 0.0 if floor is None else max(0.0, floor - spec.min_rejection_db)
    return spec.w_il * v_il**2 + spec.w_rl * v_rl**2 + spec.w_rejection * v_rej**2 + 1e3 * negative


F_TOL = 1e-8


def nelder_mead(
    func: Callable,
    x0: Sequence[float],
    scale: Sequence[float],
    budget: int,
    f_tol: float = F_TOL,
    x_tol: float = 1e-6,
    step: float = 0.05,
) -> TuneResult:
    """Deterministic Nelder-Mead on ``x = scale * z`` starting from z0 = x0/scale.

    The initial simplex is z0 plus ``step`` along each unit axis.  Vertices
    with equal values keep construction order.  Stops when the best value
    drops below ``f_tol`` or every vertex lies within ``x_tol`` (in scaled
    coordinates) of the best one.
    """
    scale = np.asarray(scale, dtype=float)
    z0 = np.asarray(x0, dtype=float) / scale
    dim = z0.size
    evals = 0

    def fz(z):
        nonlocal evals
        evals += 1
        return float(func(tuple(z * scale)))

    f0 = fz(z0)
    if f0 < f_tol:
        return TuneResult(tuple(z0 * scale), f0, 0, True, evals, [])

    counter = 0
    # vertex = (value, construction id, point)
    verts = [(f0, counter, z0)]
    for i in range(dim):
        counter += 1
        z = z0.copy()
        z[i] += step
        verts.append((fz(z), counter, z))

    def add(value, z):
        nonlocal counter
        counter += 1
        return (value, counter, z)

    trace = []
    converged = False
    iterations = 0
    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    while True:
        verts.sort(key=lambda v: (v[0], v[1]))
        best = verts[0]
        diameter = max(np.max(np.abs(v[2] - best[2])) for v in verts[1:])
        if best[0] < f_tol or diameter < x_tol:
            converged = True
            break
        if iterations >= budget:
            break
        iterations += 1

        centroid = np.mean([v[2] for v in verts[:-1]], axis=0)
        worst = verts[-1]
        zr = centroid + alpha * (centroid - worst[2])
        fr = fz(zr)
        if fr < best[0]:
            ze = centroid + gamma * (zr - centroid)
            fe = fz(ze)
            verts[-1] = add(fe, ze) if fe < fr else add(fr, zr)
        elif fr < verts[-2][0]:
            verts[-1] = add(fr, zr)
        else:
            if fr < worst[0]:
                zc = centroid + rho * (zr - centroid)
            else:
                zc = centroid + rho * (worst[2] - centroid)
            fc = fz(zc)
            if fc < min(fr, worst[0]):
                verts[-1] = add(fc, zc)
            else:
                shrunk = [best]
                for v in verts[1:]:
                    z = best[2] + sigma * (v[2] - best[2])
                    shrunk.append(add(fz(z), z))
                verts = shrunk
        trace.append(min(v[0] for v in verts))

    verts.sort(key=lambda v: (v[0], v[1]))
    best = verts[0]
    return TuneResult(tuple(best[2] * scale), best[0], iterations, converged, evals, trace)


def tune(
    initial: Sequence[float],
    spec: TuneSpec,
    model: CouplingModel,
    plan_template: FilterPlan,
    budget: int,
    grid: Optional[FrequencyGrid] = None,
) -> TuneResult:
    """Adjust gaps and resonator offsets until the modelled response meets ``spec``."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    n = plan_template.n
    x0 = [float(v) for v in initial]
    apply_design(x0, model, plan_template)  # validates length and couplings
    grid = grid or default_grid(spec.band)
    fallback = [model.s0] * (n - 1) + [1e-3 * plan_template.f0] * n
    scale = [abs(v) if v != 0 else fb for v, fb in zip(x0, fallback)]

    def func(x):
        return objective(x, spec, model, plan_template, grid)

    # A collapsed simplex with a nonzero residual is restarted from its best
    # vertex while budget remains.
    result = nelder_mead(func, x0, scale, budget)
    while not (result.residual < F_TOL) and result.converged and result.iterations < budget:
        again = nelder_mead(func, result.variables, scale, budget - result.iterations)
        improved = again.residual < result.residual
        result = TuneResult(
            variables=again.variables if improved else result.variables,
            residual=min(again.residual, result.residual),
            iterations=result.iterations + again.iterations,
            converged=again.converged,
            evaluations=result.evaluations + again.evaluations,
            trace=result.trace + [min(v, result.residual) for v in again.trace],
        )
        if not improved:
            break
    result.converged = result.residual < F_TOL
    return result
