import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sirkit.errors import DomainError
from sirkit.filter_design import return_loss_from_ripple
from sirkit.network import BandSpec, FrequencyGrid
from sirkit.tuning import (
    CouplingModel,
    TuneSpec,
    apply_design,
    calibrate_coupling,
    coupling_to_gap,
    design_vector,
    gap_to_coupling,
    nelder_mead,
    objective,
    tune,
)

MODEL = CouplingModel(0.5, 1e-3)


def test_calibration_golden():
    m = calibrate_coupling([(1e-3, 0.1), (2e-3, 0.05)])
    assert m.s0 == pytest.approx(1.4427e-3, rel=1e-4)
    assert m.k0 == pytest.approx(0.2, rel=1e-12)


@settings(max_examples=40)
@given(k0=st.floats(0.05, 1.0), s0=st.floats(1e-4, 5e-3))
def test_calibration_recovers_exact_model(k0, s0):
    truth = CouplingModel(k0, s0)
    samples = [(s, gap_to_coupling(s, truth)) for s in (0.2e-3, 0.7e-3, 1.5e-3)]
    m = calibrate_coupling(samples)
    assert m.k0 == pytest.approx(k0, rel=1e-9)
    assert m.s0 == pytest.approx(s0, rel=1e-9)


def test_calibration_errors():
    with pytest.raises(ValueError):
        calibrate_coupling([(1e-3, 0.1)])
    with pytest.raises(DomainError):
        calibrate_coupling([(1e-3, 0.1), (2e-3, 0.0)])
    with pytest.raises(ValueError, match="degenerate"):
        calibrate_coupling([(1e-3, 0.1), (1e-3, 0.05)])
    with pytest.raises(DomainError):
        calibrate_coupling([(1e-3, 0.05), (2e-3, 0.1)])


@given(k=st.floats(1e-4, 0.5))
def test_gap_round_trip(k):
    assert gap_to_coupling(coupling_to_gap(k, MODEL), MODEL) == pytest.approx(k, rel=1e-12)


def test_gap_domain():
    with pytest.raises(DomainError):
        coupling_to_gap(0.6, MODEL)
    with pytest.raises(DomainError):
        gap_to_coupling(-1e-3, MODEL)


def test_model_dict_round_trip():
    assert CouplingModel.from_dict(MODEL.to_dict()) == MODEL


def test_apply_design_length(three_pole):
    with pytest.raises(ValueError):
        apply_design((1e-3,), MODEL, three_pole)
    plan = apply_design(design_vector([1e-3, 2e-3], [1e6, 0, -1e6]), MODEL, three_pole)
    assert plan.k_adj == pytest.approx((gap_to_coupling(1e-3, MODEL), gap_to_coupling(2e-3, MODEL)))
    assert plan.f_offsets == (1e6, 0.0, -1e6)


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def test_nelder_mead_minimises_rosenbrock():
    r = nelder_mead(rosenbrock, (-1.2, 1.0), (1.0, 1.0), budget=2000, step=0.5)
    assert r.converged
    assert r.variables == pytest.approx((1.0, 1.0), abs=1e-3)


def test_nelder_mead_trace_is_monotone_and_deterministic():
    a = nelder_mead(rosenbrock, (-1.2, 1.0), (1.0, 1.0), budget=300, step=0.5)
    b = nelder_mead(rosenbrock, (-1.2, 1.0), (1.0, 1.0), budget=300, step=0.5)
    assert a == b
    assert len(a.trace) == a.iterations
    assert all(x >= y for x, y in zip(a.trace, a.trace[1:]))


def test_nelder_mead_budget_exhaustion():
    r = nelder_mead(rosenbrock, (-1.2, 1.0), (1.0, 1.0), budget=5, step=0.5)
    assert not r.converged
    assert r.iterations == 5


def recovery_case(three_pole):
    f0, fbw = three_pole.f0, three_pole.fbw
    lo = f0 * (math.sqrt(1 + fbw**2 / 4) - fbw / 2)
    band = BandSpec(lo, lo + fbw * f0, lo - 0.2e9, lo + fbw * f0 + 0.2e9)
    spec = TuneSpec(band, max_il_db=-0.1005, min_rl_db=return_loss_from_ripple(0.1) + 0.01, min_rejection_db=-12.0)
    ideal = [coupling_to_gap(k, MODEL) for k in three_pole.k_adj]
    return spec, ideal


def test_ideal_design_is_feasible(three_pole):
    spec, ideal = recovery_case(three_pole)
    grid = FrequencyGrid.from_step(spec.band.stop_lo, spec.band.stop_hi, 1e6)
    assert objective(design_vector(ideal), spec, MODEL, three_pole, grid) == 0.0
    r = tune(design_vector(ideal), spec, MODEL, three_pole, budget=10, grid=grid)
    assert r.converged and r.residual == 0.0 and r.iterations == 0


@pytest.mark.parametrize(
    "factors,offsets,budget",
    [((1.15, 0.88), None, 500), ((0.85, 1.1), None, 500), ((1.15, 0.88), (2e6, -1.5e6, 1e6), 3000)],
)
def test_recovers_perturbed_three_pole(three_pole, factors, offsets, budget):
    spec, ideal = recovery_case(three_pole)
    start = design_vector([g * a for g, a in zip(ideal, factors)], offsets)
    r = tune(start, spec, MODEL, three_pole, budget=budget)
    assert r.converged
    assert r.residual < 1e-8
    np.testing.assert_allclose(r.couplings(MODEL, 3), three_pole.k_adj, rtol=0.02)


def test_infeasible_spec_exhausts_budget(three_pole):
    spec, ideal = recovery_case(three_pole)
    impossible = TuneSpec(spec.band, max_il_db=-0.001, min_rl_db=-60.0, min_rejection_db=-200.0)
    r = tune(design_vector(ideal), impossible, MODEL, three_pole, budget=40)
    assert not r.converged
    assert r.residual > 0
    assert all(x >= y for x, y in zip(r.trace, r.trace[1:]))


def test_objective_penalises_negative_gap(three_pole):
    spec, ideal = recovery_case(three_pole)
    grid = FrequencyGrid.from_step(spec.band.stop_lo, spec.band.stop_hi, 1e6)
    assert objective(design_vector([-1e-3, ideal[1]]), spec, MODEL, three_pole, grid) > 1.0


def test_tune_spec_validation(three_pole):
    spec, _ = recovery_case(three_pole)
    with pytest.raises(ValueError):
        TuneSpec(spec.band, math.nan, -10, -20)
    with pytest.raises(ValueError):
        TuneSpec(spec.band, -1, -10, -20, w_il=-1)
    with pytest.raises(ValueError):
        tune((1e-3, 1e-3, 0, 0, 0), spec, MODEL, three_pole, budget=0)
