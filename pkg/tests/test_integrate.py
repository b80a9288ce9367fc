"""Excision ladders, quadrature, decay fits, bound checks."""

import math

import pytest

from helpers import LI2_HALF, box_region, load_region, region_of
from logvol import (
    IntegrationError,
    LogForm,
    Polynomial,
    QuadConfig,
    RegionError,
    deformation_limit_check,
    excision_ladder,
    fit_decay_exponent,
    integrate_abs,
    integrate_log_form,
    integrate_mc,
    parse_poly,
    pushforward_bound_check,
    slice_decay_report,
)
from logvol.integrate import quadrature_rung, slice_region_and_form


def dlog2():
    return LogForm.dlog(2, 2, 0).wedge(LogForm.dlog(2, 2, 1))


# ---------------------------------------------------------------------------
# reference values


def test_interval_log():
    res = integrate_log_form(load_region("interval_half_one"), LogForm.dlog(1, 1, 0))
    assert res.value == pytest.approx(math.log(2), abs=1e-9)
    assert res.ladder.verdict == "converged"


def test_s_half_dilogarithm():
    res = integrate_log_form(load_region("s_half"), dlog2())
    assert res.value == pytest.approx(LI2_HALF, abs=1e-6)
    assert res.ladder.verdict == "converged"
    assert res.absolute == pytest.approx(res.value, abs=1e-6)  # positive integrand


def test_shifted_square_product():
    res = integrate_log_form(load_region("shifted_square"), dlog2())
    assert res.value == pytest.approx(math.log(2) ** 2, abs=1e-9)


def test_degree_mismatch_rejected():
    with pytest.raises(IntegrationError):
        integrate_log_form(load_region("s_half"), LogForm.dlog(2, 2, 0))


# ---------------------------------------------------------------------------
# absolute integrals


def test_abs_strips_sign():
    A = load_region("interval_half_one")
    form = LogForm.dlog(1, 1, 0).scale(-1)
    assert integrate_abs(A, form) == pytest.approx(math.log(2), abs=1e-9)


def test_abs_positive_integrand_matches():
    assert integrate_abs(load_region("s_half"), dlog2()) == pytest.approx(
        LI2_HALF, abs=1e-6
    )


def test_two_sided_interval_cancels_signed():
    A = region_of(
        1, 1, None,
        [(-1, 1)],
        cells=[["r1 + 1/2 <= 0", "-1 - r1 <= 0"], ["1/2 - r1 <= 0", "r1 - 1 <= 0"]],
    )
    form = LogForm.dlog(1, 1, 0)
    res = integrate_log_form(A, form)
    assert res.value == pytest.approx(0.0, abs=1e-9)
    assert res.absolute == pytest.approx(2 * math.log(2), abs=1e-9)


# ---------------------------------------------------------------------------
# ladders


def test_ladder_converges_on_s_half():
    lad = excision_ladder(load_region("s_half"), dlog2())
    assert lad.verdict == "converged"
    assert lad.limit == pytest.approx(LI2_HALF, abs=1e-4)


def test_ladder_diverges_on_box_with_log_squared_rungs():
    lad = excision_ladder(load_region("unit_box_p2"), dlog2())
    assert lad.verdict == "diverging"
    for eps, value, _ in lad.entries[5:]:
        assert value == pytest.approx(math.log(eps) ** 2, rel=1e-6)


def test_smooth_form_converges_immediately():
    A = box_region([(0, 1), (0, 1)])
    form = LogForm.term(2, 0, parse_poly("1 + x1^2", ["x1", "x2"]), (), (0, 1))
    lad = excision_ladder(A, form)
    assert lad.verdict == "converged"
    assert len(lad.entries) == 1  # no singular direction: settled at once
    assert lad.limit == pytest.approx(4.0 / 3.0, abs=1e-9)


def test_ladder_csv_shape():
    lad = excision_ladder(load_region("s_half"), dlog2())
    lines = lad.to_csv().strip().splitlines()
    assert lines[0] == "param,value,stderr"
    assert lines[-1].startswith("verdict,converged")
    assert len(lines) == len(lad.entries) + 2


def test_overlapping_cells_integrate_as_a_union():
    A = region_of(
        2, 0, None, [(0, 1), (0, 1)],
        cells=[
            ["-x1 <= 0", "x1 - 7/10 <= 0", "-x2 <= 0", "x2 - 1 <= 0"],
            ["3/10 - x1 <= 0", "x1 - 1 <= 0", "-x2 <= 0", "x2 - 1 <= 0"],
        ],
    )
    form = LogForm.term(2, 0, Polynomial.const(2, 1), (), (0, 1))
    assert integrate_log_form(A, form).value == pytest.approx(1.0, abs=1e-9)


def test_polynomial_coefficient_closed_form():
    # r1 dr1/r1 ^ dr2/r2 over the dilogarithm region: int_0^{1/2} ln(1/(2u)) du = 1/2
    w = dlog2().scale(parse_poly("r1", ["r1", "r2"]))
    res = integrate_log_form(load_region("s_half"), w)
    assert res.value == pytest.approx(0.5, abs=1e-6)


# ---------------------------------------------------------------------------
# invariants


def corpus_allowable():
    return [
        (load_region("s_half"), dlog2()),
        (load_region("s_one"), dlog2()),
        (load_region("shifted_square"), dlog2()),
        (
            load_region("triangle_p1"),
            LogForm.dlog(2, 1, 0).wedge(LogForm.dx(2, 1, 1)),
        ),
    ]


def test_allowable_implies_converged_box_diverges():
    for A, form in corpus_allowable():
        assert A.is_allowable().ok
        assert excision_ladder(A, form).verdict == "converged", A.name
    assert excision_ladder(load_region("unit_box_p2"), dlog2()).verdict == "diverging"


def test_triangle_p1_value():
    # fiber length along x2 equals r1, cancelling the 1/r1 singularity
    A = load_region("triangle_p1")
    form = LogForm.dlog(2, 1, 0).wedge(LogForm.dx(2, 1, 1))
    res = integrate_log_form(A, form)
    assert res.value == pytest.approx(1.0, abs=1e-6)


def test_triangle_inequality_on_every_result():
    for A, form in corpus_allowable():
        res = integrate_log_form(A, form)
        assert abs(res.value) <= res.absolute + res.error + 1e-9


def test_linearity_within_errors():
    A = load_region("s_half")
    f1 = dlog2()
    f2 = dlog2().scale(parse_poly("r1", ["r1", "r2"]))
    lhs = integrate_log_form(A, f1 + f2)
    r1 = integrate_log_form(A, f1)
    r2 = integrate_log_form(A, f2)
    tol = lhs.error + r1.error + r2.error + 1e-7
    assert lhs.value == pytest.approx(r1.value + r2.value, abs=tol)


def test_monotone_excision_for_nonnegative_integrand():
    lad = excision_ladder(load_region("s_half"), dlog2(), absolute=True)
    values = lad.values()
    for a, b in zip(values, values[1:]):
        assert b >= a - 1e-9


def test_additivity_under_hyperplane_splits():
    """Splitting any corpus region by a hyperplane preserves both integrals."""
    cases = corpus_allowable()
    cuts = ["r1 - 3/4", "r1 - 7/8", "r1 - 3/2", "x2 - 1/2"]
    checked = 0
    for (A, form), cut_text in zip(cases * 3, cuts * 3):
        names = A.var_names()
        try:
            cut = parse_poly(cut_text, names)
        except Exception:
            continue
        from logvol.region import Constraint

        left = A.add_cell_constraints([Constraint(cut)])
        right = A.add_cell_constraints([Constraint(-cut)])
        total = integrate_log_form(A, form)
        l_res = integrate_log_form(left, form)
        r_res = integrate_log_form(right, form)
        tol = total.error + l_res.error + r_res.error + 1e-6
        assert l_res.value + r_res.value == pytest.approx(total.value, abs=tol)
        l_abs = integrate_abs(left, form)
        r_abs = integrate_abs(right, form)
        assert l_abs + r_abs == pytest.approx(total.absolute, abs=tol + 1e-6)
        checked += 1
    assert checked >= 10


def test_quadrature_matches_mc_oracle():
    cfg = QuadConfig(mc_budget=200000)
    for A, form in [(load_region("s_half"), dlog2()),
                    (load_region("shifted_square"), dlog2())]:
        eps = 2.0**-6
        quad, _ = quadrature_rung(A, form, eps, cfg)
        mc, stderr = integrate_mc(A, form, eps, cfg)
        assert abs(mc - quad) <= 3 * stderr + 1e-6


# ---------------------------------------------------------------------------
# decay fits


def test_fit_exact_power_law():
    fit = fit_decay_exponent([(t, t) for t in (0.5, 0.25, 0.125, 0.0625)])
    assert fit.exponent == pytest.approx(1.0, abs=1e-12)
    assert fit.scale == pytest.approx(1.0, abs=1e-12)
    assert fit.residual == pytest.approx(0.0, abs=1e-12)


def test_fit_log_series():
    ts = [2.0**-k for k in range(3, 11)]
    fit = fit_decay_exponent([(t, -math.log(1 - t)) for t in ts])
    assert 0.95 <= fit.exponent <= 1.05


def test_fit_constant_flagged():
    fit = fit_decay_exponent([(t, 0.7) for t in (0.5, 0.25, 0.125, 0.0625)])
    assert abs(fit.exponent) < 0.05
    assert "no decay" in fit.flags


def test_fit_needs_four_entries():
    with pytest.raises(IntegrationError):
        fit_decay_exponent([(0.5, 1.0), (0.25, 0.5), (0.125, 0.0)])


# ---------------------------------------------------------------------------
# slice decay


def test_slice_decay_s_one():
    A = load_region("s_one")
    report = slice_decay_report(A, {0: 1}, LogForm.dlog(2, 2, 1))
    assert report.verdict == "decays to zero"
    assert 0.9 <= report.fit.exponent <= 1.1
    for t, vol in report.entries:
        assert vol == pytest.approx(-math.log(1 - t), abs=1e-6)


def test_slice_decay_identically_zero():
    A = load_region("s_half")
    report = slice_decay_report(A, {0: 1}, LogForm.dlog(2, 2, 1))
    assert report.verdict == "identically zero"


def test_slice_decay_gate_fires():
    with pytest.raises(RegionError, match="allowable"):
        slice_decay_report(load_region("unit_box_p2"), {0: 1}, LogForm.dlog(2, 2, 1))


def test_slice_decay_multivariable_monomial():
    """u = r1 r2 on the a=1 region: closed-form slice volumes."""
    A = load_region("s_one")
    report = slice_decay_report(
        A, {0: 1, 1: 1}, LogForm.dlog(2, 2, 0), ts=[2.0**-k for k in range(3, 9)]
    )
    assert 0.9 <= report.fit.exponent <= 1.15
    for t, vol in report.entries:
        root_m = (1 - math.sqrt(1 - 4 * t)) / 2
        root_p = (1 + math.sqrt(1 - 4 * t)) / 2
        expect = math.log(root_m / t) + math.log(1.0 / root_p)
        assert vol == pytest.approx(expect, abs=1e-5), t


def test_slice_form_restriction_drops_sliced_log():
    A = load_region("s_one")
    sliced, reduced = slice_region_and_form(A, {0: 1}, dlog2(), 0.25)
    assert reduced.is_zero()  # dr1/r1 restricts to zero on {r1 = t}


def test_unsupported_monomial_exponent():
    A = load_region("s_one")
    with pytest.raises(IntegrationError, match="unit exponent"):
        slice_region_and_form(A, {0: 2, 1: 2}, LogForm.dlog(2, 2, 1), 0.25)


# ---------------------------------------------------------------------------
# pushforward bound


def test_bound_square_map_on_unit_interval():
    S = region_of(1, 0, ["-x1 <= 0", "x1 - 1 <= 0"], [(0, 1)])
    f = parse_poly("x1^2", ["x1"])
    rep = pushforward_bound_check(S, [f], Polynomial.const(1, 1))
    assert rep.verdict == "pass"
    assert rep.lhs == pytest.approx(1.0, abs=1e-6)
    assert rep.delta == 1


def test_bound_square_map_on_symmetric_interval():
    S = region_of(1, 0, ["-1 - x1 <= 0", "x1 - 1 <= 0"], [(-1, 1)])
    f = parse_poly("x1^2", ["x1"])
    rep = pushforward_bound_check(S, [f], Polynomial.const(1, 1))
    assert rep.verdict == "pass"
    assert rep.lhs == pytest.approx(0.0, abs=1e-6)  # odd integrand cancels
    assert rep.delta == 2


def test_bound_three_sheets():
    # x (x - 7/10)(x - 4/5) folds [0, 1] three times over part of its image
    S = region_of(1, 0, ["-x1 <= 0", "x1 - 1 <= 0"], [(0, 1)])
    f = parse_poly("x1^3 - 3/2*x1^2 + 14/25*x1", ["x1"])
    rep = pushforward_bound_check(S, [f], Polynomial.const(1, 1))
    assert rep.verdict == "pass"
    assert rep.delta == 3
    assert rep.lhs == pytest.approx(0.06, abs=1e-6)  # f(1) - f(0)


def test_bound_zero_coefficient():
    S = region_of(1, 0, ["-x1 <= 0", "x1 - 1 <= 0"], [(0, 1)])
    f = parse_poly("x1", ["x1"])
    rep = pushforward_bound_check(S, [f], Polynomial.zero(1))
    assert rep.verdict == "pass"
    assert rep.lhs == pytest.approx(0.0, abs=1e-12)
    assert rep.rhs == pytest.approx(0.0, abs=1e-9)


# ---------------------------------------------------------------------------
# deformation limits


def test_deformation_shift_family():
    S = region_of(1, 0, ["-x1 <= 0", "x1 - 1 <= 0"], [(0, 1)])
    # h_t(x) = x + t, psi = y dy: int = 1/2 + t
    comps = [parse_poly("x1 + x2", ["x1", "x2"])]  # x2 is the parameter slot
    psi = LogForm.term(1, 0, Polynomial.var(1, 0), (), (0,))
    ladder, v0 = deformation_limit_check(S, comps, psi)
    assert v0 == pytest.approx(0.5, abs=1e-9)
    for t, value, _ in ladder.entries:
        assert value == pytest.approx(0.5 + t, abs=1e-9)
    assert ladder.verdict == "converged"
    assert ladder.limit == pytest.approx(0.5, abs=1e-3)


def test_deformation_constant_family():
    S = region_of(1, 0, ["-x1 <= 0", "x1 - 1 <= 0"], [(0, 1)])
    comps = [parse_poly("x1", ["x1", "x2"])]
    psi = LogForm.term(1, 0, Polynomial.var(1, 0), (), (0,))
    ladder, v0 = deformation_limit_check(S, comps, psi)
    assert ladder.verdict == "converged"
    assert ladder.limit == pytest.approx(v0, abs=1e-12)
