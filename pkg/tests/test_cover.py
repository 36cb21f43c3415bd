#!/usr/bin/env python3
"""
Test grid covers, sign tuples, branch reconstruction and solution-set covers
"""

import math
import sys
from pathlib import Path

import pytest

# Add parent directory to path so we can import the package
sys.path.insert(0, str(Path(__file__).parent.parent))

from scl_entropy import (
    CoverageFailure,
    KindError,
    ParamError,
    PiecewiseConstantFn,
    SignTuple,
    SupportError,
    analytic_upper_bound,
    build_witness_family,
    cover_solution_set,
    evolve,
    l1_distance,
    make_grid_cover_spec,
    project_PN,
    reconstruct_T_iota,
    registered_flux,
)
from scl_entropy.cover import (
    GridCover,
    GridCoverSpec,
    build_grid_cover,
    calibrate_C1,
    projection_error_bound,
    pullback_estimate,
    quantize,
    sign_jump_tv_check,
    solution_bounds,
)
from scl_entropy.experiments import check_reconstruction, sample_family


def test_grid_cover_spec():
    print("🧪 Testing grid cover parameters...")
    spec = make_grid_cover_spec(3.0, 1.0, 1.0)
    assert spec.log2_cardinality_bound == pytest.approx(144.0)
    assert spec.N == 24

    spec = make_grid_cover_spec(2.0, 1.0, 0.2)
    assert spec.N >= 80
    assert spec.min_cells == 80
    assert spec.width == pytest.approx(4.0 / spec.N)
    assert spec.step == pytest.approx(0.2 / 8.0)

    with pytest.raises(ParamError):
        make_grid_cover_spec(1.0, 1.0, 0.5)
    with pytest.raises(ParamError):
        make_grid_cover_spec(2.0, 1.0, 0.2, N=79)
    with pytest.raises(ParamError):
        make_grid_cover_spec(2.0, 1.0, 0.0)
    print("✅ Grid cover parameters - PASSED\n")


def test_project_and_quantize():
    print("🧪 Testing projection and quantisation...")
    spec = make_grid_cover_spec(1.0, 1.0, 0.1, N=100)
    u = PiecewiseConstantFn.indicator(0.005, 0.5, 0.51)
    p = project_PN(u, spec)
    assert p.breakpoints.tolist() == pytest.approx([0.02, 0.5])
    assert p.values.tolist() == [0.51]

    q = quantize(p, spec)
    assert q.values.tolist() == pytest.approx([0.5])
    assert project_PN(PiecewiseConstantFn.zero(), spec).is_zero

    with pytest.raises(SupportError):
        project_PN(PiecewiseConstantFn.indicator(0.5, 1.5), spec)

    flux = registered_flux("burgers")
    lhs, rhs = projection_error_bound(flux, u, spec)
    assert lhs <= rhs + 1e-12
    print("✅ Projection and quantisation - PASSED\n")


def test_grid_cover_enumeration():
    """Tiny grids enumerate; every element respects the TV budget"""
    print("🧪 Testing grid cover enumeration...")
    # below the cell floor on purpose: enumeration is only feasible for a handful of cells
    spec = GridCoverSpec(L_half=1.0, V=1.0, N=4, q=9, eps=1.0, lo=-1.0, hi=1.0)
    cover = GridCover(spec)
    elements = list(cover.iter_elements())
    assert elements
    assert any(e.is_zero for e in elements)
    assert all(e.total_variation() <= 2.0 * spec.V + 1e-9 for e in elements)
    assert math.log2(len(elements)) <= spec.log2_cardinality_bound

    g = PiecewiseConstantFn.indicator(-0.5, 0.5, 0.4)
    element = cover.assign(g)
    assert cover.realize(cover.key(element)).values.tolist() == pytest.approx(element.values.tolist())

    big = build_grid_cover(make_grid_cover_spec(1.0, 1.0, 0.1))
    with pytest.raises(ParamError):
        next(big.iter_elements())
    print("✅ Grid cover enumeration - PASSED\n")


def test_sign_tuples():
    print("🧪 Testing sign tuples...")
    iota = SignTuple.from_array([1, 1, -1, -1, 1])
    assert iota.starts.tolist() == [0, 2, 4]
    assert iota.signs.tolist() == [1, -1, 1]
    assert iota.to_array().tolist() == [1, 1, -1, -1, 1]
    assert iota.at(3) == -1
    assert iota.at(4) == 1

    spec = make_grid_cover_spec(1.0, 1.0, 0.1, N=100)
    u = PiecewiseConstantFn.from_lists([-0.5, 0.0, 0.5], [0.5, -0.5])
    of_u = SignTuple.of_function(u, spec)
    assert of_u.starts.tolist() == [0, 50, 75]
    assert of_u.signs.tolist() == [1, -1, 1]
    assert SignTuple.of_function(PiecewiseConstantFn.zero(), spec).signs.tolist() == [1]
    print("✅ Sign tuples - PASSED\n")


def test_reconstruct_on_branches():
    """f' o T_iota(g) = g, and T_iota inverts f' o u on the sign pattern of u"""
    print("🧪 Testing branch reconstruction...")
    flux = registered_flux("cubic")
    spec = make_grid_cover_spec(1.0, 1.0, 0.1, N=100, value_range=(0.0, 1.0))
    u = PiecewiseConstantFn.from_lists([-0.5, 0.0, 0.5], [0.5, -0.5])
    g = PiecewiseConstantFn.indicator(-0.5, 0.5, 0.25)
    rebuilt = reconstruct_T_iota(g, SignTuple.of_function(u, spec), flux, spec)
    assert l1_distance(rebuilt, u) == pytest.approx(0.0, abs=1e-12)

    result = check_reconstruction(flux, 1.0, trials=20, seed=1)
    assert result.passed
    assert result.worst <= 1e-10

    with pytest.raises(KindError):
        reconstruct_T_iota(g, SignTuple.constant(spec.N), registered_flux("burgers"), spec)
    print("✅ Branch reconstruction - PASSED\n")


def test_solution_bounds():
    print("🧪 Testing solution-set bounds...")
    bounds = solution_bounds(registered_flux("burgers"), 1.0, 1.0)
    assert bounds.l == pytest.approx(2.0)
    assert bounds.V == pytest.approx(1.0)
    bounds = solution_bounds(registered_flux("cubic"), 2.0, 0.5, C1=2.0)
    assert bounds.l == pytest.approx(2.5)
    assert bounds.V == pytest.approx(5.0)
    print("✅ Solution-set bounds - PASSED\n")


def test_analytic_upper_bound():
    print("🧪 Testing analytic upper bounds...")
    assert analytic_upper_bound(registered_flux("burgers"), 1.0, 1.0, 1.0, 0.01) == pytest.approx(900.0, rel=1e-6)
    assert analytic_upper_bound(registered_flux("cubic"), 1.0, 1.0, 1.0, 0.1) == pytest.approx(6400.0, rel=1e-9)
    with pytest.raises(ParamError):
        analytic_upper_bound(registered_flux("burgers"), 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ParamError):
        analytic_upper_bound(registered_flux("burgers"), 1.0, 1.0, 1.0, 0.0)
    print("✅ Analytic upper bounds - PASSED\n")


def test_pullback_estimate():
    print("🧪 Testing pullback estimate...")
    flux = registered_flux("quartic")
    u = PiecewiseConstantFn.from_lists([-1.0, 0.0, 1.0], [0.6, -0.3])
    v = PiecewiseConstantFn.from_lists([-1.0, 0.2, 1.0], [0.5, -0.2])
    lhs, rhs = pullback_estimate(flux, u, v)
    assert lhs <= rhs
    assert pullback_estimate(flux, u, u) == (0.0, 0.0)
    with pytest.raises(KindError):
        pullback_estimate(registered_flux("cubic"), u, v, hatted=True)
    print("✅ Pullback estimate - PASSED\n")


def test_sign_jump_tv():
    print("🧪 Testing sign-jump variation bound...")
    flux = registered_flux("cubic")
    kappa_tilde = 0.0625 / 2.0625
    # f' o u goes 0.25 -> 0 -> 0.25: variation 0.5 covers the bound
    good = PiecewiseConstantFn.from_lists([0.0, 1.0, 2.0, 3.0], [0.5, 0.0001, -0.5])
    assert sign_jump_tv_check(flux, good, kappa_tilde)[0]
    # u = 0.5 then -0.5 directly: f' o u does not move across the sign change
    bad = PiecewiseConstantFn.from_lists([0.0, 1.0, 2.0], [0.5, -0.5])
    assert not sign_jump_tv_check(flux, bad, kappa_tilde)[0]
    with pytest.raises(KindError):
        sign_jump_tv_check(registered_flux("burgers"), bad, kappa_tilde)
    print("✅ Sign-jump variation bound - PASSED\n")


def test_cover_burgers_samples():
    print("🧪 Testing Burgers solution-set cover...")
    flux = registered_flux("burgers")
    data = sample_family(1.0, 1.0, 6, seed=11, count=10)
    evolved = [evolve(flux, u0, 1.0, delta=1e-3) for u0 in data]
    report = cover_solution_set(flux, 1.0, 1.0, 1.0, 0.5, evolved)
    assert report.covered == report.samples == 10
    assert report.max_error <= 0.5
    assert report.eps_prime == pytest.approx(0.1)
    assert 1 <= report.realized_count <= 10
    assert report.realized_log2 <= report.construction_log2
    assert report.to_dict()["kind"] == "Convex"
    print("✅ Burgers solution-set cover - PASSED\n")


def test_cover_cubic_samples():
    print("🧪 Testing cubic solution-set cover...")
    flux = registered_flux("cubic")
    data = sample_family(1.0, 1.0, 4, seed=5, count=5)
    evolved = [evolve(flux, u0, 1.0, delta=1e-3) for u0 in data]
    report = cover_solution_set(flux, 1.0, 1.0, 1.0, 0.5, evolved)
    assert report.covered == 5
    assert report.max_error <= 0.5
    assert report.N >= 1
    assert report.construction_log2 >= report.N
    print("✅ Cubic solution-set cover - PASSED\n")


def test_cover_convex_kinds_across_eps():
    """50 samples stay within eps at three scales and the count stays below the analytic bound"""
    print("🧪 Testing convex covers across eps...")
    for name in ("burgers", "quartic"):
        flux = registered_flux(name)
        data = sample_family(1.0, 1.0, 6, seed=13, count=50)
        evolved = [evolve(flux, u0, 1.0, delta=1e-3) for u0 in data]
        sampled_C1 = calibrate_C1(flux, evolved, 1.0, 1.0)
        assert sampled_C1 > 0.0
        for eps in (0.1, 0.05, 0.025):
            report = cover_solution_set(flux, 1.0, 1.0, 1.0, eps, evolved)
            assert report.covered == report.samples == 50, (name, eps)
            assert report.max_error <= eps
            assert report.analytic_bound is not None
            assert report.realized_log2 <= report.analytic_bound
            assert report.C1 == pytest.approx(max(1.0, sampled_C1))
    print("✅ Convex covers across eps - PASSED\n")


def test_witness_family_below_cover():
    """A 2 eps-separated family never outnumbers the cover at the same eps"""
    print("🧪 Testing witness families against covers...")
    flux = registered_flux("burgers")
    data = sample_family(1.0, 1.0, 6, seed=17, count=50)
    evolved = [evolve(flux, u0, 1.0, delta=1e-3) for u0 in data]
    for eps in (0.05, 0.025):
        report = cover_solution_set(flux, 1.0, 1.0, 1.0, eps, evolved)
        family = build_witness_family(flux, 1.0, 1.0, 1.0, eps)
        assert family.separated_log2 <= report.realized_log2
        assert family.certified_log2 <= report.construction_log2
    print("✅ Witness families against covers - PASSED\n")


def test_cover_failure_carries_report():
    """A sample above the amplitude bound is reported, not silently covered"""
    print("🧪 Testing coverage failure...")
    flux = registered_flux("burgers")
    # f' o u = 1.5 is clipped to f'(M) = 1, so the element misses by 0.5
    too_tall = PiecewiseConstantFn.indicator(-0.5, 0.5, 1.5)
    report = cover_solution_set(flux, 1.0, 1.0, 1.0, 0.05, [too_tall], raise_on_failure=False)
    assert report.calibrated_V
    assert report.covered == 0
    assert report.uncovered == [0]
    assert report.max_error == pytest.approx(0.5, abs=1e-2)
    with pytest.raises(CoverageFailure) as info:
        cover_solution_set(flux, 1.0, 1.0, 1.0, 0.05, [too_tall])
    assert info.value.uncovered == [0]
    print("✅ Coverage failure - PASSED\n")


def main():
    """Run all cover tests"""
    print("🚀 Testing covers...\n")

    test_grid_cover_spec()
    test_project_and_quantize()
    test_grid_cover_enumeration()
    test_sign_tuples()
    test_reconstruct_on_branches()
    test_solution_bounds()
    test_analytic_upper_bound()
    test_pullback_estimate()
    test_sign_jump_tv()
    test_cover_burgers_samples()
    test_cover_cubic_samples()
    test_cover_convex_kinds_across_eps()
    test_witness_family_below_cover()
    test_cover_failure_carries_report()

    print("🎉 All cover tests passed!")


if __name__ == "__main__":
    main()
