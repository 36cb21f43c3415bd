#!/usr/bin/env python3
"""
Test one-sided classes, backward construction, regularity and witness families
"""

import itertools
import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add parent directory to path so we can import the package
sys.path.insert(0, str(Path(__file__).parent.parent))

from scl_entropy import (
    ClassError,
    ClassSide,
    DomainError,
    ParamError,
    PiecewiseConstantFn,
    SignConstraint,
    analytic_lower_bound,
    backward_construct,
    build_witness_family,
    registered_flux,
    verify_regularity,
)
from scl_entropy.experiments import fit_log_slope
from scl_entropy.lower_bound import (
    ConcatenatedCode,
    GreedyCode,
    _gf_mul,
    b_constants,
    check_family_separation,
    regularity_class,
    roundtrip_error,
    witness_class,
)

DELTA = 1e-3


def test_b_constants():
    print("🧪 Testing slope constants...")
    assert b_constants(registered_flux("burgers"), 0.15, 1.0) == pytest.approx((0.5, 0.5))
    assert b_constants(registered_flux("cubic"), 1.0, 1.0) == pytest.approx((0.25, 0.25))
    assert b_constants(registered_flux("quartic"), 0.5, 1.0) == pytest.approx((1.0 / 1.5, 1.0 / 1.5))
    with pytest.raises(DomainError):
        b_constants(registered_flux("burgers"), 2.0, 1.0)
    with pytest.raises(DomainError):
        b_constants(registered_flux("burgers"), 0.5, 0.0)
    print("✅ Slope constants - PASSED\n")


def test_class_sides():
    print("🧪 Testing class orientation...")
    burgers = registered_flux("burgers")
    plus = witness_class(burgers, 2.0, 0.15, 1.0, "plus")
    assert plus.side is ClassSide.DV_LEQ
    assert plus.sign is SignConstraint.NON_NEGATIVE
    minus = witness_class(burgers, 2.0, 0.15, 1.0, "minus")
    assert minus.side is ClassSide.DV_LEQ
    assert minus.sign is SignConstraint.NON_POSITIVE
    assert regularity_class(burgers, 2.0, 0.15, 1.0, "plus").side is ClassSide.DV_GEQ

    # u^3/3 bends down on the negative side
    cubic = registered_flux("cubic")
    assert witness_class(cubic, 2.0, 0.3, 1.0, "minus").side is ClassSide.DV_GEQ
    with pytest.raises(DomainError):
        witness_class(burgers, 2.0, 0.15, 1.0, "both")
    print("✅ Class orientation - PASSED\n")


def test_membership():
    print("🧪 Testing class membership...")
    klass = witness_class(registered_flux("burgers"), 2.0, 0.15, 1.0, "plus", step_tol=DELTA)
    # staircase up at average slope 0.4 in steps of delta, then a drop: allowed
    ramp = PiecewiseConstantFn(np.linspace(0.0, 0.25, 101), np.arange(1, 101) * DELTA)
    ok, reasons = klass.membership(ramp)
    assert ok, reasons
    # the same staircase without the step tolerance is not
    strict = witness_class(registered_flux("burgers"), 2.0, 0.15, 1.0, "plus")
    assert not strict.membership(ramp)[0]
    # a jump up breaks Dv <= b
    ok, reasons = klass.membership(PiecewiseConstantFn.indicator(0.0, 0.5, 0.1))
    assert not ok
    assert any("rises" in r for r in reasons)
    # outside [-L/2, L/2], above h and of the wrong sign
    ok, reasons = klass.membership(PiecewiseConstantFn.from_lists([0.9, 1.2, 1.3], [-0.2, 0.0]))
    assert not ok
    assert len(reasons) >= 3
    assert klass.membership(PiecewiseConstantFn.zero()) == (True, [])
    print("✅ Class membership - PASSED\n")


def test_witness_family_burgers():
    """L = 2, T = 1, eps = 0.05, 8 teeth: D = 6, two codewords, Kleitman count 93"""
    print("🧪 Testing Burgers witness family...")
    family = build_witness_family(registered_flux("burgers"), 2.0, 1.0, 1.0, 0.05, n_cells=8)
    assert family.h == pytest.approx(0.15)
    assert family.tooth_slope == pytest.approx(0.5)
    assert family.tooth_height == pytest.approx(0.125)
    assert family.steps == 125
    assert family.tooth_area == pytest.approx(0.01575)
    assert family.max_shared_distance == 6
    assert family.codewords == ["00000000", "01111111"]
    assert family.kleitman_log2 == pytest.approx(math.log2(93))
    assert family.certified_log2 == pytest.approx(8 - math.log2(93))
    assert family.ramp_first

    separated, smallest = check_family_separation(family)
    assert separated
    assert smallest == pytest.approx(7 * 0.01575, rel=1e-9)
    for word, v in family.iter_witnesses():
        ok, reasons = family.class_spec.membership(v)
        assert ok, (word, reasons)
    assert family.to_dict()["family_size"] == 2
    print("✅ Burgers witness family - PASSED\n")


def test_witness_family_defaults_and_errors():
    print("🧪 Testing witness family defaults...")
    burgers = registered_flux("burgers")
    family = build_witness_family(burgers, 2.0, 1.0, 1.0, 0.05)
    # floor(b L / (3 h)) = floor(0.5 * 2 / 0.45) full-height teeth with a plateau
    assert family.n_cells == 2
    assert family.tooth_height == pytest.approx(0.15)
    assert family.ramp_width == pytest.approx(0.3)
    assert family.steps == 150
    assert family.tooth_area == pytest.approx(0.15 - 0.045 * 149 / 300)
    assert family.max_shared_distance == 0
    assert family.codewords == ["00", "01", "10", "11"]
    assert family.certified_log2 == pytest.approx(2.0)
    separated, smallest = check_family_separation(family)
    assert separated
    assert smallest == pytest.approx(family.tooth_area, rel=1e-9)
    for word, v in family.iter_witnesses():
        ok, reasons = family.class_spec.membership(v)
        assert ok, (word, reasons)

    minus = build_witness_family(burgers, 2.0, 1.0, 1.0, 0.05, n_cells=8, which="minus")
    assert all(np.all(v.values <= 0.0) for _, v in minus.iter_witnesses())
    with pytest.raises(ParamError):
        build_witness_family(burgers, 2.0, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        family.realize("0101")
    print("✅ Witness family defaults - PASSED\n")


def test_tooth_codes():
    print("🧪 Testing codes on the teeth...")
    assert _gf_mul(2, 2, 2) == 3
    assert _gf_mul(0x53, 0xCA, 8) == 1

    code = ConcatenatedCode(symbol_bits=2, blocks=4, dimension=2, length=18)
    words = [code.word(i) for i in range(code.size)]
    assert code.size == 16
    assert len(set(words)) == 16
    assert all(len(w) == 18 and w.endswith("00") for w in words)
    distances = [sum(a != b for a, b in zip(x, y)) for x, y in itertools.combinations(words, 2)]
    assert min(distances) == code.min_distance == 6
    assert max(distances) == 8

    # 2048 teeth in 8 blocks of GF(256) symbols; distance 806 leaves two message symbols
    wide = ConcatenatedCode.for_distance(2048, 806)
    assert (wide.symbol_bits, wide.blocks, wide.dimension) == (8, 8, 2)
    assert wide.log2_size == 16.0
    assert ConcatenatedCode.for_distance(16, 9).size == 1
    with pytest.raises(ParamError):
        ConcatenatedCode(symbol_bits=2, blocks=5, dimension=1, length=20)

    greedy = GreedyCode.build(7, 3)
    assert greedy.size == 16
    assert GreedyCode.build(4, 1).size == 16
    assert GreedyCode.build(4, 5).size == 1
    print("✅ Codes on the teeth - PASSED\n")


def test_concatenated_witness_family():
    """L = 2, T = 1, eps = 0.004: 16 teeth carry the Hadamard code of length 16"""
    print("🧪 Testing a Hadamard witness family...")
    family = build_witness_family(registered_flux("burgers"), 2.0, 1.0, 1.0, 0.004)
    assert family.n_cells == 16
    assert family.steps == 12
    assert family.tooth_area == pytest.approx(0.001368)
    assert family.max_shared_distance == 5
    assert isinstance(family.code, ConcatenatedCode)
    assert family.family_size == 16
    assert family.kleitman_log2 == pytest.approx(math.log2(242))
    assert family.certified_log2 == pytest.approx(16 - math.log2(242))

    separated, smallest = check_family_separation(family)
    assert separated
    assert smallest == pytest.approx(8 * family.tooth_area, rel=1e-9)
    for word, v in family.iter_witnesses(4):
        ok, reasons = family.class_spec.membership(v)
        assert ok, (word, reasons)
    assert family.to_dict()["code"]["min_distance"] == 8
    print("✅ Hadamard witness family - PASSED\n")


def test_family_size_slope():
    """log2 of the separated family grows like eps^-m"""
    print("🧪 Testing the growth of witness families...")
    cases = [
        (registered_flux("burgers"), 8.0, 0.5, 1e-5, [1.6e-3, 8e-4, 4e-4, 2e-4], [16, 32, 64, 120]),
        (registered_flux("cubic"), 2.0, 1.0, 1e-4, [4e-3, 2e-3, 1e-3, 5e-4], [8, 32, 120, 472]),
    ]
    for flux, L, T, delta, eps_grid, expected in cases:
        sizes = [build_witness_family(flux, L, 1.0, T, eps, delta=delta).separated_log2 for eps in eps_grid]
        assert sizes == expected, flux.name
        slope = fit_log_slope(eps_grid, sizes)
        assert abs(slope - flux.m) <= 0.5, (flux.name, slope)
    print("✅ Growth of witness families - PASSED\n")


def test_backward_construction_roundtrip():
    print("🧪 Testing backward construction...")
    flux = registered_flux("burgers")
    family = build_witness_family(flux, 2.0, 1.0, 1.0, 0.05, n_cells=8, delta=DELTA)
    v = family.realize("00010000")
    u0 = backward_construct(flux, v, family.class_spec, 1.0, delta=DELTA)
    assert u0.sup_norm() <= family.h + 1e-12
    error, allowance = roundtrip_error(flux, v, family.class_spec, 1.0, delta=DELTA)
    assert error <= allowance

    assert backward_construct(flux, PiecewiseConstantFn.zero(), family.class_spec, 1.0).is_zero
    with pytest.raises(ClassError) as info:
        backward_construct(flux, PiecewiseConstantFn.indicator(0.0, 0.5, 0.1), family.class_spec, 1.0)
    assert info.value.reasons
    print("✅ Backward construction - PASSED\n")


def test_verify_regularity():
    print("🧪 Testing regularity of solutions...")
    flux = registered_flux("burgers")
    # falls from 0.1 to 0 at slope 0.25 in steps of delta; rises vertically at x = 0
    breakpoints = np.linspace(0.0, 0.4, 101)
    values = np.arange(100, 0, -1) * DELTA
    u0 = PiecewiseConstantFn(breakpoints, values)
    report = verify_regularity(flux, u0, 0.15, 1.0, delta=DELTA)
    assert report.precondition_ok, report.precondition_reasons
    assert report.passed, report.violations
    assert report.times == pytest.approx([0.25, 0.5, 1.0])
    assert max(report.max_jump) <= 3 * DELTA
    # quotient bound holds to 1e-6 independently of the jump tolerance
    assert min(report.worst_slack) >= -1e-6

    mixed_sign = PiecewiseConstantFn.from_lists([0.0, 1.0, 2.0], [0.1, -0.1])
    report = verify_regularity(flux, mixed_sign, 0.15, 1.0, delta=DELTA)
    assert not report.precondition_ok
    assert not report.passed

    steep = PiecewiseConstantFn.indicator(0.0, 1.0, 0.1)
    report = verify_regularity(flux, steep, 0.15, 1.0, delta=DELTA)
    assert not report.precondition_ok
    print("✅ Regularity of solutions - PASSED\n")


def test_analytic_lower_bound():
    print("🧪 Testing analytic lower bounds...")
    value = analytic_lower_bound(registered_flux("burgers"), 2.0, 1.0, 1.0, 0.05)
    assert value == pytest.approx(4.0 / (108.0 * math.log(2.0) * 0.05), rel=1e-9)
    assert value == pytest.approx(1.0687, abs=1e-4)

    cubic = analytic_lower_bound(registered_flux("cubic"), 2.0, 1.0, 1.0, 0.05)
    assert cubic == pytest.approx(8.0 / (108.0 * math.log(2.0) * 6.0 * 2.0 * 0.0025), rel=1e-6)
    with pytest.raises(ParamError):
        analytic_lower_bound(registered_flux("burgers"), 2.0, 1.0, 1.0, 1.0)
    print("✅ Analytic lower bounds - PASSED\n")


def main():
    """Run all lower-bound tests"""
    print("🚀 Testing lower bounds...\n")

    test_b_constants()
    test_class_sides()
    test_membership()
    test_witness_family_burgers()
    test_witness_family_defaults_and_errors()
    test_tooth_codes()
    test_concatenated_witness_family()
    test_family_size_slope()
    test_backward_construction_roundtrip()
    test_verify_regularity()
    test_analytic_lower_bound()

    print("🎉 All lower-bound tests passed!")


if __name__ == "__main__":
    main()
