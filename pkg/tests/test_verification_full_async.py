#!/usr/bin/env python3
"""
Async test script running the property checks for every registered flux,
round-tripping witness families through the backward construction and
evolving generated data that must stay continuous.
This is a stress test for the front tracker.
"""

import asyncio
import math
import sys
import time
from pathlib import Path

import numpy as np

# Add parent directory to path so we can import the package
sys.path.insert(0, str(Path(__file__).parent.parent))

from scl_entropy import build_witness_family, registered_flux, run_verification
from scl_entropy.experiments import fit_log_slope, sample_family
from scl_entropy.lower_bound import (
    ClassSide,
    check_family_separation,
    regularity_class,
    roundtrip_error,
    verify_regularity,
)
from scl_entropy.solver import PiecewiseConstantFn, evolve, tv_fprime
from scl_entropy.utils import format_duration

FLUXES = ("burgers", "cubic", "quartic", "mixed")
SIDES = ("plus", "minus")
ROUNDTRIPS = 20
ROUNDTRIP_L = 2.0
ROUNDTRIP_T = 0.25
ROUNDTRIP_DELTA = 5e-3
REGULAR_DATA = 20
REGULAR_H = 0.2
REGULAR_DELTA = 1e-3
TV_TIMES = (0.25, 0.5, 1.0, 2.0, 4.0)
TV_SAMPLES = 20


async def test_verification_all_fluxes_async():
    """200 random data per flux, default rarefaction step"""
    print('🚀 Running property checks for every registered flux...')
    print('=' * 60)
    start_time = time.time()

    async def verify(name):
        report = await asyncio.to_thread(run_verification, registered_flux(name), 1.0, 1.0, 200)
        print(f'🔄 {name}: {"pass" if report.passed else "FAIL"} | Elapsed: {time.time() - start_time:.1f}s')
        return name, report

    results = await asyncio.gather(*(verify(name) for name in FLUXES))
    print('=' * 60)
    for name, report in results:
        for check in report.checks:
            mark = "✅" if check.passed else "❌"
            print(f'   {mark} {name} {check.name}: worst {check.worst:.3g} over {check.checked}')
        assert report.passed, f"{name} verification failed"
    print(f'🎉 Property checks completed in {format_duration(time.time() - start_time)}')
    print('✅ Verification for all fluxes - PASSED\n')
    return True


def _family_with_roundtrips(flux, which):
    """Halve eps from 0.05 until the family has ROUNDTRIPS members."""
    eps = 0.05
    for _ in range(8):
        family = build_witness_family(flux, ROUNDTRIP_L, 1.0, ROUNDTRIP_T, eps, delta=ROUNDTRIP_DELTA, which=which)
        if family.family_size >= ROUNDTRIPS:
            return family
        eps /= 2.0
    raise AssertionError(f"{flux.name} {which}: family stays below {ROUNDTRIPS} members")


async def test_witness_roundtrips_async():
    """Witnesses are 2 eps-separated and reached at time T from their constructed data, on both sides"""
    print('🚀 Round-tripping witness families...')
    print('=' * 60)
    start_time = time.time()
    for name in FLUXES:
        flux = registered_flux(name)
        for which in SIDES:
            family = await asyncio.to_thread(_family_with_roundtrips, flux, which)
            separated, smallest = await asyncio.to_thread(check_family_separation, family)
            print(f'📄 {name} {which}: eps {family.eps:.4g}, {family.n_cells} teeth, {family.family_size} codewords, '
                  f'smallest distance {smallest:.4g} (needs > {2 * family.eps:.4g})')
            assert separated

            async def roundtrip(word, v):
                error, allowance = await asyncio.to_thread(roundtrip_error, flux, v, family.class_spec,
                                                           ROUNDTRIP_T, family.delta)
                return word, error, allowance

            results = await asyncio.gather(*(roundtrip(word, v) for word, v in family.iter_witnesses(ROUNDTRIPS)))
            assert len(results) == ROUNDTRIPS
            worst = max(results, key=lambda r: r[1] - r[2])
            print(f'   worst {worst[0][:16]}...: error {worst[1]:.3g} (allowance {worst[2]:.3g}) '
                  f'| Elapsed: {time.time() - start_time:.1f}s')
            for word, error, allowance in results:
                assert error <= allowance, (name, which, word, error, allowance)
    print('✅ Witness round-trips - PASSED\n')
    return True


def _regular_datum(flux, which, rng):
    """
    Random member of the regularity class: one to three teeth that jump up and
    come down as staircases of steps <= delta at slope gamma b, gamma in [0.5, 0.8].
    """
    klass = regularity_class(flux, None, REGULAR_H, 1.0, which, step_tol=REGULAR_DELTA)
    gamma = rng.uniform(0.5, 0.8)
    breakpoints = [0.0]
    values = []
    level = 0.0
    teeth = int(rng.integers(1, 4))
    for tooth in range(teeth):
        peak = rng.uniform(level + 0.1 * REGULAR_H, REGULAR_H)
        floor = 0.0 if tooth == teeth - 1 else rng.uniform(0.0, 0.5) * peak
        n = int(math.ceil((peak - floor) / REGULAR_DELTA))
        step = (peak - floor) / n
        stair = step / (gamma * klass.bound)
        levels = peak - step * np.arange(n + 1)
        widths = np.full(n + 1, stair)
        widths[0] = rng.uniform(0.05, 0.2)
        if floor == 0.0:
            levels, widths = levels[:-1], widths[:-1]
        values.extend(levels.tolist())
        breakpoints.extend((breakpoints[-1] + np.cumsum(widths)).tolist())
        level = floor
    u0 = PiecewiseConstantFn(np.array(breakpoints), klass.sign.sign * np.array(values))
    falls_slowly = klass.sign.sign > 0
    if falls_slowly != (klass.side is ClassSide.DV_GEQ):
        u0 = u0.mirror()
    return u0.normalize()


async def test_regularity_data_async():
    """Generated data in the regularity class stay continuous with the derivative bound at T/4, T/2, T"""
    print('🚀 Evolving data that must stay continuous...')
    print('=' * 60)
    start_time = time.time()
    for name in FLUXES:
        flux = registered_flux(name)
        rng = np.random.default_rng(11)
        data = [_regular_datum(flux, SIDES[i % 2], rng) for i in range(REGULAR_DATA)]
        reports = await asyncio.gather(*(
            asyncio.to_thread(verify_regularity, flux, u0, REGULAR_H, 1.0, REGULAR_DELTA) for u0 in data
        ))
        for u0, report in zip(data, reports):
            assert report.precondition_ok, (name, report.precondition_reasons)
            assert report.passed, (name, report.violations)
            assert max(report.max_jump) <= 3 * REGULAR_DELTA
            assert min(report.worst_slack) >= -1e-6
        print(f'🔄 {name}: {len(reports)} data, largest jump {max(max(r.max_jump) for r in reports):.3g} '
              f'| Elapsed: {time.time() - start_time:.1f}s')
    print('✅ Regularity of generated data - PASSED\n')
    return True


def _tv_maxima(flux):
    data = sample_family(1.0, flux.M, 8, 17, TV_SAMPLES)
    return [max(tv_fprime(flux, evolve(flux, u0, t)) for u0 in data) for t in TV_TIMES]


async def test_tv_fprime_over_time_async():
    """TV(f'(u(T))) decays no faster than C (1 + L/T) allows"""
    print("🚀 Tracking TV(f'(u)) over time...")
    print('=' * 60)
    maxima = await asyncio.gather(*(asyncio.to_thread(_tv_maxima, registered_flux(name)) for name in FLUXES))
    for name, tv in zip(FLUXES, maxima):
        flux = registered_flux(name)
        constants = [t * value / (t + 1.0) for t, value in zip(TV_TIMES, tv)]
        slope = fit_log_slope(TV_TIMES, tv)
        print(f'   {name}: TV {", ".join(f"{v:.3g}" for v in tv)} | C_T {min(constants):.3g}..{max(constants):.3g} '
              f'| slope in 1/T {slope:.3f}')
        assert all(math.isfinite(v) for v in tv)
        assert slope <= 1.3, (name, slope)
        if flux.is_convex:
            assert tv[-1] <= tv[0] + 1e-9, name
    print("✅ TV(f'(u)) over time - PASSED\n")
    return True


async def main():
    """Main async function"""
    print("🚀 Starting FULL verification tests...")
    print("⚠️  This evolves a few thousand solutions and may take several minutes")
    print("💡 You can interrupt with Ctrl+C if needed")
    print()

    try:
        success = (await test_verification_all_fluxes_async()
                   and await test_witness_roundtrips_async()
                   and await test_regularity_data_async()
                   and await test_tv_fprime_over_time_async())
    except KeyboardInterrupt:
        print("\n⚠️  Interrupted by user")
        return 1
    except AssertionError as e:
        print(f"❌ Verification test failed: {e}")
        return 1
    if success:
        print("🎉 Full verification tests passed!")
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
