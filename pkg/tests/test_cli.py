#!/usr/bin/env python3
"""
Test the scl-entropy command line interface end to end
"""

import asyncio
import json
import os
import sys
import tempfile
from pathlib import Path

import pytest

# Add parent directory to path so we can import the package
sys.path.insert(0, str(Path(__file__).parent.parent))

from scl_entropy import ConfigError, FluxKind
from scl_entropy.cli import EXIT_CONFIG, EXIT_OK, main, parse_flux_argument
from scl_entropy.utils import load_flux_spec, load_function

EXAMPLE_DOCS = Path(__file__).parent.parent / "example_docs"
INITIAL = str(EXAMPLE_DOCS / "example_initial_data.json")
CUBIC = str(EXAMPLE_DOCS / "example_flux_cubic.json")


def run_cli(*argv):
    return asyncio.run(main(["--quiet", *argv]))


def test_parse_flux_argument():
    print("🧪 Testing flux argument parsing...")
    assert parse_flux_argument("burgers").kind is FluxKind.CONVEX
    assert parse_flux_argument("Monomial:4").m == 4
    mirrored = parse_flux_argument("-cubic", M=2.0)
    assert mirrored.sigma == -1.0
    assert mirrored.M == 2.0
    assert parse_flux_argument('{"name": "quartic"}').kind is FluxKind.CONVEX_DEGENERATE
    assert parse_flux_argument(CUBIC).m == 2
    with pytest.raises(ConfigError):
        parse_flux_argument("monomial:x")
    with pytest.raises(ConfigError):
        parse_flux_argument('{"name": ')
    with pytest.raises(FileNotFoundError):
        parse_flux_argument("no-such-flux")
    print("✅ Flux argument parsing - PASSED\n")


def test_riemann_and_constants_commands():
    print("🧪 Testing riemann and constants commands...")
    with tempfile.TemporaryDirectory() as tmp:
        fan_path = os.path.join(tmp, "fan.json")
        assert run_cli("riemann", "--flux", "cubic", "--left", "1", "--right", "-1", "--output", fan_path) == EXIT_OK
        with open(fan_path, encoding="utf-8") as f:
            assert json.load(f)
        assert run_cli("riemann", "--flux", "burgers", "--left", "1", "--right", "0", "--method", "hull") == EXIT_OK
        assert run_cli("riemann", "--flux", "burgers", "--left", "2", "--right", "0") == EXIT_CONFIG

        constants_path = os.path.join(tmp, "constants.json")
        assert run_cli("constants", "--flux", CUBIC, "--output", constants_path) == EXIT_OK
        with open(constants_path, encoding="utf-8") as f:
            data = json.load(f)
        assert data["fitted_exponent"] == pytest.approx(2.0, abs=1e-3)

        flux_path = os.path.join(tmp, "flux.json")
        assert run_cli("constants", "--flux", "quartic", "-M", "0.5", "--save-flux", flux_path) == EXIT_OK
        saved = load_flux_spec(flux_path)
        assert saved["name"] == "quartic"
        reloaded = parse_flux_argument(flux_path)
        assert reloaded.kind is FluxKind.CONVEX_DEGENERATE
        assert reloaded.M == 0.5
        assert run_cli("constants", "--flux", "cubic", "--grid", "10") == EXIT_CONFIG
    print("✅ riemann and constants commands - PASSED\n")


def test_solve_command():
    print("🧪 Testing solve command...")
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "u.json")
        assert run_cli("solve", "--flux", "burgers", "--initial", INITIAL, "--T", "0.5", "--at", "0", "0.5",
                       "--output", out) == EXIT_OK
        u = load_function(out)
        assert u.integral() == pytest.approx(0.75, abs=1e-9)
        assert u.sup_norm() <= 1.0

    inline = '{"breakpoints": [0, 1], "values": [1]}'
    assert run_cli("solve", "--flux", "burgers", "--initial", inline, "--T", "1") == EXIT_OK
    assert run_cli("solve", "--flux", "burgers", "--initial", inline, "--T", "-1") == EXIT_CONFIG
    print("✅ solve command - PASSED\n")


def test_cover_and_lower_bound_commands():
    print("🧪 Testing cover and lower-bound commands...")
    assert run_cli("cover", "--flux", "burgers", "--L", "1", "--T", "1", "--eps", "0.5",
                   "--samples", "4", "--pieces", "6", "--seed", "11") == EXIT_OK
    assert run_cli("cover", "--flux", "burgers", "--L", "1", "--T", "1", "--eps", "5",
                   "--samples", "2") == EXIT_CONFIG

    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "family.json")
        assert run_cli("lower-bound", "--flux", "burgers", "--L", "2", "--T", "1", "--eps", "0.05",
                       "--cells", "8", "--delta", "0.001", "--check", "--roundtrips", "2",
                       "--output", out) == EXIT_OK
        with open(out, encoding="utf-8") as f:
            data = json.load(f)
        assert data["separated"] is True
        assert len(data["roundtrips"]) == 2
        assert data["family"]["family_size"] == 2
    assert run_cli("lower-bound", "--flux", "burgers", "--L", "2", "--T", "1", "--eps", "1") == EXIT_CONFIG
    print("✅ cover and lower-bound commands - PASSED\n")


def test_documented_flag_names():
    """--input, --time, --out and the one-letter problem flags reach the same options"""
    print("🧪 Testing documented flag names...")
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "u.json")
        assert run_cli("solve", "--flux", "burgers", "--input", INITIAL, "--time", "0.5", "--delta", "0.001",
                       "--out", out) == EXIT_OK
        assert load_function(out).integral() == pytest.approx(0.75, abs=1e-9)

        report = os.path.join(tmp, "cover.json")
        assert run_cli("cover", "--flux", "burgers", "-L", "1", "-M", "1", "-T", "1", "--eps", "0.5",
                       "--samples", "4", "--pieces", "6", "--seed", "11", "--out", report) == EXIT_OK
        with open(report, encoding="utf-8") as f:
            assert json.load(f)["samples"] == 4

        family = os.path.join(tmp, "family.json")
        assert run_cli("lower-bound", "--flux", "burgers", "-L", "2", "-M", "1", "-T", "1", "--eps", "0.05",
                       "--cells", "8", "--delta", "0.001", "--out", family) == EXIT_OK
        with open(family, encoding="utf-8") as f:
            data = json.load(f)
        assert data["family"]["n_cells"] == 8
        assert data["family"]["L"] == 2.0
    print("✅ Documented flag names - PASSED\n")


def test_scan_and_verify_commands():
    print("🧪 Testing entropy-scan and verify commands...")
    with tempfile.TemporaryDirectory() as tmp:
        csv_path = os.path.join(tmp, "scan.csv")
        assert run_cli("entropy-scan", "--flux", "burgers", "--L", "2", "--eps", "0.032", "0.016",
                       "--samples", "3", "--pieces", "4", "--delta", "0.01", "--workers", "1",
                       "--csv", csv_path) == EXIT_OK
        with open(csv_path, encoding="utf-8") as f:
            lines = f.read().splitlines()
        assert len(lines) == 3
        assert lines[0].startswith("eps,")
    assert run_cli("entropy-scan") == EXIT_CONFIG
    assert run_cli("entropy-scan", "--flux", "burgers", "--eps", "0.01", "0.02") == EXIT_CONFIG

    assert run_cli("verify", "--flux", "burgers", "--L", "1", "--T", "0.5", "--samples", "3", "--pieces", "4",
                   "--delta", "0.01", "--riemann-trials", "20") == EXIT_OK
    print("✅ entropy-scan and verify commands - PASSED\n")


def main_tests():
    """Run all CLI tests"""
    print("🚀 Testing the command line interface...\n")

    test_parse_flux_argument()
    test_riemann_and_constants_commands()
    test_solve_command()
    test_cover_and_lower_bound_commands()
    test_documented_flag_names()
    test_scan_and_verify_commands()

    print("🎉 All CLI tests passed!")


if __name__ == "__main__":
    main_tests()
