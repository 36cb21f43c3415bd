"""
Builders for flux specifications and experiment configurations
"""

from typing import Any, Dict, List, Optional, Sequence

from .errors import ConfigError
from .experiments import DEFAULT_PIECES, DEFAULT_SAMPLES, DEFAULT_SEED, default_eps_grid
from .flux_analysis import FluxKind


def create_flux_spec(
    kind: str,
    m: int,
    coeffs: Sequence[float],
    M: float = 1.0,
    name: str = "custom",
) -> Dict[str, Any]:
    """
    Create an explicit polynomial flux specification.

    Args:
        kind: "Convex", "ConvexDegenerate" or "NonConvexInflection"
        m: Degeneracy order (first nonvanishing derivative at 0 is of order m+1)
        coeffs: Ascending monomial coefficients c0..ck
        M: Working range [-M, M]
        name: Label carried into reports

    Returns:
        Flux specification dictionary
    """
    try:
        FluxKind(kind)
    except ValueError:
        raise ConfigError(f"Unknown flux kind '{kind}'. Known: {[k.value for k in FluxKind]}")
    return {"kind": kind, "m": int(m), "coeffs": [float(c) for c in coeffs], "M": float(M), "name": name}


def create_burgers_flux_spec(M: float = 1.0) -> Dict[str, Any]:
    """Burgers flux u^2/2."""
    return {"name": "burgers", "M": float(M)}


def create_monomial_flux_spec(m: int, M: float = 1.0, mirrored: bool = False) -> Dict[str, Any]:
    """u^(m+1)/(m+1), or its negative for the mirrored inflection case."""
    spec: Dict[str, Any] = {"name": "monomial", "m": int(m), "M": float(M)}
    if mirrored:
        spec["mirrored"] = True
    return spec


def create_experiment_config(
    flux: Dict[str, Any],
    L: float = 1.0,
    M: float = 1.0,
    T: float = 1.0,
    eps_grid: Optional[List[float]] = None,
    samples: int = DEFAULT_SAMPLES,
    pieces: int = DEFAULT_PIECES,
    seed: int = DEFAULT_SEED,
    delta: Optional[float] = None,
    sign: Optional[str] = None,
    output_csv: Optional[str] = None,
    output_json: Optional[str] = None,
) -> Dict[str, Any]:
    """
    Create an entropy-scan configuration dictionary.

    The eps grid defaults to 8 points from M L / 8 down by halving.
    """
    return {
        "flux": flux,
        "L": float(L),
        "M": float(M),
        "T": float(T),
        "eps_grid": list(eps_grid) if eps_grid else default_eps_grid(L, M),
        "samples": int(samples),
        "pieces": int(pieces),
        "seed": int(seed),
        "delta": delta,
        "sign": sign,
        "constants": {},
        "output_csv": output_csv,
        "output_json": output_json,
    }


def add_constants_overrides(config: Dict[str, Any], C1: Optional[float] = None,
                            c1: Optional[float] = None, c2: Optional[float] = None) -> Dict[str, Any]:
    """Return a copy of config with the given C1 / c1 / c2 set."""
    extended = dict(config)
    constants = dict(extended.get("constants") or {})
    for key, value in (("C1", C1), ("c1", c1), ("c2", c2)):
        if value is not None:
            if value <= 0.0:
                raise ConfigError(f"{key} must be positive, got {value}")
            constants[key] = float(value)
    extended["constants"] = constants
    return extended


# Example usage functions for documentation
def example_burgers_scan():
    """Example: Burgers flux, the exponent-1 reference case"""
    return create_experiment_config(create_burgers_flux_spec(), L=2.0, M=1.0, T=1.0, samples=50)


def example_cubic_scan():
    """Example: cubic flux with one inflection point, exponent 2"""
    return create_experiment_config(
        create_monomial_flux_spec(2),
        L=2.0,
        M=1.0,
        T=1.0,
        eps_grid=[0.04, 0.02, 0.01, 0.005],
        samples=30,
    )


def example_custom_flux_scan():
    """Example: explicit polynomial u^3/3 + u^4/8 with nonnegative data"""
    flux = create_flux_spec("NonConvexInflection", 2, [0.0, 0.0, 0.0, 1.0 / 3.0, 0.125], name="mixed")
    config = create_experiment_config(flux, L=1.0, M=1.0, T=1.0, samples=30, sign="NonNegative")
    return add_constants_overrides(config, C1=2.0)
