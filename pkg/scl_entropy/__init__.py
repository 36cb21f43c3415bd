"""
scl-entropy

Front tracking for one-dimensional scalar conservation laws u_t + f(u)_x = 0
with polynomial fluxes, and constructive upper and lower bounds for the
epsilon-entropy of the set of entropy solutions reached at time T from
bounded, compactly supported initial data.

Key Features:
- Exact Riemann solver (convex/concave envelopes) and event-driven front tracking
- Lax-Oleinik oracle for convex fluxes
- Flux oscillation maps and their inverses, flux constants
- Grid covers of {f' o u} pulled back to eps-covers of the solution set
- eps-separated witness families built by backward construction
- Entropy scans with CSV/JSON reports, both synchronous and asynchronous

Example Usage:
    from scl_entropy import registered_flux, PiecewiseConstantFn, evolve, riemann

    flux = registered_flux("cubic", M=1.0)
    fan = riemann(flux, 1.0, -1.0, delta=1e-3)

    u0 = PiecewiseConstantFn.from_lists([-1.0, 0.0, 1.0], [0.5, -0.5])
    u = evolve(flux, u0, T=1.0)

    # Entropy scan
    from scl_entropy import ExperimentConfig, entropy_scan
    config = ExperimentConfig(flux={"name": "burgers"}, L=2.0, M=1.0, T=1.0, samples=20)
    report = entropy_scan(config)
    print(report.to_csv())
"""

__version__ = "1.0.0"

from .errors import (
    SclEntropyError,
    DomainError,
    KindError,
    RangeError,
    SupportError,
    ParamError,
    ClassError,
    DegenerateError,
    ConfigError,
    StallError,
    CoverageFailure,
)

from .flux_analysis import (
    FluxKind,
    FluxModel,
    FluxConstants,
    registered_flux,
    monomial_flux,
    flux_from_spec,
    evaluate,
    delta,
    delta_hat,
    delta_inverse,
    branch_inverse,
    fprime_inverse,
    conjugate_point,
    estimate_constants,
)

from .solver import (
    PiecewiseConstantFn,
    WaveType,
    Wave,
    WaveFan,
    FrontTracker,
    riemann,
    evolve,
    lax_oleinik,
    lax_oleinik_profile,
    tv_fprime,
    oleinik_one_sided_check,
    l1_distance,
)

from .cover import (
    GridCoverSpec,
    SignTuple,
    make_grid_cover_spec,
    project_PN,
    reconstruct_T_iota,
    analytic_upper_bound,
    cover_solution_set,
)

from .lower_bound import (
    ClassSide,
    SignConstraint,
    OneSidedClassSpec,
    backward_construct,
    verify_regularity,
    build_witness_family,
    analytic_lower_bound,
)

from .experiments import (
    ExperimentConfig,
    BoundReport,
    sample_initial_data,
    empirical_entropy,
    entropy_scan,
    entropy_scan_async,
    run_verification,
)

__all__ = [
    # Errors
    "SclEntropyError",
    "DomainError",
    "KindError",
    "RangeError",
    "SupportError",
    "ParamError",
    "ClassError",
    "DegenerateError",
    "ConfigError",
    "StallError",
    "CoverageFailure",

    # Flux analysis
    "FluxKind",
    "FluxModel",
    "FluxConstants",
    "registered_flux",
    "monomial_flux",
    "flux_from_spec",
    "evaluate",
    "delta",
    "delta_hat",
    "delta_inverse",
    "branch_inverse",
    "fprime_inverse",
    "conjugate_point",
    "estimate_constants",

    # Solver
    "PiecewiseConstantFn",
    "WaveType",
    "Wave",
    "WaveFan",
    "FrontTracker",
    "riemann",
    "evolve",
    "lax_oleinik",
    "lax_oleinik_profile",
    "tv_fprime",
    "oleinik_one_sided_check",
    "l1_distance",

    # Cover
    "GridCoverSpec",
    "SignTuple",
    "make_grid_cover_spec",
    "project_PN",
    "reconstruct_T_iota",
    "analytic_upper_bound",
    "cover_solution_set",

    # Lower bound
    "ClassSide",
    "SignConstraint",
    "OneSidedClassSpec",
    "backward_construct",
    "verify_regularity",
    "build_witness_family",
    "analytic_lower_bound",

    # Experiments
    "ExperimentConfig",
    "BoundReport",
    "sample_initial_data",
    "empirical_entropy",
    "entropy_scan",
    "entropy_scan_async",
    "run_verification",

    # Package info
    "__version__",
]
