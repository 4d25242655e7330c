"""Seeded invariant suites: interpolation inequality, diamagnetic comparison,
integral identities, Parseval, phase invariance, and the direct 2D
cross-validation of the critical coupling.

Each suite returns a CheckResult with the worst margin observed, so the
command-line table and the tests share one implementation.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels
from .functional import (
    GPParams,
    InteractionSpec,
    diamagnetic_gap,
    energy_value,
    gp_energy,
    gp_gradient,
    smeared_interaction,
)
from .grid import (
    SpectralGrid,
    fourier_norm_sq,
    gradient_norm_sq,
    random_localized_field,
)
from .profile import materialize_profile


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    detail: str


def _result(name, margins, tol, larger_is_better=True):
    margins = np.asarray(margins, dtype=float)
    worst = float(np.min(margins) if larger_is_better else np.max(margins))
    passed = worst >= -tol if larger_is_better else worst <= tol
    return CheckResult(
        name=name,
        passed=bool(passed),
        worst=worst,
        detail=f"{'min' if larger_is_better else 'max'} over {margins.size} trials, tol {tol:g}",
    )


def suite_gn_inequality(profile, constants, grid, trials=200, seed=0):
    """K * M >= (a_star/2) * P on random normalized localized fields,
    plus equality attainment by the materialized profile family."""
    rng = np.random.default_rng(seed)
    margins = []
    for _ in range(trials):
        u = random_localized_field(grid, rng)
        k = gradient_norm_sq(u)
        p4 = kernels.quartic_sum(u.values) * grid.cell_area
        margins.append(k - 0.5 * constants.a_star * p4)
    ineq = _result("gn-inequality", margins, 1e-6)

    devs = []
    for lam in (0.5, 1.0, 2.0):
        for center in ((0.0, 0.0), (1.0, 1.0)):
            q = materialize_profile(grid, profile, lam=lam, center=center)
            k = gradient_norm_sq(q)
            m = q.norm_sq()
            p4 = kernels.quartic_sum(q.values) * grid.cell_area
            rhs = 0.5 * constants.a_star * p4
            devs.append(abs(k * m - rhs) / rhs)
    eq = _result("gn-equality", devs, 1e-5, larger_is_better=False)
    if ineq.passed and eq.passed:
        return CheckResult(
            name="gn-inequality",
            passed=True,
            worst=ineq.worst,
            detail=f"{ineq.detail}; equality dev {eq.worst:.2e}",
        )
    return CheckResult(
        name="gn-inequality",
        passed=False,
        worst=min(ineq.worst, -eq.worst),
        detail=f"inequality worst {ineq.worst:.3e}; equality worst dev {eq.worst:.3e}",
    )


def suite_pohozaev(profile, constants):
    """Integral identities forced by the profile equation."""
    a = constants.a_star
    devs = [
        abs(profile.gradient_norm_sq() - a) / a,
        abs(profile.l2_norm_sq - a) / a,
        abs(profile.quartic_integral() - 2.0 * a) / (2.0 * a),
    ]
    return _result("pohozaev", devs, 1e-6, larger_is_better=False)


def suite_parseval(grid, trials=100, seed=0):
    rng = np.random.default_rng(seed)
    devs = []
    for _ in range(trials):
        u = random_localized_field(grid, rng, normalize=False)
        pos = u.norm_sq()
        devs.append(abs(pos - fourier_norm_sq(u)) / pos)
    return _result("parseval", devs, 1e-12, larger_is_better=False)


def suite_diamagnetic(grid, trials=100, seed=0):
    rng = np.random.default_rng(seed)
    gaps = []
    for _ in range(trials):
        u = random_localized_field(grid, rng)
        b = rng.uniform(0.0, 2.0)
        gaps.append(diamagnetic_gap(u, b))
    return _result("diamagnetic", gaps, 1e-10)


def suite_phase_invariance(constants, grid, trials=100, seed=0):
    rng = np.random.default_rng(seed)
    p = GPParams(a=constants.a_star - 0.1, a_star=constants.a_star, omega=0.5)
    devs = []
    for _ in range(trials):
        u = random_localized_field(grid, rng)
        theta = rng.uniform(0.0, 2.0 * np.pi)
        e0 = energy_value(u.values, grid, p)
        e1 = energy_value(np.exp(1j * theta) * u.values, grid, p)
        devs.append(abs(e1 - e0) / max(abs(e0), 1.0))
    return _result("phase-invariance", devs, 1e-12, larger_is_better=False)


def suite_gradient_fd(constants, grid, trials=100, seed=0, t=1e-5):
    """Directional derivative of the energy against the assembled gradient."""
    rng = np.random.default_rng(seed)
    p = GPParams(a=constants.a_star - 0.5, a_star=constants.a_star, omega=0.5)
    errs = []
    for _ in range(trials):
        u = random_localized_field(grid, rng)
        d = random_localized_field(grid, rng)
        grad = gp_gradient(u, p)
        # energy is a real function of (Re u, Im u): slope = 2 Re <H u, d>
        slope = 2.0 * float(
            np.sum((np.conj(grad.values) * d.values).real)
        ) * grid.cell_area
        e_plus = energy_value(u.values + t * d.values, grid, p)
        e_minus = energy_value(u.values - t * d.values, grid, p)
        fd = (e_plus - e_minus) / (2.0 * t)
        errs.append(abs(fd - slope) / max(abs(slope), 1e-12))
    return _result("gradient-fd", errs, 1e-4, larger_is_better=False)


def suite_hartree_vs_gp(constants, grid, trials=100, seed=0, w=None):
    """Contact interaction dominates any unit-mass nonnegative smearing."""
    rng = np.random.default_rng(seed)
    if w is None:
        w = InteractionSpec(beta=0.4, bigN=1e4)
    margins = []
    for _ in range(trials):
        u = random_localized_field(grid, rng)
        quartic = kernels.quartic_sum(u.values) * grid.cell_area
        margins.append(quartic - smeared_interaction(u.values, grid, w))
    return _result("hartree-vs-gp", margins, 1e-10)


def suite_mixed_convexity(constants, grid, trials=50, seed=0):
    """Mixed-density comparison: t E(u1) + (1-t) E(u2) >= min(E(u1), E(u2))."""
    rng = np.random.default_rng(seed)
    p = GPParams(a=constants.a_star - 0.5, a_star=constants.a_star, omega=0.3)
    margins = []
    for _ in range(trials):
        u1 = random_localized_field(grid, rng)
        u2 = random_localized_field(grid, rng)
        t = rng.uniform(0.0, 1.0)
        e1 = gp_energy(u1, p, check_support=False).total
        e2 = gp_energy(u2, p, check_support=False).total
        margins.append(t * e1 + (1.0 - t) * e2 - min(e1, e2))
    return _result("mixed-convexity", margins, 1e-12)


def gn_quotient_minimum(grid, seed=0, n_starts=50, max_iters=300, rel_tol=1e-11):
    """Direct 2D minimization of K*M/P over random starts; returns 2*min.

    Preconditioned descent on the scale-invariant quotient; independent of
    the radial shooting route, so the two estimates of the critical
    coupling cross-validate each other.
    """
    rng = np.random.default_rng(seed)
    best = np.inf
    shift_mesh = grid.k_sq + 1.0
    for _ in range(n_starts):
        u = random_localized_field(grid, rng).values
        fourier = grid.fft2(u)
        quotient = np.inf
        for _ in range(max_iters):
            dens = kernels.abs2(u)
            k = float(np.sum(grid.k_sq * kernels.abs2(fourier))) * grid.cell_area / grid.n**2
            p4 = float(np.sum(dens * dens)) * grid.cell_area
            quotient_new = k / p4  # fields kept normalized: M = 1
            lap = grid.ifft2(grid.k_sq * fourier)
            grad = (lap + k * u - 2.0 * quotient_new * dens * u) * (2.0 / p4)
            drop = quotient - quotient_new
            quotient = quotient_new
            if drop < rel_tol * abs(quotient):
                break
            direction = grid.ifft2(grid.fft2(grad) / shift_mesh)
            step = 0.5
            for _ in range(30):
                cand = u - step * direction
                cand_fourier = grid.fft2(cand)
                nsq = float(np.sum(kernels.abs2(cand))) * grid.cell_area
                k_c = (
                    float(np.sum(grid.k_sq * kernels.abs2(cand_fourier)))
                    * grid.cell_area
                    / grid.n**2
                )
                dens_c = kernels.abs2(cand)
                p4_c = float(np.sum(dens_c * dens_c)) * grid.cell_area
                q_c = k_c * nsq / p4_c
                if q_c < quotient:
                    root = np.sqrt(nsq)
                    u = cand / root
                    fourier = cand_fourier / root
                    break
                step *= 0.5
            else:
                break
        best = min(best, quotient)
    return 2.0 * best


DEFAULT_SUITES = (
    "gn-inequality",
    "diamagnetic",
    "pohozaev",
    "parseval",
    "phase-invariance",
)


def run_check_suites(
    profile,
    constants,
    grid=None,
    seed=0,
    trials=100,
    a_star_override=None,
    names=DEFAULT_SUITES,
    jobs=1,
):
    """Run the named suites with deterministic per-suite seeds."""
    if grid is None:
        grid = SpectralGrid(128, 10.0)
    if a_star_override is not None:
        constants = replace(constants, a_star=float(a_star_override))
    runners = {
        "gn-inequality": lambda sd: suite_gn_inequality(
            profile, constants, grid, trials=max(trials, 200), seed=sd
        ),
        "diamagnetic": lambda sd: suite_diamagnetic(grid, trials=trials, seed=sd),
        "pohozaev": lambda sd: suite_pohozaev(profile, constants),
        "parseval": lambda sd: suite_parseval(grid, trials=trials, seed=sd),
        "phase-invariance": lambda sd: suite_phase_invariance(
            constants, grid, trials=trials, seed=sd
        ),
        "gradient-fd": lambda sd: suite_gradient_fd(constants, grid, trials=trials, seed=sd),
        "hartree-vs-gp": lambda sd: suite_hartree_vs_gp(constants, grid, trials=trials, seed=sd),
        "mixed-convexity": lambda sd: suite_mixed_convexity(
            constants, grid, trials=trials, seed=sd
        ),
    }
    tasks = [(name, runners[name], seed + 1000 * i) for i, name in enumerate(names)]
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(fn, sd) for _, fn, sd in tasks]
            return [f.result() for f in futures]
    return [fn(sd) for _, fn, sd in tasks]


def format_table(results):
    lines = ["suite                 status  worst-margin"]
    for r in results:
        lines.append(f"{r.name:<21} {'PASS' if r.passed else 'FAIL':<7} {r.worst:+.6e}")
    lines.append(
        f"overall: {'PASS' if all(r.passed for r in results) else 'FAIL'}"
    )
    return "\n".join(lines)
