"""Collapse scans toward the critical coupling and their scaling-law fits.

A scan walks a ladder of couplings a -> a_star, solving each rung at
blow-up scale with a warm start from the previous rung, then fits
log(E_physical) against log(a_star - a). The fitted exponent and constant
are compared to the predicted law E = (a_star-a)^{s/(s+2)} *
(lambda_tilde^2/a_star) * (s+2)/s, which at s=2, c0=1 is
sqrt(a_star-a) * 2*lambda_star^2 / a_star.
"""

import csv
import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels
from .functional import GPParams, gp_energy, hartree_energy
from .minimizer import minimize, phase_align
from .profile import blowup_profile, materialize_profile

DEFAULT_LADDER_GAPS = (0.2, 0.1, 0.05, 0.04, 0.02, 0.01)
MIN_FIT_ROWS = 4


@dataclass(frozen=True)
class ScanRow:
    a: float
    eps: float
    energy_physical: float
    f_over_eps2: float
    mu: float
    width50: float
    distance_to_qn: float
    converged: bool
    residual: float


@dataclass
class ScanResult:
    rows: list
    fitted_exponent: Optional[float]
    fitted_constant: Optional[float]
    target_exponent: float
    target_constant: float
    omega: float
    s: float
    c0: float
    a_star: float
    fields: Optional[list] = None

    def converged_rows(self):
        return [r for r in self.rows if r.converged]

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            f.write("# schema: gpcollapse.scan.v1\n")
            w = csv.writer(f)
            w.writerow(
                [
                    "a",
                    "eps",
                    "energy_physical",
                    "f_over_eps2",
                    "mu",
                    "width50",
                    "distance_to_qn",
                    "converged",
                    "residual",
                ]
            )
            for r in self.rows:
                w.writerow(
                    [
                        f"{r.a:.17g}",
                        f"{r.eps:.17g}",
                        f"{r.energy_physical:.17g}",
                        f"{r.f_over_eps2:.17g}",
                        f"{r.mu:.17g}",
                        f"{r.width50:.17g}",
                        f"{r.distance_to_qn:.17g}",
                        int(r.converged),
                        f"{r.residual:.17g}",
                    ]
                )

    def to_json_dict(self):
        return {
            "schema": "gpcollapse.scan.v1",
            "omega": self.omega,
            "s": self.s,
            "c0": self.c0,
            "a_star": self.a_star,
            "fitted_exponent": self.fitted_exponent,
            "fitted_constant": self.fitted_constant,
            "target_exponent": self.target_exponent,
            "target_constant": self.target_constant,
            "rows": [
                {
                    "a": r.a,
                    "eps": r.eps,
                    "energy_physical": r.energy_physical,
                    "f_over_eps2": r.f_over_eps2,
                    "mu": r.mu,
                    "width50": r.width50,
                    "distance_to_qn": r.distance_to_qn,
                    "converged": r.converged,
                    "residual": r.residual,
                }
                for r in self.rows
            ],
        }

    def to_json(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, indent=2)
            f.write("\n")

    def plot_data(self, path):
        """(log gap, log E) pairs for external plotting."""
        with open(path, "w", newline="") as f:
            f.write("# schema: gpcollapse.plotdata.v1\n")
            w = csv.writer(f)
            w.writerow(["log_gap", "log_energy"])
            for r in self.converged_rows():
                gap = self.a_star - r.a
                w.writerow([f"{np.log(gap):.17g}", f"{np.log(r.energy_physical):.17g}"])


def fit_power_law(gaps, energies):
    """Least-squares fit of E = C * gap^p in log-log space -> (p, C)."""
    gaps = np.asarray(gaps, dtype=float)
    energies = np.asarray(energies, dtype=float)
    if gaps.size < 2:
        raise ValueError("need at least two points to fit a power law")
    slope, intercept = np.polyfit(np.log(gaps), np.log(energies), 1)
    return float(slope), float(np.exp(intercept))


def width_half_mass(field):
    """Radius containing half the mass, interpolated on the sorted radii."""
    g = field.grid
    dens = kernels.abs2(field.values).ravel() * g.cell_area
    r = np.sqrt(g.r_sq).ravel()
    order = np.argsort(r)
    cum = np.cumsum(dens[order])
    cum /= cum[-1]
    i = int(np.searchsorted(cum, 0.5))
    r_sorted = r[order]
    if i == 0:
        return float(r_sorted[0])
    frac = (0.5 - cum[i - 1]) / (cum[i] - cum[i - 1])
    return float(r_sorted[i - 1] + frac * (r_sorted[i] - r_sorted[i - 1]))


def collapse_scan(p_base, ladder, cfg, grid, profile, constants, keep_fields=False):
    """Run the continuation ladder and fit the collapse energy law.

    ladder: couplings a, strictly increasing toward a_star. Non-converged
    rungs are flagged and excluded from the fit; the scan still returns.
    """
    ladder = list(ladder)
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be strictly increasing toward a_star")
    if any(a >= constants.a_star for a in ladder):
        raise ValueError("ladder entries must stay below a_star")

    rows = []
    fields = []
    prev_field = None
    for a in ladder:
        p = p_base.with_a(a)
        rep = minimize(
            p, cfg, grid, profile=profile, constants=constants, init_field=prev_field
        )
        if rep.converged:
            prev_field = rep.field
        width_blow = width_half_mass(rep.field)
        rows.append(
            ScanRow(
                a=a,
                eps=p.eps,
                energy_physical=rep.energy_physical,
                f_over_eps2=rep.f_over_eps2,
                mu=rep.breakdown.mu,
                width50=p.length_rescale * width_blow,
                distance_to_qn=rep.phase_aligned_distance,
                converged=rep.converged,
                residual=rep.residual,
            )
        )
        fields.append(rep.field)

    good = [r for r in rows if r.converged]
    fitted_exponent = fitted_constant = None
    if len(good) >= MIN_FIT_ROWS:
        gaps = [constants.a_star - r.a for r in good]
        energies = [r.energy_physical for r in good]
        fitted_exponent, fitted_constant = fit_power_law(gaps, energies)

    return ScanResult(
        rows=rows,
        fitted_exponent=fitted_exponent,
        fitted_constant=fitted_constant,
        target_exponent=constants.energy_exponent,
        target_constant=constants.energy_constant,
        omega=p_base.omega,
        s=p_base.s,
        c0=p_base.c0,
        a_star=constants.a_star,
        fields=fields if keep_fields else None,
    )


def ladder_from_gaps(a_star, gaps=DEFAULT_LADDER_GAPS):
    """Coupling ladder from a decreasing sequence of gaps a_star - a."""
    gaps = sorted(gaps, reverse=True)
    return [a_star - g for g in gaps]


@dataclass(frozen=True)
class ConvergenceRecord:
    distances: tuple
    monotone_ok: bool
    final_distance: float
    final_ok: bool
    width_ratio: Optional[float]
    width_ratio_target: Optional[float]
    width_ok: Optional[bool]
    ok: bool


def profile_convergence(
    scan,
    final_threshold=0.15,
    step_slack=0.10,
    width_gap_pair=(0.04, 0.01),
    width_tol=0.05,
):
    """Check the blow-up profile convergence along the ladder.

    Distances must be nonincreasing within a per-step slack, the terminal
    distance below the threshold, and the half-mass width must scale like
    gap^{1/(s+2)} between the two reference rungs when both are present.
    """
    rows = scan.converged_rows()
    if len(rows) < 2:
        raise ValueError("need at least two converged rows")
    distances = tuple(r.distance_to_qn for r in rows)
    monotone_ok = all(
        d_next <= (1.0 + step_slack) * d for d, d_next in zip(distances, distances[1:])
    )
    final_ok = distances[-1] < final_threshold

    width_ratio = width_target = width_ok = None
    by_gap = {round(scan.a_star - r.a, 12): r for r in rows}
    g_hi, g_lo = width_gap_pair
    row_hi = by_gap.get(round(g_hi, 12))
    row_lo = by_gap.get(round(g_lo, 12))
    if row_hi is not None and row_lo is not None:
        width_ratio = row_hi.width50 / row_lo.width50
        width_target = (g_hi / g_lo) ** (1.0 / (scan.s + 2.0))
        width_ok = abs(width_ratio / width_target - 1.0) <= width_tol

    ok = monotone_ok and final_ok and (width_ok is not False)
    return ConvergenceRecord(
        distances=distances,
        monotone_ok=monotone_ok,
        final_distance=distances[-1],
        final_ok=final_ok,
        width_ratio=width_ratio,
        width_ratio_target=width_target,
        width_ok=width_ok,
        ok=bool(ok),
    )


@dataclass(frozen=True)
class HartreeBoundRecord:
    gap: float
    bound: float
    grad_l6_product: float
    nonneg_ok: bool
    bound_ok: bool
    ok: bool


def hartree_upper_bound_check(profile, constants, grid, w, a, omega=0.0):
    """Trial-state comparison of the smeared and contact energies.

    Evaluates both functionals on the collapse profile at coupling a and
    checks 0 <= E_H - E_GP <= 2 a_star (int |z| w) N^{-beta} (a_star-a)^{-5/4}.
    """
    qn = blowup_profile(grid, profile, constants, a).normalized()
    p = GPParams(
        a=a,
        a_star=constants.a_star,
        omega=omega,
        s=constants.s,
        c0=constants.c0,
        scale="physical",
    )
    gp = gp_energy(qn, p)
    ha = hartree_energy(qn, p, w)
    gap = ha.total - gp.total

    smear = float(w.bigN ** (-w.beta)) if w.width is None else w.sigma
    bound = (
        2.0
        * constants.a_star
        * w.base_first_abs_moment
        * smear
        * (constants.a_star - a) ** (-1.25)
    )

    g = qn.grid
    grad_norm = np.sqrt(
        float(np.sum(g.k_sq * kernels.abs2(g.fft2(qn.values)))) * g.cell_area / g.n**2
    )
    l6_cubed = (kernels.sextic_sum(qn.values) * g.cell_area) ** 0.5
    nonneg_ok = gap >= -1e-10
    bound_ok = gap <= bound
    return HartreeBoundRecord(
        gap=float(gap),
        bound=float(bound),
        grad_l6_product=float(grad_norm * l6_cubed),
        nonneg_ok=bool(nonneg_ok),
        bound_ok=bool(bound_ok),
        ok=bool(nonneg_ok and bound_ok),
    )
