"""The positive radial ground profile of -(Laplacian)Q + Q - Q^3 = 0 and its constants.

The profile is found by shooting from the origin: Q'(0) = 0, Q(0) = q0,
bisecting q0 between shots that fall through zero (too high) and shots
that turn back up before decaying (too low). Once the bracket collapses
to machine precision the forward shot is trusted down to a graft level
(1e-4 by default, r ~ 9) and continued with the decaying solution of the
linearized equation, amp*K0(r); the neglected cubic term is O(1e-12) there.
The graft level balances that model error against the e^{+r}-amplified
integration error of the shot, keeping the table residual below 1e-8. This sidesteps the e^{+r} amplification that
makes a raw shot meaningless near r_max in double precision.

All radial integrals use composite Simpson on the uniform output table,
which resamples the adaptive ODE solution through its dense output.
"""

import csv
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.special import k0, k1

from . import kernels
from .grid import ComplexField

DEFAULT_BRACKET = (1.0, 4.0)
GRAFT_LEVEL = 1e-4
_SERIES_START = 1e-6


class BracketError(RuntimeError):
    """Initial shooting bracket does not straddle the ground profile."""


def _rhs(r, y):
    q, p = y
    return (p, q - q * q * q - p / r)


def _start_state(q0):
    # series around the regular origin: q'' (0) = (q0 - q0^3)/2
    curv = 0.5 * (q0 - q0**3)
    r0 = _SERIES_START
    return r0, np.array([q0 + 0.5 * curv * r0 * r0, curv * r0])


def _shoot(q0, r_end, rtol, events, dense=False):
    r0, y0 = _start_state(q0)
    return solve_ivp(
        _rhs,
        (r0, r_end),
        y0,
        method="DOP853",
        rtol=rtol,
        atol=rtol * 1e-2,
        events=events,
        dense_output=dense,
        # the dense-output interpolant is what the table is read from, so
        # keep steps short enough that its error stays below the residual budget
        max_step=0.02 if dense else np.inf,
    )


def _classify(q0, r_end, rtol):
    """True if the shot is too high (crosses zero), False if too low."""

    def crossed(r, y):
        return y[0]

    crossed.terminal = True
    crossed.direction = -1.0

    def turned(r, y):
        return y[1]

    turned.terminal = True
    turned.direction = 1.0

    sol = _shoot(q0, r_end, rtol, events=[crossed, turned])
    if sol.t_events[0].size:
        return True
    if sol.t_events[1].size:
        return False
    return sol.y[0, -1] < 0.0


@dataclass
class RadialProfile:
    """Ground profile sampled on a uniform radial table, K0 tail beyond the graft."""

    r: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    q0: float
    r_max: float
    dr: float
    graft_radius: float
    tail_amp: float

    @cached_property
    def l2_norm_sq(self):
        """2*pi*int q^2 r dr; the critical coupling."""
        return self.moment(0.0)

    def moment(self, s):
        """2*pi*int |x|^s Q^2 = 2*pi*int q^2 r^{1+s} dr."""
        return float(2.0 * np.pi * simpson(self.q**2 * self.r ** (1.0 + s), x=self.r))

    def quartic_integral(self):
        return float(2.0 * np.pi * simpson(self.q**4 * self.r, x=self.r))

    def sextic_integral(self):
        return float(2.0 * np.pi * simpson(self.q**6 * self.r, x=self.r))

    def gradient_norm_sq(self):
        return float(2.0 * np.pi * simpson(self.qd**2 * self.r, x=self.r))

    def __call__(self, radii):
        """Cubic interpolation of Q at arbitrary radii (zero beyond the table)."""
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        flat = kernels.radial_eval(self.q, self.dr, 1.0, radii, np.zeros(1), 0.0, 0.0)
        return flat[:, 0]

    def half_mass_radius(self):
        dens = self.q**2 * self.r
        cum = np.concatenate(
            [[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(self.r))]
        )
        cum *= 2.0 * np.pi / self.l2_norm_sq
        i = int(np.argmax(cum >= 0.5))
        frac = (0.5 - cum[i - 1]) / (cum[i] - cum[i - 1])
        return float(self.r[i - 1] + frac * (self.r[i] - self.r[i - 1]))

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            f.write("# schema: gpcollapse.profile.v1\n")
            w = csv.writer(f)
            w.writerow(["r", "Q"])
            for ri, qi in zip(self.r, self.q):
                w.writerow([f"{ri:.17g}", f"{qi:.17g}"])


@dataclass(frozen=True)
class GNConstants:
    """Critical coupling and blow-up rate constants for a trap |x|^s."""

    a_star: float
    lambda_star: float
    s: float
    c0: float
    lambda_tilde: float

    def to_json_dict(self):
        return {
            "schema": "gpcollapse.constants.v1",
            "a_star": self.a_star,
            "lambda_star": self.lambda_star,
            "s": self.s,
            "c0": self.c0,
            "lambda_tilde": self.lambda_tilde,
        }

    def to_json(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, indent=2)
            f.write("\n")

    @property
    def energy_constant(self):
        """Leading coefficient of the collapse energy law for this trap."""
        return (self.lambda_tilde**2 / self.a_star) * (self.s + 2.0) / self.s

    @property
    def energy_exponent(self):
        return self.s / (self.s + 2.0)


def solve_profile(r_max=20.0, tol=1e-13, dr=0.0025, bracket=DEFAULT_BRACKET):
    """Shoot for the ground profile and return it tabulated up to r_max.

    tol is the adaptive integrator tolerance (it controls the ODE residual
    of the table); the bisection itself always runs until the q0 bracket
    collapses to machine precision, since the shot endpoint responds to q0
    at the level e^{+r_max} * ulp.
    """
    if r_max < 15:
        raise ValueError(f"r_max must be >= 15, got {r_max}")
    if tol > 1e-10:
        raise ValueError(f"tol must be <= 1e-10, got {tol}")
    lo, hi = bracket
    r_class = min(r_max, 18.0)
    if _classify(lo, r_class, tol):
        raise BracketError(
            f"lower bracket q0={lo} already falls through zero; "
            f"bracket {bracket} does not straddle the profile"
        )
    if not _classify(hi, r_class, tol):
        raise BracketError(
            f"upper bracket q0={hi} stays positive; "
            f"bracket {bracket} does not straddle the profile"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _classify(mid, r_class, tol):
            hi = mid
        else:
            lo = mid
    q0 = 0.5 * (lo + hi)

    def at_graft(r, y):
        return y[0] - GRAFT_LEVEL

    at_graft.terminal = True
    at_graft.direction = -1.0

    sol = _shoot(q0, r_class, tol, events=[at_graft], dense=True)
    if not sol.t_events[0].size:
        raise RuntimeError("shot never decayed to the graft level; bisection failed")
    r_graft = float(sol.t_events[0][0])
    amp = GRAFT_LEVEL / k0(r_graft)

    m = int(round(r_max / dr))
    r = dr * np.arange(m + 1)
    q = np.empty(m + 1)
    qd = np.empty(m + 1)
    inside = r <= r_graft
    # node 0 sits below the series start of the integration
    q[0], qd[0] = q0, 0.0
    body = inside.copy()
    body[0] = False
    states = sol.sol(r[body])
    q[body] = states[0]
    qd[body] = states[1]
    q[~inside] = amp * k0(r[~inside])
    qd[~inside] = -amp * k1(r[~inside])

    prof = RadialProfile(
        r=r,
        q=q,
        qd=qd,
        q0=q0,
        r_max=float(r_max),
        dr=float(dr),
        graft_radius=r_graft,
        tail_amp=float(amp),
    )
    if prof.q[-1] >= 1e-8:
        raise RuntimeError(f"tail failed to decay: Q(r_max) = {prof.q[-1]:.3e}")
    return prof


def ode_residual(profile):
    """Max-norm residual of q'' + q'/r - q + q^3 on interior nodes (4th-order FD)."""
    r, q, h = profile.r, profile.q, profile.dr
    i = slice(2, -2)
    d1 = (-q[4:] + 8 * q[3:-1] - 8 * q[1:-3] + q[:-4]) / (12 * h)
    d2 = (-q[4:] + 16 * q[3:-1] - 30 * q[2:-2] + 16 * q[1:-3] - q[:-4]) / (12 * h * h)
    res = d2 + d1 / r[i] - q[i] + q[i] ** 3
    return float(np.max(np.abs(res)))


def compute_constants(profile, s=2.0, c0=1.0):
    """Derive the critical coupling and the blow-up rate constants.

    lambda_tilde reduces to lambda_star when s=2, c0=1.
    """
    if not (s > 0 and c0 > 0):
        raise ValueError(f"need s > 0 and c0 > 0, got s={s}, c0={c0}")
    a_star = profile.l2_norm_sq
    lambda_star = profile.moment(2.0) ** 0.25
    lambda_tilde = (0.5 * s * c0 * profile.moment(s)) ** (1.0 / (2.0 + s))
    return GNConstants(
        a_star=a_star,
        lambda_star=lambda_star,
        s=float(s),
        c0=float(c0),
        lambda_tilde=lambda_tilde,
    )


class SupportOverflowError(ValueError):
    """Materialized profile does not fit in the grid box."""

    def __init__(self, mass, suggested_extent):
        self.mass = mass
        self.suggested_extent = suggested_extent
        super().__init__(
            f"profile mass {mass:.3e} in the outer 10% annulus exceeds 1e-8; "
            f"use extent >= {suggested_extent:.1f}"
        )


def materialize_profile(grid, profile, lam=1.0, center=(0.0, 0.0), mass_tol=1e-8):
    """The scaled/translated normalized family lam * Q*(lam(x - X)) on a grid.

    Q* is Q divided by its L^2 norm, so every member has unit norm up to
    interpolation error (checked to 1e-6 by the callers that care).
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    cx, cy = center
    if abs(cx) >= grid.extent or abs(cy) >= grid.extent:
        raise ValueError(f"center {center} outside the box [-{grid.extent}, {grid.extent})^2")
    table = profile.q / np.sqrt(profile.l2_norm_sq)
    vals = kernels.radial_eval(table, profile.dr, float(lam), grid.x, grid.x, float(cx), float(cy))
    field = ComplexField(grid, vals.astype(np.complex128), copy=False)
    mass = grid.outer_annulus_mass(kernels.abs2(field.values))
    if mass > mass_tol:
        suggested = profile.r_max / (0.9 * lam) + max(abs(cx), abs(cy))
        raise SupportOverflowError(mass, suggested)
    return field


def blowup_profile(grid, profile, constants, a):
    """Collapse profile at coupling a: the family member at the predicted scale.

    The scale is lambda_tilde * (a_star - a)^{-1/(2+s)}, which reduces to
    lambda_star * (a_star - a)^{-1/4} for the harmonic trap.
    """
    if a >= constants.a_star:
        raise ValueError(f"need a < a_star = {constants.a_star}, got a = {a}")
    if a <= 0:
        raise ValueError(f"need a > 0, got {a}")
    gap = constants.a_star - a
    lam = constants.lambda_tilde * gap ** (-1.0 / (2.0 + constants.s))
    return materialize_profile(grid, profile, lam=lam)
