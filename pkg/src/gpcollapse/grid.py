"""Uniform periodic 2D spectral grid and complex fields living on it.

The box is [-L, L)^2 sampled at n points per axis (n a power of two), so
all integrals are plain h^2 sums (trapezoid on the torus -- spectrally
accurate for fields that have decayed at the boundary) and derivatives
are Fourier multipliers k_j = pi*j'/L with j' the signed FFT index.

Position-weighted quantities use the *box* coordinates, not periodized
ones, so fields must carry negligible mass in the outer 10% annulus;
helpers are provided to check that.
"""

import csv
import struct

import numpy as np
from scipy import fft as _fft

from . import kernels

_BOUNDARY_MASS_TOL = 1e-10  # warn threshold for the outer 10% annulus


def _is_power_of_two(m):
    return m >= 1 and (m & (m - 1)) == 0


class SpectralGrid:
    """Immutable grid descriptor plus precomputed coordinate/wavenumber tables."""

    def __init__(self, n, extent):
        n = int(n)
        if n < 8 or not _is_power_of_two(n):
            raise ValueError(f"n must be a power of two >= 8, got {n}")
        if not extent > 0:
            raise ValueError(f"extent must be positive, got {extent}")
        self.n = n
        self.extent = float(extent)
        self.spacing = 2.0 * self.extent / n

        self.x = -self.extent + self.spacing * np.arange(n)
        # k_j = pi * j' / L with j' the signed index
        self.k = 2.0 * np.pi * _fft.fftfreq(n, d=self.spacing)
        # first-derivative table: Nyquist mode zeroed (standard asymmetry fix)
        kd = self.k.copy()
        kd[n // 2] = 0.0
        self.k_deriv = kd

        self.x1 = self.x[:, None] + np.zeros((1, n))
        self.x2 = self.x[None, :] + np.zeros((n, 1))
        self.r_sq = self.x[:, None] ** 2 + self.x[None, :] ** 2
        self.k_sq = self.k[:, None] ** 2 + self.k[None, :] ** 2
        self.kd1 = kd[:, None] + np.zeros((1, n))
        self.kd2 = kd[None, :] + np.zeros((n, 1))
        self._outer_mask = np.sqrt(self.r_sq) > 0.9 * self.extent
        self._pow_cache = {2.0: self.r_sq}

    @property
    def cell_area(self):
        return self.spacing * self.spacing

    @property
    def box_area(self):
        return (2.0 * self.extent) ** 2

    def __repr__(self):
        return f"SpectralGrid(n={self.n}, extent={self.extent})"

    def __eq__(self, other):
        return (
            isinstance(other, SpectralGrid)
            and other.n == self.n
            and other.extent == self.extent
        )

    def __hash__(self):
        return hash((self.n, self.extent))

    # -- quadrature and calculus ------------------------------------------

    def integrate(self, samples):
        """h^2 * sum(samples): the torus trapezoid rule."""
        return float(np.sum(samples)) * self.cell_area

    def fft2(self, values):
        return _fft.fft2(values)

    def ifft2(self, fourier):
        return _fft.ifft2(fourier)

    def deriv1(self, values, fourier=None):
        """Spectral d/dx1 (axis 0)."""
        if fourier is None:
            fourier = _fft.fft2(values)
        return _fft.ifft2(1j * self.kd1 * fourier)

    def deriv2(self, values, fourier=None):
        """Spectral d/dx2 (axis 1)."""
        if fourier is None:
            fourier = _fft.fft2(values)
        return _fft.ifft2(1j * self.kd2 * fourier)

    def laplacian(self, values, fourier=None):
        """Returns -Laplacian applied to values (the positive operator)."""
        if fourier is None:
            fourier = _fft.fft2(values)
        return _fft.ifft2(self.k_sq * fourier)

    def radial_power(self, s):
        """|x|^s mesh in box coordinates, cached per exponent."""
        s = float(s)
        mesh = self._pow_cache.get(s)
        if mesh is None:
            mesh = self.r_sq ** (s / 2.0)
            self._pow_cache[s] = mesh
        return mesh

    def outer_annulus_mass(self, density):
        """Mass of a density (e.g. |u|^2) in the outer 10% annulus."""
        return float(np.sum(density[self._outer_mask])) * self.cell_area


class ComplexField:
    """A complex amplitude per grid point; treated as immutable once built."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values, copy=True):
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (grid.n, grid.n):
            raise ValueError(f"values shape {values.shape} != grid {(grid.n, grid.n)}")
        self.grid = grid
        self.values = values.copy() if copy else values

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, fn(grid.x1, grid.x2), copy=False)

    def density(self):
        return kernels.abs2(self.values)

    def norm_sq(self):
        return self.grid.integrate(self.density())

    def normalized(self):
        nsq = self.norm_sq()
        if nsq == 0.0:
            raise ValueError("cannot normalize the zero field")
        return ComplexField(self.grid, self.values / np.sqrt(nsq), copy=False)

    def check_normalized(self, tol=1e-8):
        nsq = self.norm_sq()
        if abs(nsq - 1.0) > tol:
            raise ValueError(f"field not normalized: ||u||^2 = {nsq!r}")

    def phase_rotated(self, theta):
        return ComplexField(self.grid, np.exp(1j * theta) * self.values, copy=False)

    # -- serialization ----------------------------------------------------

    def to_binary(self, path):
        """Header: n, extent as 8-byte floats; payload interleaved re/im, row-major."""
        n = self.grid.n
        with open(path, "wb") as f:
            f.write(struct.pack("<dd", float(n), self.grid.extent))
            inter = np.empty((n, n, 2))
            inter[:, :, 0] = self.values.real
            inter[:, :, 1] = self.values.imag
            f.write(inter.astype("<f8").tobytes())

    @classmethod
    def from_binary(cls, path):
        with open(path, "rb") as f:
            n_f, extent = struct.unpack("<dd", f.read(16))
            n = int(n_f)
            raw = np.frombuffer(f.read(n * n * 2 * 8), dtype="<f8").reshape(n, n, 2)
        grid = SpectralGrid(n, extent)
        return cls(grid, raw[:, :, 0] + 1j * raw[:, :, 1], copy=False)

    def to_csv(self, path, schema="gpcollapse.field.v1"):
        g = self.grid
        with open(path, "w", newline="") as f:
            f.write(f"# schema: {schema}\n")
            w = csv.writer(f)
            w.writerow(["x1", "x2", "re", "im"])
            for i in range(g.n):
                xi = g.x[i]
                row_v = self.values[i]
                for j in range(g.n):
                    w.writerow(
                        [
                            f"{xi:.17g}",
                            f"{g.x[j]:.17g}",
                            f"{row_v[j].real:.17g}",
                            f"{row_v[j].imag:.17g}",
                        ]
                    )


# -- inner products and operator expectations -----------------------------


def inner(u, v):
    """L^2 inner product <u, v> = h^2 * sum(conj(u) v)."""
    return complex(np.vdot(u.values, v.values)) * u.grid.cell_area


def gradient_norm_sq(u):
    """Integral of |grad u|^2 via the |k|^2 Fourier multiplier."""
    g = u.grid
    fourier = g.fft2(u.values)
    return float(np.sum(g.k_sq * kernels.abs2(fourier))) * g.cell_area / g.n**2


def fourier_norm_sq(u):
    """Parseval twin of the position-space norm (used as a cross-check)."""
    g = u.grid
    fourier = g.fft2(u.values)
    return float(np.sum(kernels.abs2(fourier))) * g.cell_area / g.n**2


def angular_momentum(u, fourier=None):
    """Expectation <u, L u> with L = i (x2 d1 - x1 d2); real by self-adjointness."""
    g = u.grid
    if fourier is None:
        fourier = g.fft2(u.values)
    d1 = g.deriv1(u.values, fourier)
    d2 = g.deriv2(u.values, fourier)
    lu = 1j * (g.x2 * d1 - g.x1 * d2)
    return float(np.sum((np.conj(u.values) * lu).real)) * g.cell_area


def rescale_to_blowup(u, eps, target_grid=None):
    """Map u(x) -> sqrt(eps) * u(sqrt(eps) x).

    With no target grid the map is exact: the result lives on a grid with
    extent L/sqrt(eps) whose nodes coincide with the scaled sample points,
    so the values are just sqrt(eps)*u. With an explicit target grid the
    band-limited interpolant of u is evaluated at the scaled coordinates.
    """
    if not eps > 0:
        raise ValueError(f"blow-up scale factor must be positive, got {eps}")
    root = np.sqrt(eps)
    if target_grid is None:
        new_grid = SpectralGrid(u.grid.n, u.grid.extent / root)
        return ComplexField(new_grid, root * u.values)
    scaled = _evaluate_interpolant(u, root * target_grid.x)
    return ComplexField(target_grid, root * scaled, copy=False)


def resample(u, target_grid):
    """Evaluate the trigonometric interpolant of u on another grid."""
    return ComplexField(target_grid, _evaluate_interpolant(u, target_grid.x), copy=False)


def _evaluate_interpolant(u, points):
    """Band-limited evaluation at a per-axis set of coordinates (tensor grid)."""
    g = u.grid
    coeff = g.fft2(u.values) / g.n**2
    # FFT phases count from the box corner: wrap into [0, 2L)
    xi = np.mod(points + g.extent, 2.0 * g.extent)
    phases = np.exp(1j * np.outer(xi, g.k))
    # real-symmetric treatment of the unpaired Nyquist mode
    nyq = g.n // 2
    phases[:, nyq] = np.cos(g.k[nyq] * xi)
    return phases @ coeff @ phases.T


def random_localized_field(grid, rng, band_frac=0.25, envelope_frac=0.2, normalize=True):
    """Random band-limited field under a Gaussian envelope (decays in the box).

    Suitable for testing inequalities stated on the plane: the envelope makes
    the periodic wrap negligible while the band limit keeps all quadratures
    spectrally exact.
    """
    n = grid.n
    bw = max(2, int(band_frac * n / 2))
    coeff = np.zeros((n, n), dtype=np.complex128)
    block = rng.standard_normal((2 * bw + 1, 2 * bw + 1)) + 1j * rng.standard_normal(
        (2 * bw + 1, 2 * bw + 1)
    )
    idx = np.arange(-bw, bw + 1)
    coeff[np.ix_(idx, idx)] = block
    values = _fft.ifft2(coeff) * n
    w = envelope_frac * grid.extent
    values = values * np.exp(-grid.r_sq / (2.0 * w * w))
    field = ComplexField(grid, values, copy=False)
    return field.normalized() if normalize else field
