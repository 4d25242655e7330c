"""Hot inner loops, with numba-jitted and pure-numpy twins.

Everything here is pointwise arithmetic or a plain reduction over an
n-by-n field; the FFT work lives elsewhere (numba has no FFT support).
The active backend is fixed at import time:

    GPCOLLAPSE_BACKEND=numpy   force the vectorized numpy path
    GPCOLLAPSE_BACKEND=numba   require the JIT path (raise if unavailable)
    unset / auto               numba when importable, numpy otherwise

``IMPLS`` keeps both implementation sets importable side by side so the
benchmark (benchmarks/bench_kernels.py) and the cross-checking tests can
compare them regardless of the active default.
"""

import os

import numpy as np

_REQUESTED = os.environ.get("GPCOLLAPSE_BACKEND", "auto").strip().lower()
if _REQUESTED not in ("auto", "numba", "numpy"):
    raise ValueError(f"GPCOLLAPSE_BACKEND must be auto|numba|numpy, got {_REQUESTED!r}")

_HAVE_NUMBA = False
if _REQUESTED != "numpy":
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        if _REQUESTED == "numba":
            raise
        _HAVE_NUMBA = False


# ---------------------------------------------------------------- numpy twins

def _np_abs2(u):
    return u.real * u.real + u.imag * u.imag


def _np_quartic_sum(u):
    d = u.real * u.real + u.imag * u.imag
    return float(np.sum(d * d))


def _np_sextic_sum(u):
    d = u.real * u.real + u.imag * u.imag
    return float(np.sum(d * d * d))


def _np_weighted_abs2_sum(u, w):
    return float(np.sum((u.real * u.real + u.imag * u.imag) * w))


def _np_assemble_gradient(lap, pot, nl_coeff, u):
    d = u.real * u.real + u.imag * u.imag
    return lap + (pot - nl_coeff * d) * u


def _np_radial_eval(table, dr, lam, x, y, cx, cy):
    # cubic Lagrange on the uniform radial table; zero beyond the table end
    rr = lam * np.hypot(x[:, None] - cx, y[None, :] - cy)
    t = rr / dr
    last = table.shape[0] - 1
    base = np.clip(np.floor(t).astype(np.int64) - 1, 0, last - 3)
    s = t - base
    q0 = table[base]
    q1 = table[base + 1]
    q2 = table[base + 2]
    q3 = table[base + 3]
    w0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0
    w1 = s * (s - 2.0) * (s - 3.0) / 2.0
    w2 = -s * (s - 1.0) * (s - 3.0) / 2.0
    w3 = s * (s - 1.0) * (s - 2.0) / 6.0
    out = lam * (w0 * q0 + w1 * q1 + w2 * q2 + w3 * q3)
    out[t > last] = 0.0
    return out


_NUMPY_IMPLS = {
    "abs2": _np_abs2,
    "quartic_sum": _np_quartic_sum,
    "sextic_sum": _np_sextic_sum,
    "weighted_abs2_sum": _np_weighted_abs2_sum,
    "assemble_gradient": _np_assemble_gradient,
    "radial_eval": _np_radial_eval,
}

IMPLS = {"numpy": _NUMPY_IMPLS}


# ---------------------------------------------------------------- numba twins

if _HAVE_NUMBA:

    @njit(cache=True, fastmath=True)
    def _nb_abs2(u):
        n0, n1 = u.shape
        out = np.empty((n0, n1))
        for i in range(n0):
            for j in range(n1):
                v = u[i, j]
                out[i, j] = v.real * v.real + v.imag * v.imag
        return out

    @njit(cache=True, fastmath=True)
    def _nb_quartic_sum(u):
        n0, n1 = u.shape
        acc = 0.0
        for i in range(n0):
            for j in range(n1):
                v = u[i, j]
                d = v.real * v.real + v.imag * v.imag
                acc += d * d
        return acc

    @njit(cache=True, fastmath=True)
    def _nb_sextic_sum(u):
        n0, n1 = u.shape
        acc = 0.0
        for i in range(n0):
            for j in range(n1):
                v = u[i, j]
                d = v.real * v.real + v.imag * v.imag
                acc += d * d * d
        return acc

    @njit(cache=True, fastmath=True)
    def _nb_weighted_abs2_sum(u, w):
        n0, n1 = u.shape
        acc = 0.0
        for i in range(n0):
            for j in range(n1):
                v = u[i, j]
                acc += (v.real * v.real + v.imag * v.imag) * w[i, j]
        return acc

    @njit(cache=True, fastmath=True)
    def _nb_assemble_gradient(lap, pot, nl_coeff, u):
        n0, n1 = u.shape
        out = np.empty((n0, n1), dtype=np.complex128)
        for i in range(n0):
            for j in range(n1):
                v = u[i, j]
                d = v.real * v.real + v.imag * v.imag
                out[i, j] = lap[i, j] + (pot[i, j] - nl_coeff * d) * v
        return out

    @njit(cache=True, fastmath=True)
    def _nb_radial_eval(table, dr, lam, x, y, cx, cy):
        n0 = x.shape[0]
        n1 = y.shape[0]
        last = table.shape[0] - 1
        out = np.empty((n0, n1))
        for i in range(n0):
            dx = x[i] - cx
            for j in range(n1):
                dy = y[j] - cy
                t = lam * np.sqrt(dx * dx + dy * dy) / dr
                if t > last:
                    out[i, j] = 0.0
                    continue
                base = int(t) - 1
                if base < 0:
                    base = 0
                elif base > last - 3:
                    base = last - 3
                s = t - base
                w0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0
                w1 = s * (s - 2.0) * (s - 3.0) / 2.0
                w2 = -s * (s - 1.0) * (s - 3.0) / 2.0
                w3 = s * (s - 1.0) * (s - 2.0) / 6.0
                out[i, j] = lam * (
                    w0 * table[base]
                    + w1 * table[base + 1]
                    + w2 * table[base + 2]
                    + w3 * table[base + 3]
                )
        return out

    IMPLS["numba"] = {
        "abs2": _nb_abs2,
        "quartic_sum": _nb_quartic_sum,
        "sextic_sum": _nb_sextic_sum,
        "weighted_abs2_sum": _nb_weighted_abs2_sum,
        "assemble_gradient": _nb_assemble_gradient,
        "radial_eval": _nb_radial_eval,
    }

BACKEND = "numba" if _HAVE_NUMBA else "numpy"
_ACTIVE = IMPLS[BACKEND]

abs2 = _ACTIVE["abs2"]
quartic_sum = _ACTIVE["quartic_sum"]
sextic_sum = _ACTIVE["sextic_sum"]
weighted_abs2_sum = _ACTIVE["weighted_abs2_sum"]
assemble_gradient = _ACTIVE["assemble_gradient"]
radial_eval = _ACTIVE["radial_eval"]


def available_backends():
    return sorted(IMPLS.keys())
