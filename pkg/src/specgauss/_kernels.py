"""Hot numeric kernels: numba-accelerated with a pure-numpy fallback.

Two kernels carry the bulk of the floating point work:

* ``panel_cos_power`` -- Gauss-Legendre panel integrals of v^a cos(v), the
  inner loop of the power-law coefficient table;
* ``synth_direct`` -- direct trigonometric synthesis of sample paths on an
  arbitrary grid (the reference path against which the FFT-based fast path
  is checked).

Set ``SPECGAUSS_NO_NUMBA=1`` in the environment to force the numpy
implementations; they are also used automatically when numba is not
importable.  ``benchmarks/bench_kernels.py`` compares the two backends.
"""

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("SPECGAUSS_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _FORCE_NUMPY

# panel chunk bound keeps the numpy path's temporaries below ~100 MB
_PANEL_CHUNK = 1 << 16


def panel_cos_power_numpy(a, lo, hi, x, w):
    """Gauss-Legendre integrals of v^a cos v over panels [lo_i, hi_i], 0 < lo_i."""
    out = np.empty(lo.shape[0])
    for start in range(0, lo.shape[0], _PANEL_CHUNK):
        sl = slice(start, min(start + _PANEL_CHUNK, lo.shape[0]))
        mid = 0.5 * (lo[sl] + hi[sl])
        half = 0.5 * (hi[sl] - lo[sl])
        v = mid[:, None] + half[:, None] * x[None, :]
        out[sl] = half * ((v**a * np.cos(v)) @ w)
    return out


def synth_direct_numpy(z_sin, z_cos, sin_amp, cos_amp, base, tgrid, one_minus_cos):
    """Direct series synthesis: out[p, m] = sum_k amplitudes * draws * basis.

    Basis per frequency k (1-based): sin(k*base*t) against z_sin, and either
    (1 - cos(k*base*t)) or cos(k*base*t) against z_cos.
    """
    n_paths, n_terms = z_sin.shape
    m = tgrid.shape[0]
    out = np.zeros((n_paths, m))
    # chunk over frequencies so the basis block stays small
    blk = max(1, min(n_terms, (1 << 22) // max(1, m)))
    for k0 in range(0, n_terms, blk):
        k1 = min(k0 + blk, n_terms)
        ks = np.arange(k0 + 1, k1 + 1, dtype=np.float64)
        ang = np.outer(ks * base, tgrid)
        s_basis = np.sin(ang)
        out += (z_sin[:, k0:k1] * sin_amp[k0:k1]) @ s_basis
        c_basis = np.cos(ang)
        if one_minus_cos:
            c_basis = 1.0 - c_basis
        out += (z_cos[:, k0:k1] * cos_amp[k0:k1]) @ c_basis
    return out


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _panel_cos_power_nb(a, lo, hi, x, w):
        n = lo.shape[0]
        q = x.shape[0]
        out = np.empty(n)
        for i in range(n):
            mid = 0.5 * (lo[i] + hi[i])
            half = 0.5 * (hi[i] - lo[i])
            acc = 0.0
            for j in range(q):
                v = mid + half * x[j]
                acc += w[j] * v**a * np.cos(v)
            out[i] = half * acc
        return out

    @njit(cache=True, nogil=True)
    def _synth_direct_nb(z_sin, z_cos, sin_amp, cos_amp, base, tgrid, one_minus_cos):
        n_paths, n_terms = z_sin.shape
        m = tgrid.shape[0]
        out = np.zeros((n_paths, m))
        srow = np.empty(m)
        crow = np.empty(m)
        for k in range(n_terms):
            sa = sin_amp[k]
            ca = cos_amp[k]
            if sa == 0.0 and ca == 0.0:
                continue
            wk = (k + 1) * base
            # one basis row per frequency, shared by every path
            for i in range(m):
                ang = wk * tgrid[i]
                srow[i] = np.sin(ang)
                c = np.cos(ang)
                crow[i] = 1.0 - c if one_minus_cos else c
            for p in range(n_paths):
                zs = z_sin[p, k] * sa
                zc = z_cos[p, k] * ca
                if zs == 0.0 and zc == 0.0:
                    continue
                for i in range(m):
                    out[p, i] += zs * srow[i] + zc * crow[i]
        return out

    def panel_cos_power_numba(a, lo, hi, x, w):
        return _panel_cos_power_nb(float(a), lo, hi, x, w)

    def synth_direct_numba(z_sin, z_cos, sin_amp, cos_amp, base, tgrid, one_minus_cos):
        return _synth_direct_nb(
            np.ascontiguousarray(z_sin),
            np.ascontiguousarray(z_cos),
            np.ascontiguousarray(sin_amp),
            np.ascontiguousarray(cos_amp),
            float(base),
            np.ascontiguousarray(tgrid),
            bool(one_minus_cos),
        )


if USE_NUMBA:
    panel_cos_power = panel_cos_power_numba
    synth_direct = synth_direct_numba
else:
    panel_cos_power = panel_cos_power_numpy
    synth_direct = synth_direct_numpy
