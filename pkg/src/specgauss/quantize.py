"""Functional quantization of truncated series expansions.

Pipeline: optimal scalar quantizers for standard normals (Lloyd fixed
point with closed-form centroids), level allocation under a product
budget, Gram-matrix eigenreduction of the non-orthonormal trigonometric
span, and product codebooks whose distortion splits into exact scalar
terms plus the expansion tail.  A Monte Carlo estimator cross-checks the
closed-form decomposition.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.special import ndtr, ndtri

from . import expansion as _exp
from ._util import float_text
from .errors import (
    BadParameter,
    GramSingularWarning,
    NonConvergenceWarning,
    TooFewPaths,
)
from .fourier import tail_sum

__all__ = [
    "Quantizer1D",
    "GramMatrix",
    "ReducedKL",
    "FunctionalQuantizer",
    "gauss1d_quantizer",
    "allocate_levels",
    "gram_matrix",
    "kl_reduce",
    "product_quantizer",
    "distortion_mc",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)
_LLOYD_CYCLES = 12
_NEWTON_CAP = 60


def _phi(x):
    return np.exp(-0.5 * x * x) / _SQRT2PI


def _xphi(x):
    # x * phi(x) with the +-inf cell edges contributing exactly 0.
    with np.errstate(invalid="ignore"):
        out = x * _phi(x)
    return np.where(np.isfinite(x), out, 0.0)


@dataclass(frozen=True)
class Quantizer1D:
    """Optimal n-level quantizer of a standard normal.

    ``levels`` are increasing and antisymmetric about 0, ``boundaries``
    the n-1 cell midpoints, ``distortion`` the mean squared error
    E(Z - q(Z))^2.  ``converged`` is False when the Lloyd iteration hit
    its cap before the level movement dropped below tolerance.
    """

    n: int
    levels: np.ndarray
    boundaries: np.ndarray
    distortion: float
    converged: bool = True

    def __post_init__(self):
        lv = np.ascontiguousarray(np.asarray(self.levels, dtype=float))
        bd = np.ascontiguousarray(np.asarray(self.boundaries, dtype=float))
        if lv.shape != (self.n,) or bd.shape != (max(self.n - 1, 0),):
            raise BadParameter("levels/boundaries shape mismatch")
        if self.n > 1 and not np.all(np.diff(lv) > 0):
            raise BadParameter("levels must be strictly increasing")
        for name, arr in (("levels", lv), ("boundaries", bd)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def quantize(self, y):
        """Indices of the nearest level for each value in ``y``."""
        return np.searchsorted(self.boundaries, np.asarray(y, dtype=float))


def _cell_mass(a, b):
    # Phi(b) - Phi(a); right-half cells go through the complementary
    # form, where ndtr keeps relative accuracy instead of cancelling
    # against 1
    direct = ndtr(b) - ndtr(a)
    flipped = ndtr(-a) - ndtr(-b)
    return np.where(a + b > 0, flipped, direct)


def _cell_distortion(a, b, y):
    # Integral of (z - y)^2 phi(z) over [a, b] in closed form.
    dphi = _cell_mass(a, b)
    return dphi * (1.0 + y * y) + _xphi(a) - _xphi(b) - 2.0 * y * (_phi(a) - _phi(b))


def _lloyd_step(y):
    mids = 0.5 * (y[:-1] + y[1:])
    a = np.concatenate(([-np.inf], mids))
    b = np.concatenate((mids, [np.inf]))
    mass = _cell_mass(a, b)
    new = np.where(mass > 0.0, (_phi(a) - _phi(b)) / np.where(mass > 0.0, mass, 1.0), y)
    # stay on the symmetric manifold; the fixed point is antisymmetric
    return 0.5 * (new - new[::-1])


def _centroid_residual(y):
    """Centroid-minus-level residual and the pieces its Jacobian needs."""
    mids = 0.5 * (y[:-1] + y[1:])
    a = np.concatenate(([-np.inf], mids))
    b = np.concatenate((mids, [np.inf]))
    mass = np.maximum(_cell_mass(a, b), 1e-300)
    cent = (_phi(a) - _phi(b)) / mass
    return cent - y, cent, a, b, mass


def _newton_delta(y):
    """Damped-Newton direction for the stationarity system.

    The coupling is tridiagonal: cell i touches levels i-1, i, i+1
    through its two boundaries.  Edge terms vanish because phi decays
    at the infinite boundaries.
    """
    from scipy.linalg import solve_banded

    r, cent, a, b, mass = _centroid_residual(y)
    da = (cent * _phi(a) - _xphi(a)) / mass
    db = (_xphi(b) - cent * _phi(b)) / mass
    diag = 0.5 * (da + db) - 1.0
    lower = 0.5 * da[1:]
    upper = 0.5 * db[:-1]
    ab = np.zeros((3, y.size))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return r, -solve_banded((1, 1), ab, r)


def gauss1d_quantizer(n, tol=1e-10):
    """Optimal n-level quantizer of a standard normal.

    Lloyd iteration with componentwise Aitken extrapolation does the
    bulk of the work; because plain Lloyd contracts at 1 - O(1/n^2), a
    damped Newton corrector on the stationarity system finishes large n
    off, rejecting any step that breaks the level ordering.
    """
    n = int(n)
    if n < 1:
        raise BadParameter("quantizer needs n >= 1")
    if not (tol > 0):
        raise BadParameter("tol must be positive")
    if n == 1:
        return Quantizer1D(1, np.zeros(1), np.zeros(0), 1.0)
    # high-resolution quantizers have point density ~ phi^(1/3), whose
    # cdf is Phi(x/sqrt(3)); starting there leaves only small smooth
    # corrections for the iteration
    y = math.sqrt(3.0) * ndtri((np.arange(1, n + 1) - 0.5) / n)
    converged = False
    for _ in range(_LLOYD_CYCLES):
        y1 = _lloyd_step(y)
        y2 = _lloyd_step(y1)
        move = float(np.max(np.abs(y2 - y1)))
        if move < tol:
            y = y2
            converged = True
            break
        d1 = y1 - y
        d2 = y2 - y1
        den = d2 - d1
        ok = np.abs(den) > 1e-300
        acc = np.where(ok, y2 - d2 * d2 / np.where(ok, den, 1.0), y2)
        acc = 0.5 * (acc - acc[::-1])
        y = y2
        if np.all(np.diff(acc) > 0.0):
            y3 = _lloyd_step(acc)
            resid = float(np.max(np.abs(y3 - acc)))
            if resid < move:
                y = y3
                if resid < tol:
                    converged = True
                    break
    if not converged:
        best = math.inf
        for _ in range(_NEWTON_CAP):
            r, delta = _newton_delta(y)
            resid = float(np.max(np.abs(r)))
            if resid < tol:
                converged = True
                break
            if resid >= best:
                y = _lloyd_step(y)
                continue
            best = resid
            step = 1.0
            for _ in range(6):
                cand = 0.5 * ((y + step * delta) - (y + step * delta)[::-1])
                if np.all(np.diff(cand) > 0.0):
                    rc, _, _, _, _ = _centroid_residual(cand)
                    if float(np.max(np.abs(rc))) < resid:
                        y = cand
                        break
                step *= 0.5
            else:
                y = _lloyd_step(y)
    if not converged:
        warnings.warn(
            f"gauss1d_quantizer(n={n}): iteration cap reached, returning best",
            NonConvergenceWarning,
        )
    mids = 0.5 * (y[:-1] + y[1:])
    a = np.concatenate(([-np.inf], mids))
    b = np.concatenate((mids, [np.inf]))
    dist = float(np.sum(_cell_distortion(a, b, y)))
    return Quantizer1D(n, y, mids, dist, converged)


@functools.lru_cache(maxsize=None)
def _scalar_distortion(n):
    return gauss1d_quantizer(n).distortion


def allocate_levels(mu, budget_N):
    """Minimize sum mu_i * distortion(N_i) subject to prod N_i <= budget.

    Exhaustive search over non-increasing level vectors (optimal ones
    are non-increasing because mu is); ties resolve to the
    lexicographically largest vector.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or mu.size == 0:
        raise BadParameter("mu must be a nonempty 1-D array")
    if np.any(mu <= 0.0) or not np.all(np.isfinite(mu)):
        raise BadParameter("mu entries must be positive and finite")
    if np.any(np.diff(mu) > 1e-12 * mu[0]):
        raise BadParameter("mu must be non-increasing")
    budget = int(budget_N)
    if budget < 1:
        raise BadParameter("budget_N must be >= 1")
    d = mu.size
    tails = np.concatenate((np.cumsum(mu[::-1])[::-1], [0.0]))
    best_cost = math.inf
    best_vec = None
    vec = [1] * d

    def descend(i, cap, room, cost):
        nonlocal best_cost, best_vec
        if i == d:
            if cost < best_cost:
                best_cost = cost
                best_vec = list(vec)
            return
        hi = min(cap, room)
        for nl in range(hi, 0, -1):
            c = cost + mu[i] * _scalar_distortion(nl)
            if c >= best_cost:
                # distortion grows as nl shrinks, so no smaller nl helps
                break
            # remaining dims cost at least their mu sum times the best
            # scalar distortion still feasible
            if c + tails[i + 1] * _scalar_distortion(min(nl, room // nl)) >= best_cost:
                continue
            vec[i] = nl
            descend(i + 1, nl, room // nl, c)
            vec[i] = 1
        return

    descend(0, budget, budget, 0.0)
    return np.asarray(best_vec, dtype=int)


@dataclass(frozen=True)
class GramMatrix:
    """L2[0,T] inner products of the expansion basis functions."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        g = np.ascontiguousarray(np.asarray(self.entries, dtype=float))
        if g.shape != (self.dim, self.dim):
            raise BadParameter("entries must be dim x dim")
        g.flags.writeable = False
        object.__setattr__(self, "entries", g)


def _inner(term_i, term_j, T):
    """Closed-form inner product over [0, T] of two basis terms.

    Terms are ("one"|"t"|"sin"|"cos"|"omc", omega); "omc" is
    1 - cos(omega t).  Expanded combinations reduce everything to the
    primitive sin/cos integrals.
    """
    ki, wi = term_i
    kj, wj = term_j
    order = {"one": 0, "t": 1, "sin": 2, "cos": 3, "omc": 4}
    if order[ki] > order[kj]:
        ki, wi, kj, wj = kj, wj, ki, wi

    def one_sin(b):
        return (1.0 - math.cos(b * T)) / b

    def one_cos(b):
        return math.sin(b * T) / b

    def t_sin(b):
        return (math.sin(b * T) - b * T * math.cos(b * T)) / (b * b)

    def t_cos(b):
        return (math.cos(b * T) + b * T * math.sin(b * T) - 1.0) / (b * b)

    def sin_sin(a, b):
        if a == b:
            return T / 2.0 - math.sin(2.0 * a * T) / (4.0 * a)
        return 0.5 * (
            math.sin((a - b) * T) / (a - b) - math.sin((a + b) * T) / (a + b)
        )

    def cos_cos(a, b):
        if a == b:
            return T / 2.0 + math.sin(2.0 * a * T) / (4.0 * a)
        return 0.5 * (
            math.sin((a - b) * T) / (a - b) + math.sin((a + b) * T) / (a + b)
        )

    def sin_cos(a, b):
        # integral of sin(a t) cos(b t)
        if a == b:
            return (1.0 - math.cos(2.0 * a * T)) / (4.0 * a)
        return 0.5 * (
            (1.0 - math.cos((a + b) * T)) / (a + b)
            + (1.0 - math.cos((a - b) * T)) / (a - b)
        )

    if ki == "one":
        if kj == "one":
            return T
        if kj == "t":
            return T * T / 2.0
        if kj == "sin":
            return one_sin(wj)
        if kj == "cos":
            return one_cos(wj)
        return T - one_cos(wj)
    if ki == "t":
        if kj == "t":
            return T**3 / 3.0
        if kj == "sin":
            return t_sin(wj)
        if kj == "cos":
            return t_cos(wj)
        return T * T / 2.0 - t_cos(wj)
    if ki == "sin":
        if kj == "sin":
            return sin_sin(wi, wj)
        if kj == "cos":
            return sin_cos(wi, wj)
        return one_sin(wi) - sin_cos(wi, wj)
    if ki == "cos":
        if kj == "cos":
            return cos_cos(wi, wj)
        return one_cos(wi) - cos_cos(wi, wj)
    # omc-omc
    return T - one_cos(wi) - one_cos(wj) + cos_cos(wi, wj)


def _basis_terms(exp, m):
    """Basis descriptors and amplitudes for the first m frequencies.

    Order: the drift coordinate when the family has one, then
    sin(k pi t / P) for k=1..m, then the cosine-channel functions for
    k=1..m.  Returns (terms, lambdas) with terms a list of
    (kind, omega) pairs.
    """
    if not (1 <= m <= exp.truncation_N):
        raise BadParameter("need 1 <= m <= truncation_N")
    if exp.init_coupling is not None and exp.init_coupling[0] > 0.0:
        raise BadParameter(
            "initial-value coupling lies outside the trigonometric span; "
            "quantization supports sigma0 = 0 only"
        )
    terms = []
    lams = []
    if exp.drift_amp > 0.0:
        terms.append(("t" if exp.family == "fbm_high" else "one", 0.0))
        lams.append(exp.drift_amp)
    base = math.pi / exp.period_T
    for k in range(1, m + 1):
        terms.append(("sin", k * base))
        lams.append(exp.sin_amp[k - 1])
    if exp.cos_amp is not None:
        ckind = "omc" if exp.one_minus_cos else "cos"
        for k in range(1, m + 1):
            terms.append((ckind, k * base))
            lams.append(exp.cos_amp[k - 1])
    return terms, np.asarray(lams, dtype=float)


def _gram_of_terms(terms, T):
    n = len(terms)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            g[i, j] = g[j, i] = _inner(terms[i], terms[j], T)
    return GramMatrix(n, g)


def gram_matrix(exp):
    """Gram matrix of the full basis of an expansion on [0, horizon_T]."""
    terms, _ = _basis_terms(exp, exp.truncation_N)
    return _gram_of_terms(terms, exp.horizon_T)


def _eval_terms(terms, tgrid):
    t = np.asarray(tgrid, dtype=float)
    rows = np.empty((len(terms), t.size))
    for i, (kind, w) in enumerate(terms):
        if kind == "one":
            rows[i] = 1.0
        elif kind == "t":
            rows[i] = t
        elif kind == "sin":
            rows[i] = np.sin(w * t)
        elif kind == "cos":
            rows[i] = np.cos(w * t)
        else:
            rows[i] = 1.0 - np.cos(w * t)
    return rows


@dataclass(frozen=True)
class ReducedKL:
    """Karhunen-Loeve form of the covariance restricted to a truncated span.

    ``mu`` holds the descending eigenvalues, ``eigvec_coeffs`` the
    matrix a with f_j = sum_i a[i, j] e_i, G-orthonormal so that
    a^T G a = I.  ``basis`` and ``lambdas`` record the underlying
    functions e_i and their amplitudes.
    """

    m: int
    mu: np.ndarray
    eigvec_coeffs: np.ndarray
    gram: GramMatrix
    basis: Tuple[Tuple[str, float], ...]
    lambdas: np.ndarray
    horizon_T: float

    def __post_init__(self):
        for name in ("mu", "eigvec_coeffs", "lambdas"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def reduced_dim(self):
        return self.mu.size

    def basis_matrix(self, tgrid):
        """Rows e_i(t) of the raw basis on a grid."""
        return _eval_terms(self.basis, tgrid)

    def reduced_functions(self, tgrid):
        """Rows f_j(t) of the G-orthonormal reduced basis on a grid."""
        return self.eigvec_coeffs.T @ self.basis_matrix(tgrid)

    def coordinate_matrix(self):
        """Map M with Y = M z turning basis draws into unit-variance
        reduced coordinates (Y_j multiplies sqrt(mu_j) f_j).

        Algebraically M = diag(mu)^(-1/2) a^T G diag(lambda); with
        a = diag(lambda) p / sqrt(mu) this collapses to the orthogonal
        eigenvector rows p^T, recovered entrywise to avoid the rounding
        of the explicit triple product.  Zero-amplitude basis directions
        contribute nothing and get a zero column.
        """
        num = self.eigvec_coeffs * np.sqrt(self.mu)[None, :]
        lam = self.lambdas[:, None]
        p = np.divide(num, lam, out=np.zeros_like(num), where=lam > 0.0)
        return p.T


def kl_reduce(exp, m):
    """Eigenreduction of the truncated covariance on the span of the
    first m frequencies (plus the drift coordinate when present)."""
    m = int(m)
    terms, lams = _basis_terms(exp, m)
    gram = _gram_of_terms(terms, exp.horizon_T)
    g = gram.entries
    # The operator restricted to the span is diagonalized through
    # B = Lam G Lam, assembled exactly from the data.  Its eigenpairs
    # (nu, p) give mu = nu and coefficient columns a = Lam p / sqrt(nu),
    # so a^T G a = I holds structurally; a G^(1/2) route would push the
    # near-null Gram directions through an absolute-error eigh and lose
    # the 1e-8 residual contract.
    b = (lams[:, None] * g) * lams[None, :]
    w, p = np.linalg.eigh(b)
    w = w[::-1]
    p = p[:, ::-1]
    tr = max(float(np.sum(np.abs(w))), np.finfo(float).tiny)
    # trim at 1e-9 of the operator trace: a dropped direction costs a
    # reconstruction defect of order m * (dropped mass) / T, well under
    # the residual contract, while a kept one contributes rounding noise
    # ~ 30 eps tr / nu to the orthonormality check, so directions below
    # the cut would drown that check in doubles
    keep = w > 1e-9 * tr
    if not np.any(keep):
        raise BadParameter("covariance restricted to the span is numerically zero")
    # zero-amplitude terms (e.g. vanishing even coefficients) yield exact
    # zero eigenvalues; only warn when a trimmed direction carried real
    # mass, which signals a nearly dependent basis
    eps = np.finfo(float).eps
    if np.any(~keep & (w > 64.0 * eps * tr)):
        warnings.warn(
            f"span is numerically rank-deficient: trimmed {int(np.sum(~keep))} "
            f"of {w.size} directions",
            GramSingularWarning,
        )
    w = w[keep]
    p = p[:, keep]
    a = (lams[:, None] * p) / np.sqrt(w)[None, :]
    return ReducedKL(
        m=m,
        mu=w,
        eigvec_coeffs=a,
        gram=gram,
        basis=tuple(terms),
        lambdas=lams,
        horizon_T=exp.horizon_T,
    )


def _tail_variance_integral(exp):
    """Integral over [0,T] of the variance carried by frequencies beyond
    the truncation, from the stored coefficient tail estimate."""
    if exp.coeff_series is None:
        raise BadParameter("expansion carries no coefficient series")
    per_k = tail_sum(exp.coeff_series, exp.truncation_N)
    factor = exp.horizon_T / 2.0 if exp.family in ("type_c", "generalized_ou") else exp.horizon_T
    return per_k * factor


@dataclass(frozen=True)
class FunctionalQuantizer:
    """Product codebook over the reduced coordinates of an expansion."""

    reduced: ReducedKL
    levels_per_dim: Tuple[int, ...]
    quantizers: Tuple[Quantizer1D, ...]
    distortion_sq: float
    expansion: object
    label: str = ""

    @property
    def n_codewords(self):
        return int(np.prod(self.levels_per_dim))

    def codeword_coeffs(self):
        """Array (n_codewords, reduced_dim) of sqrt(mu_j) y_j per codeword,
        multi-indices enumerated in row-major order."""
        root_mu = np.sqrt(self.reduced.mu)
        out = np.empty((self.n_codewords, self.reduced.reduced_dim))
        for row, idx in enumerate(np.ndindex(*self.levels_per_dim)):
            for j, (q, i) in enumerate(zip(self.quantizers, idx)):
                out[row, j] = root_mu[j] * q.levels[i]
        return out

    def codebook_paths(self, tgrid):
        """Codeword paths on a grid, deterministic mean included."""
        f = self.reduced.reduced_functions(tgrid)
        paths = self.codeword_coeffs() @ f
        if self.expansion.mean_fn is not None:
            paths += np.asarray(self.expansion.mean_fn(np.asarray(tgrid, dtype=float)))[None, :]
        return paths

    def project_coords(self, y):
        """Quantize reduced coordinates (rows of y) to per-dimension levels."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        out = np.empty_like(y)
        for j, q in enumerate(self.quantizers):
            out[:, j] = q.levels[q.quantize(y[:, j])]
        return out

    def to_csv_text(self, tgrid):
        t = np.asarray(tgrid, dtype=float)
        paths = self.codebook_paths(t)
        k = paths.shape[0]
        lines = [
            f"# codebook label={self.label} budget_levels={'x'.join(str(n) for n in self.levels_per_dim)}",
            "t," + ",".join(f"cw_{i}" for i in range(k)),
        ]
        for j in range(t.size):
            lines.append(float_text(t[j]) + "," + ",".join(float_text(v) for v in paths[:, j]))
        return "\n".join(lines) + "\n"

    def sidecar_dict(self):
        return {
            "levels_per_dim": [int(n) for n in self.levels_per_dim],
            "mu": [float(v) for v in self.reduced.mu],
            "distortion_sq": float(self.distortion_sq),
        }


def product_quantizer(model, exp, budget_N, m=None):
    """Rate-optimal product quantizer of an expansion under a codebook
    budget.  ``m`` defaults to max(1, ceil(log2 budget))."""
    budget = int(budget_N)
    if budget < 1:
        raise BadParameter("budget_N must be >= 1")
    if m is None:
        m = max(1, math.ceil(math.log2(budget)))
    m = int(m)
    red = kl_reduce(exp, m)
    nvec = allocate_levels(red.mu, budget)
    quants = tuple(gauss1d_quantizer(int(n)) for n in nvec)
    scalar_term = float(np.sum(red.mu * np.array([q.distortion for q in quants])))
    # variance carried by frequencies inside the truncation but beyond
    # the reduced span
    T = exp.horizon_T
    base = math.pi / exp.period_T
    beyond = 0.0
    ckind = None if exp.cos_amp is None else ("omc" if exp.one_minus_cos else "cos")
    for k in range(m + 1, exp.truncation_N + 1):
        w_k = k * base
        sa = exp.sin_amp[k - 1]
        beyond += sa * sa * _inner(("sin", w_k), ("sin", w_k), T)
        if ckind is not None:
            ca = exp.cos_amp[k - 1]
            beyond += ca * ca * _inner((ckind, w_k), (ckind, w_k), T)
    label = getattr(model, "label", None) or exp.label or exp.family
    dist = scalar_term + beyond + _tail_variance_integral(exp)
    return FunctionalQuantizer(
        reduced=red,
        levels_per_dim=tuple(int(n) for n in nvec),
        quantizers=quants,
        distortion_sq=float(dist),
        expansion=exp,
        label=label,
    )


def _coordinate_draws(exp, red, z):
    """Columns of z for the reduced basis, in basis order."""
    z0, zs, zc, _ = _exp._split_draws(exp, z)
    cols = []
    if exp.drift_amp > 0.0:
        cols.append(z0[:, None])
    cols.append(zs[:, : red.m])
    if exp.cos_amp is not None:
        cols.append(zc[:, : red.m])
    return np.concatenate(cols, axis=1)


def distortion_mc(q, exp, n_paths, seed, grid_points=257):
    """Monte Carlo estimate of the integrated squared quantization error.

    Samples fresh paths, projects each onto its nearest codeword through
    the reduced coordinates, and integrates the squared gap by the
    trapezoid rule.  Returns (estimate, stderr).
    """
    n_paths = int(n_paths)
    if n_paths < 100:
        raise TooFewPaths(f"distortion estimate needs >= 100 paths, got {n_paths}")
    if grid_points < 257:
        raise BadParameter("need a grid of at least 257 points (256 panels)")
    m_panels = int(grid_points) - 1
    T = exp.horizon_T
    tgrid = np.arange(m_panels + 1) * (T / m_panels)
    red = q.reduced
    fmat = red.reduced_functions(tgrid)
    cmat = red.coordinate_matrix()
    root_mu = np.sqrt(red.mu)
    nn = _exp._n_normals(exp)
    sq = np.empty(n_paths)
    for start in range(0, n_paths, _exp._PATH_CHUNK):
        stop = min(start + _exp._PATH_CHUNK, n_paths)
        z = _exp._draw_paths(seed, start, stop - start, nn)
        paths = _exp._synth_chunk_fast(exp, m_panels, tgrid, z)
        y = _coordinate_draws(exp, red, z) @ cmat.T
        coeffs = q.project_coords(y) * root_mu[None, :]
        code = coeffs @ fmat
        if exp.mean_fn is not None:
            code += np.asarray(exp.mean_fn(tgrid))[None, :]
        gap = paths - code
        sq[start:stop] = np.trapezoid(gap * gap, tgrid, axis=1)
    est = float(np.mean(sq))
    se = float(np.std(sq, ddof=1) / math.sqrt(n_paths))
    return est, se
