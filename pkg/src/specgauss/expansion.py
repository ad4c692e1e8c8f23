"""Truncated trigonometric expansions and Gaussian path sampling.

A :class:`SeriesExpansion` holds the deterministic data of one truncated
expansion: a drift amplitude, sine/cosine amplitudes per frequency, and for
the generalized Ornstein-Uhlenbeck construction a deterministic mean and an
initial-value coupling.  Builders validate admissibility and take square
roots of the coefficient data; sampling then pairs each amplitude with an
independent standard normal.

Draw discipline: the doubly-indexed normals are serialized per path as
(Z_0, Z_1, Z_-1, Z_2, Z_-2, ...), generated from a counter-based Philox
stream keyed by (seed, path index).  Every family draws the full block of
2N+1 normals (plus one trailing draw for the initial value when present),
whether or not it consumes all of them, so a path's randomness depends only
on (seed, index), never on the family or the execution schedule.
"""

import io
import math
import struct
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.fft

from . import _kernels
from ._util import atomic_write_bytes, atomic_write_text, float_text
from .errors import (
    BadParameter,
    BranchMismatch,
    ClampWarning,
    DeltaOutOfRange,
    GridNotUniform,
    NegativeC0,
    NegativeRadicand,
    StarViolated,
    TailEstimateUnavailable,
)
from .fourier import (
    CosineSeries,
    coeffs_closed,
    coeffs_quadrature,
    decay_fit,
    fbm_coefficients,
    tail_sum,
)
from .gamma import check_star

_FAMILIES = ("fbm_low", "fbm_high", "type_a", "type_b", "type_c")

# fixed work unit for path generation; never tied to the thread count so the
# batched linear algebra sees identical shapes run to run
_PATH_CHUNK = 1024

_BINARY_MAGIC = b"SGPB"
_BINARY_VERSION = 1


@dataclass(frozen=True)
class SeriesExpansion:
    """Deterministic data of one truncated series expansion.

    ``sin_amp[k-1]`` multiplies sin(k pi t / period_T) Z_k and
    ``cos_amp[k-1]`` multiplies (1 - cos) Z_-k for the fBm / type-A form or
    cos Z_-k for type B.  Type C keeps only sines (``cos_amp`` is None) on
    the doubled period 2T.  ``drift_amp`` multiplies t Z_0 (fbm_high) or
    Z_0 alone (type_b) and is 0 elsewhere.
    """

    family: str
    horizon_T: float
    period_T: float
    truncation_N: int
    drift_amp: float
    sin_amp: np.ndarray
    cos_amp: Optional[np.ndarray]
    label: str = ""
    mean_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    init_coupling: Optional[Tuple[float, float]] = None
    coeff_series: Optional[CosineSeries] = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise BadParameter(f"unknown family {self.family!r}")
        if not (self.horizon_T > 0 and np.isfinite(self.horizon_T)):
            raise BadParameter("horizon_T must be positive")
        expect_period = 2.0 * self.horizon_T if self.family == "type_c" else self.horizon_T
        if abs(self.period_T - expect_period) > 1e-12 * expect_period:
            raise BadParameter(f"period_T must be {expect_period} for {self.family}")
        sa = np.ascontiguousarray(np.asarray(self.sin_amp, dtype=float))
        if sa.shape != (self.truncation_N,):
            raise BadParameter("sin_amp must have length truncation_N")
        arrays = [("sin_amp", sa)]
        if self.family == "type_c":
            if self.cos_amp is not None:
                raise BadParameter("type_c carries no cosine amplitudes")
        else:
            ca = np.ascontiguousarray(np.asarray(self.cos_amp, dtype=float))
            if ca.shape != (self.truncation_N,):
                raise BadParameter("cos_amp must have length truncation_N")
            arrays.append(("cos_amp", ca))
        for name, arr in arrays:
            if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
                raise BadParameter(f"{name} entries must be finite and nonnegative")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (np.isfinite(self.drift_amp) and self.drift_amp >= 0.0):
            raise BadParameter("drift_amp must be finite and nonnegative")

    @property
    def one_minus_cos(self):
        """True when the cosine channel carries (1 - cos) rather than cos."""
        return self.family in ("fbm_low", "fbm_high", "type_a")


@dataclass(frozen=True)
class PathBatch:
    """Sampled paths on a common grid, with the seed that produced them."""

    grid: np.ndarray
    values: np.ndarray
    seed: int
    expansion_ref: str = ""
    truncation_N: int = 0

    def __post_init__(self):
        g = np.ascontiguousarray(np.asarray(self.grid, dtype=float))
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if g.ndim != 1 or g.size == 0:
            raise BadParameter("grid must be a nonempty 1-D array")
        if g.size > 1 and not np.all(np.diff(g) > 0):
            raise BadParameter("grid must be strictly increasing")
        if v.ndim != 2 or v.shape[1] != g.size:
            raise BadParameter("values must be (n_paths, len(grid))")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(v))):
            raise BadParameter("grid and values must be finite")
        g.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @property
    def n_paths(self):
        return self.values.shape[0]

    def to_csv_text(self, comments=()):
        """CSV ``t,path_0,path_1,...`` preceded by metadata comments."""
        buf = io.StringIO()
        for c in comments:
            buf.write(f"# {c}\n")
        buf.write(
            f"# seed={self.seed} truncation_N={self.truncation_N} "
            f"expansion={self.expansion_ref}\n"
        )
        buf.write("t," + ",".join(f"path_{p}" for p in range(self.n_paths)) + "\n")
        for j in range(self.grid.size):
            row = [float_text(self.grid[j])]
            row.extend(float_text(x) for x in self.values[:, j])
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_csv(self, path, comments=()):
        atomic_write_text(path, self.to_csv_text(comments))

    @classmethod
    def from_csv(cls, path):
        seed = 0
        trunc = 0
        ref = ""
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        if tok.startswith("seed="):
                            seed = int(tok[5:])
                        elif tok.startswith("truncation_N="):
                            trunc = int(tok[13:])
                        elif tok.startswith("expansion="):
                            ref = tok[10:]
                    continue
                if line.startswith("t,"):
                    continue
                rows.append([float(x) for x in line.split(",")])
        if not rows:
            raise BadParameter(f"{path}: no data rows")
        data = np.array(rows)
        return cls(
            grid=data[:, 0],
            values=data[:, 1:].T,
            seed=seed,
            expansion_ref=ref,
            truncation_N=trunc,
        )

    def to_binary_bytes(self):
        """Header (magic, version, M, n_paths, seed) then little-endian
        doubles column-major: the grid column first, then each path."""
        head = struct.pack(
            "<4sIIIQ",
            _BINARY_MAGIC,
            _BINARY_VERSION,
            self.grid.size,
            self.n_paths,
            int(self.seed) % (1 << 64),
        )
        body = [np.asarray(self.grid, dtype="<f8").tobytes()]
        for p in range(self.n_paths):
            body.append(np.asarray(self.values[p], dtype="<f8").tobytes())
        return head + b"".join(body)

    def to_binary(self, path):
        atomic_write_bytes(path, self.to_binary_bytes())

    @classmethod
    def from_binary_bytes(cls, blob):
        head = struct.calcsize("<4sIIIQ")
        if len(blob) < head:
            raise BadParameter("binary path batch: truncated header")
        magic, version, m, n_paths, seed = struct.unpack("<4sIIIQ", blob[:head])
        if magic != _BINARY_MAGIC:
            raise BadParameter(f"binary path batch: bad magic {magic!r}")
        if version != _BINARY_VERSION:
            raise BadParameter(f"binary path batch: unsupported version {version}")
        need = head + 8 * m * (n_paths + 1)
        if len(blob) < need:
            raise BadParameter("binary path batch: truncated body")
        flat = np.frombuffer(blob, dtype="<f8", count=m * (n_paths + 1), offset=head)
        grid = flat[:m].copy()
        values = flat[m:].reshape(n_paths, m).copy()
        return cls(grid=grid, values=values, seed=seed)

    @classmethod
    def from_binary(cls, path):
        with open(path, "rb") as fh:
            return cls.from_binary_bytes(fh.read())


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _amps_from_radicands(r, what):
    """sqrt of each entry with the tiny-negative clamp.

    Entries in [-1e-12 * scale, 0) are quadrature noise and are clamped to 0
    with a warning; anything more negative is a genuine sign violation.
    """
    r = np.asarray(r, dtype=float)
    scale = max(1.0, float(np.max(np.abs(r), initial=0.0)))
    bad = r < -1e-12 * scale
    if np.any(bad):
        k = int(np.argmax(bad)) + 1
        raise NegativeRadicand(f"{what}: entry k={k} has radicand {r[k - 1]:.6e}")
    n_clamped = int(np.count_nonzero(r < 0.0))
    if n_clamped:
        warnings.warn(
            f"{what}: clamped {n_clamped} tiny negative radicand(s) to 0",
            ClampWarning,
        )
    return np.sqrt(np.maximum(r, 0.0))


def _require_star(spec, what):
    report = check_star(spec)
    if not report.passed:
        raise StarViolated(
            f"{what}: admissibility probe failed "
            f"(derivative violation {report.max_derivative_violation:.3e}, "
            f"concavity violation {report.max_concavity_violation:.3e})"
        )


def _check_horizon(spec, T, what):
    if abs(spec.horizon_T - T) > 1e-12 * max(1.0, T):
        raise BadParameter(f"{what}: spec horizon {spec.horizon_T} does not match T={T}")


def build_fbm(H, T, N, coeff_source):
    """Expansion of fractional Brownian motion from a precomputed series.

    ``coeff_source`` must match the parameter branch: the raw coefficient
    series of t^(2H) for H < 1/2, the second-derivative-transformed series
    for H > 1/2.  A cheap numeric probe of c_1 guards against passing the
    wrong object.
    """
    if not (0.0 < H < 1.0):
        raise BadParameter("H must lie in (0, 1)")
    if H == 0.5:
        raise BadParameter("H = 1/2 is not an fBm branch; use build_type_a with a linear generating function")
    if not (T > 0):
        raise BadParameter("T must be positive")
    N = int(N)
    if N < 0:
        raise BadParameter("N must be >= 0")
    if coeff_source.k_max < N:
        raise BadParameter(f"coeff_source covers k <= {coeff_source.k_max} < N = {N}")
    _check_horizon(coeff_source, T, "build_fbm")
    high = H > 0.5
    if coeff_source.has_c0 == high:
        raise BranchMismatch(
            "coefficient series has_c0 flag does not match the parameter branch"
        )
    if coeff_source.k_max >= 1:
        expected = fbm_coefficients(H, T, 1).values[1]
        got = coeff_source.values[1]
        if abs(got - expected) > 1e-6 * max(1.0, abs(expected)):
            raise BranchMismatch(
                f"c_1 = {got:.6e} does not match the {('upper' if high else 'lower')} "
                f"branch value {expected:.6e}"
            )
    amps = _amps_from_radicands(-coeff_source.values[1 : N + 1] / 2.0, "build_fbm")
    drift = math.sqrt(H * T ** (2.0 * H - 2.0)) if high else 0.0
    family = "fbm_high" if high else "fbm_low"
    return SeriesExpansion(
        family=family,
        horizon_T=float(T),
        period_T=float(T),
        truncation_N=N,
        drift_amp=drift,
        sin_amp=amps,
        cos_amp=amps.copy(),
        label=f"{family}(H={H},T={T},N={N})",
        coeff_series=coeff_source,
    )


def build_type_a(spec, T, N):
    """Type-A expansion of a nonstationary process with generating function
    ``spec`` (bounded at 0, admissible): no drift, amplitudes
    sqrt(-c_k / 2) on both sin and (1 - cos)."""
    if not (T > 0):
        raise BadParameter("T must be positive")
    N = int(N)
    if N < 0:
        raise BadParameter("N must be >= 0")
    _check_horizon(spec, T, "build_type_a")
    if spec.delta >= 1.0:
        raise DeltaOutOfRange(f"type A needs delta < 1, got {spec.delta}")
    _require_star(spec, "build_type_a")
    series = coeffs_quadrature(spec, N)
    amps = _amps_from_radicands(-series.values[1:] / 2.0, "build_type_a")
    return SeriesExpansion(
        family="type_a",
        horizon_T=float(T),
        period_T=float(T),
        truncation_N=N,
        drift_amp=0.0,
        sin_amp=amps,
        cos_amp=amps.copy(),
        label=f"type_a({spec.label or 'gamma'},N={N})",
        coeff_series=series,
    )


def build_type_b(spec_neg, T, N):
    """Type-B (stationary) expansion.  ``spec_neg`` describes -gamma, the
    admissible side; the construction refuses when the mean of gamma itself
    is negative, which the underlying theorem excludes."""
    if not (T > 0):
        raise BadParameter("T must be positive")
    N = int(N)
    if N < 0:
        raise BadParameter("N must be >= 0")
    _check_horizon(spec_neg, T, "build_type_b")
    if spec_neg.delta >= 1.0:
        raise DeltaOutOfRange(f"type B needs delta < 1, got {spec_neg.delta}")
    _require_star(spec_neg, "build_type_b")
    series = coeffs_quadrature(spec_neg, N)
    c_gamma = -series.values
    # the constant term carries the mean of gamma: half the k = 0 entry
    c0_mean = c_gamma[0] / 2.0
    if c0_mean < -1e-12 * max(1.0, abs(c0_mean)):
        raise NegativeC0(f"mean of the generating function is negative ({c0_mean:.6e})")
    amps = _amps_from_radicands(c_gamma[1:], "build_type_b")
    return SeriesExpansion(
        family="type_b",
        horizon_T=float(T),
        period_T=float(T),
        truncation_N=N,
        drift_amp=math.sqrt(max(c0_mean, 0.0)),
        sin_amp=amps,
        cos_amp=amps.copy(),
        label=f"type_b({spec_neg.label or 'gamma'},N={N})",
        coeff_series=series,
    )


def build_type_c(spec_neg, T, N):
    """Type-C expansion on the doubled interval.  ``spec_neg`` describes
    -gamma on (0, 2T]; the result keeps only sine terms at the half
    frequencies k pi / (2T) and is pinned to 0 at t = 0."""
    if not (T > 0):
        raise BadParameter("T must be positive")
    N = int(N)
    if N < 0:
        raise BadParameter("N must be >= 0")
    _check_horizon(spec_neg, 2.0 * T, "build_type_c (doubled interval)")
    if spec_neg.delta >= 1.0:
        raise DeltaOutOfRange(f"type C needs delta < 1, got {spec_neg.delta}")
    _require_star(spec_neg, "build_type_c")
    series = coeffs_quadrature(spec_neg, N)
    amps = _amps_from_radicands(-series.values[1:], "build_type_c")
    return SeriesExpansion(
        family="type_c",
        horizon_T=float(T),
        period_T=2.0 * T,
        truncation_N=N,
        drift_amp=0.0,
        sin_amp=amps,
        cos_amp=None,
        label=f"type_c({spec_neg.label or 'gamma'},N={N})",
        coeff_series=series,
    )


def build_generalized_ou(theta, alpha, mu, sigma, sigma0, T, N):
    """Generalized Ornstein-Uhlenbeck expansion: a type-C core driven by the
    exponential kernel, plus the deterministic mean
    mu e^(-theta t) + alpha (1 - e^(-theta t)) and an independent initial
    value Y_0 ~ Normal(mu, sigma0^2) coupled through e^(-theta t)."""
    if not (theta > 0):
        raise BadParameter("theta must be positive")
    if not (sigma > 0):
        raise BadParameter("sigma must be positive")
    if not (sigma0 >= 0):
        raise BadParameter("sigma0 must be nonnegative")
    if not (T > 0):
        raise BadParameter("T must be positive")
    N = int(N)
    if N < 0:
        raise BadParameter("N must be >= 0")
    series = coeffs_closed("generalized_ou", T, N, theta=theta, sigma2=sigma * sigma)
    amps = _amps_from_radicands(series.values[1:], "build_generalized_ou")
    th = float(theta)
    al = float(alpha)
    m = float(mu)

    def mean_fn(t, th=th, al=al, m=m):
        e = np.exp(-th * np.asarray(t, dtype=float))
        return m * e + al * (1.0 - e)

    return SeriesExpansion(
        family="type_c",
        horizon_T=float(T),
        period_T=2.0 * T,
        truncation_N=N,
        drift_amp=0.0,
        sin_amp=amps,
        cos_amp=None,
        label=f"gen_ou(theta={theta},alpha={alpha},mu={mu},sigma={sigma},sigma0={sigma0},T={T},N={N})",
        mean_fn=mean_fn,
        init_coupling=(float(sigma0), th),
        coeff_series=series,
    )


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _draw_paths(seed, path0, n_paths, n_per_path):
    """Standard normals, one Philox stream per path keyed by (seed, index)."""
    out = np.empty((n_paths, n_per_path))
    hi = (int(seed) % (1 << 64)) << 64
    for i in range(n_paths):
        gen = np.random.Generator(np.random.Philox(key=hi + path0 + i))
        out[i] = gen.standard_normal(n_per_path)
    return out


def _split_draws(exp, z):
    n = exp.truncation_N
    block = z[:, : 2 * n + 1]
    z0 = block[:, 0]
    zs = block[:, 1::2]
    zc = block[:, 2::2]
    xi = z[:, 2 * n + 1] if exp.init_coupling is not None else None
    return z0, zs, zc, xi


def _deterministic_terms(exp, tgrid, z0, xi, out):
    if exp.drift_amp > 0.0:
        if exp.family == "fbm_high":
            out += (exp.drift_amp * z0)[:, None] * tgrid[None, :]
        elif exp.family == "type_b":
            out += (exp.drift_amp * z0)[:, None]
    if exp.mean_fn is not None:
        out += np.asarray(exp.mean_fn(tgrid), dtype=float)[None, :]
    if exp.init_coupling is not None:
        sigma0, theta = exp.init_coupling
        if sigma0 > 0.0:
            out += (sigma0 * xi)[:, None] * np.exp(-theta * tgrid)[None, :]
    return out


def _synth_chunk_direct(exp, tgrid, z):
    z0, zs, zc, xi = _split_draws(exp, z)
    n = exp.truncation_N
    if n > 0:
        cos_amp = exp.cos_amp if exp.cos_amp is not None else np.zeros(n)
        out = _kernels.synth_direct(
            np.ascontiguousarray(zs),
            np.ascontiguousarray(zc),
            exp.sin_amp,
            cos_amp,
            math.pi / exp.period_T,
            tgrid,
            exp.one_minus_cos,
        )
    else:
        out = np.zeros((z.shape[0], tgrid.size))
    return _deterministic_terms(exp, tgrid, z0, xi, out)


def _n_normals(exp):
    return 2 * exp.truncation_N + 1 + (1 if exp.init_coupling is not None else 0)


def _run_chunks(exp, tgrid, n_paths, seed, threads, chunk_fn):
    values = np.empty((n_paths, tgrid.size))
    spans = [(s, min(s + _PATH_CHUNK, n_paths)) for s in range(0, n_paths, _PATH_CHUNK)]
    n_per_path = _n_normals(exp)

    def work(span):
        s, e = span
        z = _draw_paths(seed, s, e - s, n_per_path)
        values[s:e] = chunk_fn(z)

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, spans))
    else:
        for span in spans:
            work(span)
    return values


def _validate_sampling_args(n_paths, seed):
    if not isinstance(n_paths, (int, np.integer)) or n_paths < 1:
        raise BadParameter("n_paths must be a positive integer")
    if not isinstance(seed, (int, np.integer)):
        raise BadParameter("seed must be an integer")


def sample_paths(exp, grid, n_paths, seed, threads=1):
    """Sample ``n_paths`` paths of ``exp`` on an arbitrary grid in [0, T].

    Deterministic given the seed; the per-path Philox streams make the
    result independent of chunking and thread count.
    """
    _validate_sampling_args(n_paths, seed)
    tgrid = np.ascontiguousarray(np.asarray(grid, dtype=float))
    if tgrid.ndim != 1 or tgrid.size == 0:
        raise BadParameter("grid must be a nonempty 1-D array")
    if not np.all(np.isfinite(tgrid)):
        raise BadParameter("grid must be finite")
    if tgrid.size > 1 and not np.all(np.diff(tgrid) > 0):
        raise BadParameter("grid must be strictly increasing")
    T = exp.horizon_T
    if tgrid[0] < -1e-12 * T or tgrid[-1] > T * (1.0 + 1e-12):
        raise BadParameter("grid must lie inside [0, T]")
    values = _run_chunks(
        exp, tgrid, int(n_paths), seed, int(threads),
        lambda z: _synth_chunk_direct(exp, tgrid, z),
    )
    return PathBatch(
        grid=tgrid,
        values=values,
        seed=int(seed),
        expansion_ref=exp.label,
        truncation_N=exp.truncation_N,
    )


def _uniform_resolution(grid, T):
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise GridNotUniform("uniform grid needs at least the two endpoints")
    m = g.size - 1
    ref = np.arange(m + 1) * (T / m)
    if float(np.max(np.abs(g - ref))) > 1e-9 * max(1.0, T):
        raise GridNotUniform("grid does not match t_j = j T / M")
    return m


# FFT row block: keeps the folded-buffer temporaries of the fast path modest
_FFT_ROW_DOUBLES = 1 << 23


def _fast_rows(m):
    return max(1, _FFT_ROW_DOUBLES // max(1, m))


def _fold_sines(weighted, length):
    """Fold per-frequency sine weights onto the base band of a grid with
    ``length`` cells per half period.

    sin(pi k j / L) depends on k only through k mod 2L: the upper half band
    reflects with a sign flip and multiples of L vanish.  Frequencies k = r
    (mod 2L) sit at strided columns, so each output slot is a strided sum.
    """
    p, n = weighted.shape
    lng = length
    folded = np.zeros((p, max(lng - 1, 0)))
    if lng <= 1 or n == 0:
        return folded
    if n <= lng - 1:
        folded[:, :n] = weighted  # every frequency sits in its own slot
        return folded
    step = 2 * lng
    for r in range(1, lng):
        acc = weighted[:, r - 1 :: step].sum(axis=1)
        neg = weighted[:, step - r - 1 :: step]
        if neg.shape[1]:
            acc = acc - neg.sum(axis=1)
        folded[:, r - 1] = acc
    return folded


def _fold_cosines(weighted, length):
    """Fold per-frequency cosine weights into DCT-I layout on a grid with
    ``length`` cells: both half bands add in phase, x[0] and x[length]
    collect the constant and Nyquist frequencies, and interior entries are
    halved so the transform returns the plain cosine sum."""
    p, n = weighted.shape
    lng = length
    x = np.zeros((p, lng + 1))
    if n == 0:
        return x
    if n <= lng - 1:
        x[:, 1 : n + 1] = 0.5 * weighted
        return x
    step = 2 * lng
    zero_band = weighted[:, step - 1 :: step]
    if zero_band.shape[1]:
        x[:, 0] = zero_band.sum(axis=1)
    nyq_band = weighted[:, lng - 1 :: step]
    if nyq_band.shape[1]:
        x[:, lng] = nyq_band.sum(axis=1)
    for r in range(1, lng):
        acc = weighted[:, r - 1 :: step].sum(axis=1)
        neg = weighted[:, step - r - 1 :: step]
        if neg.shape[1]:
            acc = acc + neg.sum(axis=1)
        x[:, r] = 0.5 * acc
    return x


def _fast_series_eval(ws, wc, m, one_minus_cos, doubled):
    """Series values on the uniform (m+1)-point grid from pre-weighted draws.

    ``ws``/``wc`` are (paths, N) arrays of amplitude-weighted normals for the
    sine and cosine channels; ``wc`` is None for a pure-sine family.  With
    ``doubled`` the sine frequencies are k pi / (2T), living on a virtual
    grid of 2m cells of which the first half is returned.
    """
    p = ws.shape[0]
    out = np.zeros((p, m + 1))
    if ws.shape[1] == 0:
        return out
    if doubled:
        folded = _fold_sines(ws, 2 * m)
        if folded.shape[1]:
            y = scipy.fft.dst(folded, type=1, axis=1)
            out[:, 1:] = 0.5 * y[:, :m]
    else:
        folded = _fold_sines(ws, m)
        if folded.shape[1]:
            y = scipy.fft.dst(folded, type=1, axis=1)
            out[:, 1:m] = 0.5 * y
        x = _fold_cosines(wc, m)
        cos_part = scipy.fft.dct(x, type=1, axis=1)
        if one_minus_cos:
            out += np.sum(wc, axis=1)[:, None] - cos_part
        else:
            out += cos_part
    return out


def _synth_chunk_fast(exp, m, tgrid, z):
    z0, zs, zc, xi = _split_draws(exp, z)
    n = exp.truncation_N
    p = z.shape[0]
    out = np.zeros((p, m + 1))
    if n > 0:
        doubled = exp.family == "type_c"
        rows = _fast_rows(m)
        for s in range(0, p, rows):
            sl = slice(s, min(s + rows, p))
            ws = zs[sl] * exp.sin_amp
            wc = None if doubled else zc[sl] * exp.cos_amp
            out[sl] = _fast_series_eval(ws, wc, m, exp.one_minus_cos, doubled)
    return _deterministic_terms(exp, tgrid, z0, xi, out)


def sample_paths_fast(exp, M, n_paths, seed, threads=1):
    """Sample on the uniform grid t_j = j T / M via fast trig transforms.

    ``M`` is the resolution; passing the grid array itself is also accepted
    and validated for uniformity.  Matches :func:`sample_paths` on the same
    grid and seed to 1e-10 absolute.
    """
    _validate_sampling_args(n_paths, seed)
    if isinstance(M, (list, tuple, np.ndarray)):
        m = _uniform_resolution(M, exp.horizon_T)
    else:
        m = int(M)
        if m < 1:
            raise BadParameter("M must be >= 1")
    tgrid = np.arange(m + 1) * (exp.horizon_T / m)
    values = _run_chunks(
        exp, tgrid, int(n_paths), seed, int(threads),
        lambda z: _synth_chunk_fast(exp, m, tgrid, z),
    )
    return PathBatch(
        grid=tgrid,
        values=values,
        seed=int(seed),
        expansion_ref=exp.label,
        truncation_N=exp.truncation_N,
    )


# ---------------------------------------------------------------------------
# truncation selection
# ---------------------------------------------------------------------------


def truncation_for_tolerance(series, eps):
    """Smallest N with sqrt(2 * tail_sum(N)) <= eps.

    The factor 2 bounds the basis functions; the result is monotone in eps
    with minimum 1.  When no N inside the table suffices, the power-law
    model behind the tail estimate is inverted to extend the search beyond
    k_max.
    """
    if not (eps > 0):
        raise BadParameter("eps must be positive")
    beyond = tail_sum(series, series.k_max)
    if not np.isfinite(beyond):
        raise TailEstimateUnavailable("tail decay fit failed; cannot bound the remainder")
    # tiny relative slack so eps = sqrt(2 tail_sum(N)) round-trips to N
    target = eps * eps / 2.0 * (1.0 + 1e-12)
    absv = np.abs(series.values)
    # suffix[N] = sum of |c_k| for k > N within the table
    suffix = np.concatenate([np.cumsum(absv[::-1])[::-1], [0.0]])
    k_max = series.k_max
    tails = suffix[2 : k_max + 2] + beyond  # tails[i] = tail_sum(i + 1)
    hit = np.nonzero(tails <= target)[0]
    if hit.size:
        return int(hit[0]) + 1
    # invert the extrapolation model beyond the table: tail(N) ~ beyond * (N / k_max)^(p+1)
    if beyond <= 0 or k_max < 1:
        raise TailEstimateUnavailable("tail model cannot be extended beyond the table")
    try:
        p = decay_fit(series, max(1, k_max // 4), k_max)
    except Exception as exc:
        raise TailEstimateUnavailable("tail decay fit failed beyond the table") from exc
    p = min(-1.05, max(-3.0, p))
    n = int(math.ceil(k_max * (target / beyond) ** (1.0 / (p + 1.0))))
    n = max(n, k_max + 1)
    while beyond * (n / k_max) ** (p + 1.0) > target:
        n += 1
    return n
