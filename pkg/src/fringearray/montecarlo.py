"""Shot-by-shot simulation of an interferometer array experiment.

Each shot draws one noise realization, displaces every device's overlap
pattern by its site displacement, samples one position per device
(inverse-CDF on the pattern grid; the displacement is added afterwards,
which is exact because the displaced density is a rigid translation),
forms the order-q difference variable and bins it.

Randomness is counter-based: shot ``i`` owns fixed spans of two Philox
streams (noise draws and position uniforms), so results are bit-identical
for any chunking or worker count.  Per-element arithmetic avoids
order-dependent reductions for the same reason.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from ._kernels import inverse_cdf
from ._streams import NOISE_PURPOSE, POSITION_PURPOSE, ShotStream
from .array import ArraySpec, difference_weights, pattern_recursion
from .errors import (
    EmptyDataError,
    FitError,
    InvalidSpecError,
    OutOfRangeError,
    SamplingError,
)
from .noisefield import NoiseModel, _time_grid, displacement_std, kernel_weights
from .wavepacket import FringePattern

__all__ = [
    "Histogram",
    "GridSampler",
    "ShotRecord",
    "ExperimentResult",
    "DisplacementSpread",
    "FringeFit",
    "sample_from_pdf",
    "build_histogram",
    "run_experiment",
    "sample_shots",
    "displacement_spread",
    "fit_fringe",
]


@dataclass(frozen=True)
class Histogram:
    """Counts over strictly increasing bin edges."""

    edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or len(edges) < 2 or not np.all(np.diff(edges) > 0):
            raise InvalidSpecError("bin edges must be strictly increasing")
        if len(counts) != len(edges) - 1 or np.any(counts < 0):
            raise InvalidSpecError("counts must be nonnegative, one per bin")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def density(self) -> np.ndarray:
        """Counts normalized to unit integral over the binned range."""
        total = self.total
        if total == 0:
            raise EmptyDataError("empty histogram has no density view")
        return self.counts / (total * self.widths)

    def cdf(self) -> np.ndarray:
        """Empirical CDF at the bin edges (starts at 0, ends at 1)."""
        total = self.total
        if total == 0:
            raise EmptyDataError("empty histogram has no CDF")
        return np.concatenate([[0.0], np.cumsum(self.counts) / total])

    def merge(self, other: "Histogram") -> "Histogram":
        if len(self.edges) != len(other.edges) or not np.array_equal(
            self.edges, other.edges
        ):
            raise InvalidSpecError("histograms with different edges cannot merge")
        return Histogram(self.edges, self.counts + other.counts)


def build_histogram(values, bins: int, range_: tuple) -> Histogram:
    """Fixed-range histogram of a value list."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyDataError("no values to histogram")
    if bins < 1:
        raise InvalidSpecError(f"bins must be >= 1, got {bins}")
    counts, edges = np.histogram(values, bins=bins, range=range_)
    return Histogram(edges, counts)


class GridSampler:
    """Inverse-CDF sampler on a tabulated density grid.

    The CDF is the cumulative trapezoid of the density, normalized to 1;
    draws are mapped through it by monotone linear interpolation.
    """

    def __init__(self, x, pdf):
        x = np.ascontiguousarray(x, dtype=float)
        pdf = np.ascontiguousarray(pdf, dtype=float)
        if x.ndim != 1 or len(x) < 2 or not np.all(np.diff(x) > 0):
            raise SamplingError("sampling grid must be strictly increasing")
        if not np.all(np.isfinite(pdf)) or np.any(pdf < 0):
            raise SamplingError("density must be finite and nonnegative")
        cell = 0.5 * (pdf[:-1] + pdf[1:]) * np.diff(x)
        cdf = np.concatenate([[0.0], np.cumsum(cell)])
        total = cdf[-1]
        if not (total > 0) or not np.isfinite(total):
            raise SamplingError("density has no normalizable mass on the grid")
        cdf /= total
        cdf[-1] = 1.0
        self.x = x
        self.cdf = np.ascontiguousarray(cdf)

    @classmethod
    def from_density(
        cls, density, points_per_period: int = 64, span_sigmas: float = 8.0
    ) -> "GridSampler":
        x, p = density.default_grid(points_per_period, span_sigmas)
        return cls(x, p)

    def transform(self, u) -> np.ndarray:
        """Map uniforms in (0, 1) to positions."""
        u = np.ascontiguousarray(u, dtype=float)
        return inverse_cdf(u, self.x, self.cdf)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.transform(rng.random(n))


def sample_from_pdf(density, rng: np.random.Generator, n: int = 1):
    """Draw positions distributed per an evaluable density.

    ``density`` needs a ``default_grid()`` (all pattern classes have one).
    Returns a float for n = 1, else an array.
    """
    out = GridSampler.from_density(density).sample(rng, n)
    return float(out[0]) if n == 1 else out


@dataclass(frozen=True)
class ShotRecord:
    """One repetition: the displacement coefficients drawn and the positions seen."""

    index: int
    seed: int
    coefficients: tuple
    positions: np.ndarray


# --------------------------------------------------------------------------
# experiment engine


class _Engine:
    """Precomputed per-run state shared by all chunks."""

    def __init__(self, spec: ArraySpec, model: NoiseModel, seed, q, path_step,
                 eta_tolerance, points_per_period=64):
        self.spec = spec
        self.model = model
        self.seed = int(seed)
        self.q = int(q)
        tk = spec.overlap_time
        if tk > 0:
            self.times = _time_grid(tk, path_step if path_step else tk / 32.0)
        else:
            self.times = np.array([0.0])
        self.kernel = kernel_weights(self.times, tk) if tk > 0 else np.zeros(1)
        self.recursion = pattern_recursion(spec, q, eta_tolerance)
        self.device_patterns = self.recursion.levels[0]
        self.samplers = [
            GridSampler.from_density(p, points_per_period=points_per_period)
            for p in self.device_patterns
        ]
        self.n_devices = spec.n_devices
        self.weights = difference_weights(q)
        self.noise_words = model.draws_per_shot(self.times)
        self.noise_stream = ShotStream(self.seed, NOISE_PURPOSE, max(1, self.noise_words))
        self.pos_stream = ShotStream(self.seed, POSITION_PURPOSE, self.n_devices)
        # site powers (order, device): (n h)^k
        orders = model.order + 1
        sites = np.arange(self.n_devices) * spec.spacing
        self.site_powers = sites[None, :] ** np.arange(orders)[:, None]

    def coefficients(self, start: int, count: int) -> np.ndarray:
        """Displacement coefficients X_k per shot, shape (count, orders)."""
        if self.noise_words == 0:
            return np.zeros((count, self.model.order + 1))
        z = self.noise_stream.normals(start, count)
        per_order = self.model.realize(z, self.times)
        cols = [(g * self.kernel).sum(axis=1) for g in per_order]
        return np.stack(cols, axis=1)

    def positions(self, start: int, count: int, coeffs: np.ndarray) -> np.ndarray:
        """Sampled (displaced) positions, shape (count, devices)."""
        u = self.pos_stream.uniforms(start, count)
        disp = coeffs @ self.site_powers
        pos = np.empty((count, self.n_devices))
        for d in range(self.n_devices):
            pos[:, d] = self.samplers[d].transform(u[:, d]) + disp[:, d]
        return pos

    def difference_values(self, positions: np.ndarray) -> np.ndarray:
        return (positions[:, : self.q + 1] * self.weights).sum(axis=1)


@dataclass(frozen=True)
class ExperimentResult:
    """Histograms plus the analytic pattern they should reproduce."""

    histogram: Histogram
    device_histograms: tuple
    pattern: FringePattern
    etas: tuple
    shots: int
    seed: int
    order: int

    @property
    def visibility_expected(self) -> float:
        return self.pattern.visibility


@dataclass(frozen=True)
class DisplacementSpread:
    """Per-shot displacement statistics of the tracked variables.

    ``target_std``/``target_mean`` describe the shift of x_{0,q} (all
    orders below q cancel exactly); the device entries describe each
    site's common shift.
    """

    target_std: float
    target_mean: float
    device_stds: tuple
    device_means: tuple


def displacement_spread(
    spec: ArraySpec,
    model: NoiseModel,
    q: int,
    path_step: float | None = None,
) -> DisplacementSpread:
    """Exact std/mean of the per-shot shifts of x_{0,q} and of every site."""
    tk = spec.overlap_time
    if tk > 0:
        times = _time_grid(tk, path_step if path_step else tk / 32.0)
        step = float(times[1] - times[0])
        kern_sum = float(kernel_weights(times, tk).sum())
        coeff_std = np.array(displacement_std(model, tk, step))
        coeff_mean = np.array(
            [getattr(p, "mean", 0.0) * kern_sum for p in model.processes]
        )
    else:
        coeff_std = np.zeros(model.order + 1)
        coeff_mean = np.zeros(model.order + 1)
    sites = np.arange(spec.n_devices) * spec.spacing
    powers = sites[None, :] ** np.arange(model.order + 1)[:, None]
    w = difference_weights(q)
    sw = (w[None, :] * powers[:, : q + 1]).sum(axis=1)
    return DisplacementSpread(
        target_std=math.sqrt(float(((sw * coeff_std) ** 2).sum())),
        target_mean=float((sw * coeff_mean).sum()),
        device_stds=tuple(
            math.sqrt(float(((powers[:, d] * coeff_std) ** 2).sum()))
            for d in range(spec.n_devices)
        ),
        device_means=tuple(
            float((powers[:, d] * coeff_mean).sum()) for d in range(spec.n_devices)
        ),
    )


def _edges(center: float, half_width: float, period: float,
           bins_per_period: int) -> np.ndarray:
    n = 64
    if math.isfinite(period) and period > 0:
        n = max(n, int(math.ceil(2 * half_width / period * bins_per_period)))
    return np.linspace(center - half_width, center + half_width, n + 1)


def run_experiment(
    spec: ArraySpec,
    model: NoiseModel,
    shots: int,
    q: int,
    seed: int,
    *,
    path_step: float | None = None,
    eta_tolerance: float = 1e-6,
    bins_per_period: int = 64,
    span_sigmas: float = 6.0,
    workers: int = 1,
    chunk_size: int = 1 << 16,
) -> ExperimentResult:
    """Accumulate histograms of x_{0,q} and of every device position.

    Deterministic in (spec, model, shots, q, seed): the worker count and
    chunk schedule cannot change any drawn number or any count.

    ``pattern`` in the result is the pattern-recursion prediction; it is
    the exact marginal of x_{0,q} for q <= 1.  For q >= 2 the binomial
    variable still rejects all field orders below q, but its distribution
    is fringe-free (see the array module notes), so expect the fit to
    return a near-zero visibility there.
    """
    if shots < 1:
        raise InvalidSpecError(f"shots must be >= 1, got {shots}")
    if q < 0 or spec.n_devices < q + 1:
        raise OutOfRangeError(
            f"order-{q} experiment needs {q + 1} devices, spec has {spec.n_devices}"
        )
    eng = _Engine(spec, model, seed, q, path_step, eta_tolerance)
    target = eng.recursion.pattern

    # bin layout: envelope of the noise-free pattern widened by the exact
    # std of the per-shot displacement of each tracked variable
    spread = displacement_spread(spec, model, q, path_step)
    target_env = math.sqrt(target.sigma**2 + spread.target_std**2)
    tgt_edges = _edges(
        target.mu + spread.target_mean,
        span_sigmas * target_env,
        target.period,
        bins_per_period,
    )

    dev_edges = []
    for d, pat in enumerate(eng.device_patterns):
        env = math.sqrt(pat.sigma**2 + spread.device_stds[d] ** 2)
        center = pat.mu + spread.device_means[d]
        dev_edges.append(_edges(center, span_sigmas * env, pat.period, bins_per_period))

    starts = list(range(0, shots, chunk_size))

    def one_chunk(start: int):
        count = min(chunk_size, shots - start)
        coeffs = eng.coefficients(start, count)
        pos = eng.positions(start, count, coeffs)
        values = eng.difference_values(pos)
        tgt_counts, _ = np.histogram(values, bins=tgt_edges)
        dev_counts = [
            np.histogram(pos[:, d], bins=dev_edges[d])[0]
            for d in range(eng.n_devices)
        ]
        return tgt_counts.astype(np.int64), [c.astype(np.int64) for c in dev_counts]

    total_tgt = np.zeros(len(tgt_edges) - 1, dtype=np.int64)
    total_dev = [np.zeros(len(e) - 1, dtype=np.int64) for e in dev_edges]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_chunk, starts))
    else:
        results = [one_chunk(s) for s in starts]
    # merge in chunk order (associative integer sums; order irrelevant but fixed)
    for tgt_counts, dev_counts in results:
        total_tgt += tgt_counts
        for d in range(eng.n_devices):
            total_dev[d] += dev_counts[d]

    return ExperimentResult(
        histogram=Histogram(tgt_edges, total_tgt),
        device_histograms=tuple(
            Histogram(dev_edges[d], total_dev[d]) for d in range(eng.n_devices)
        ),
        pattern=target,
        etas=eng.recursion.etas,
        shots=shots,
        seed=int(seed),
        order=q,
    )


def sample_shots(
    spec: ArraySpec,
    model: NoiseModel,
    n: int,
    seed: int,
    start: int = 0,
    *,
    path_step: float | None = None,
    q: int = 0,
) -> list:
    """Individual shot records (for inspection/testing; same streams as run_experiment)."""
    eng = _Engine(spec, model, seed, q, path_step, eta_tolerance=1e-6)
    coeffs = eng.coefficients(start, n)
    pos = eng.positions(start, n, coeffs)
    return [
        ShotRecord(
            index=start + i,
            seed=int(seed),
            coefficients=tuple(coeffs[i]),
            positions=pos[i].copy(),
        )
        for i in range(n)
    ]


# --------------------------------------------------------------------------
# fringe fitting


@dataclass(frozen=True)
class FringeFit:
    """Least-squares fit of A exp(-(x-mu)^2/2 sigma^2)[1 + v cos(k(x-mu) + phi)]."""

    visibility: float
    wavenumber: float
    sigma: float
    center: float
    phase: float
    amplitude: float
    residual_norm: float

    def __post_init__(self):
        if not (0.0 <= self.visibility <= 1.0 + 1e-9):
            raise FitError(f"fitted visibility {self.visibility} outside [0, 1]")


def _fringe_model(x, amp, mu, sigma, vis, k, phi):
    u = x - mu
    return amp * np.exp(-(u * u) / (2.0 * sigma * sigma)) * (
        1.0 + vis * np.cos(k * u + phi)
    )


def fit_fringe(hist: Histogram, k_hint: float) -> FringeFit:
    """Fit the fringe model to a histogram's density view.

    ``k_hint`` seeds the wavenumber (bounded to a factor-2 window so the
    fit cannot lock onto a harmonic); the fitted modulation depth ``v`` is
    the reported visibility, with v = 1/a for the canonical family.

    The fit runs in rescaled coordinates (lengths in 1/k_hint, density in
    units of its peak) so every parameter is O(1); the solver may push v
    slightly past 1 to stay unbiased near full visibility, and the report
    clamps to [0, 1].
    """
    if not (k_hint > 0):
        raise FitError(f"k_hint must be positive, got {k_hint}")
    span = hist.edges[-1] - hist.edges[0]
    if span * k_hint < 3 * 2 * math.pi:
        raise FitError(
            "histogram must cover at least 3 fringe periods of k_hint "
            f"(covers {span * k_hint / (2 * math.pi):.2f})"
        )
    y_raw = hist.density()
    y_scale = float(y_raw.max())
    if y_scale <= 0:
        raise FitError("histogram density is identically zero")
    mu0 = float((hist.centers * y_raw).sum() / y_raw.sum())
    u = (hist.centers - mu0) * k_hint
    y = y_raw / y_scale
    var0 = float((u**2 * y).sum() / y.sum())
    s0 = math.sqrt(max(var0, 1e-4))
    span_u = span * k_hint
    p0 = [1.0, 0.0, s0, 0.5, 1.0, 0.0]
    lo = [0.0, -span_u / 2, span_u / 1000, 0.0, 0.5, -math.pi]
    hi = [10.0, span_u / 2, 10 * span_u, 1.25, 2.0, math.pi]
    try:
        popt, _ = curve_fit(
            _fringe_model, u, y, p0=p0, bounds=(lo, hi),
            maxfev=50000, xtol=1e-12, ftol=1e-12, gtol=1e-12,
        )
    except RuntimeError as exc:
        raise FitError(f"fringe fit did not converge: {exc}") from exc
    resid = y - _fringe_model(u, *popt)
    return FringeFit(
        amplitude=float(popt[0]) * y_scale,
        center=mu0 + float(popt[1]) / k_hint,
        sigma=float(popt[2]) / k_hint,
        visibility=min(max(float(popt[3]), 0.0), 1.0),
        wavenumber=float(popt[4]) * k_hint,
        phase=float(popt[5]),
        residual_norm=float(np.sqrt(np.mean(resid**2))) * y_scale,
    )
