"""Stochastic acceleration fields and their multipole expansion.

The acceleration over a linear array is expanded around site 0,

    g(x, t) = g0(t) + g1(t) x + g2(t) x^2 + ...,

and each expansion coefficient is an independent stochastic process.  The
position density of a device at x = n h is rigidly displaced by

    x_gamma_n(t) = sum_k (n h)^k * X_k(t),
    X_k(t) = int_0^t g_k(s) (s - t) ds,

so everything downstream needs only the displacement coefficients X_k.
The module also carries the point-mass scenario arithmetic: how far a
perturbing mass must sit to shift an order-q difference variable by a
given acceleration budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from ._kernels import ou_paths
from ._streams import NOISE_PURPOSE, ShotStream
from .errors import (
    BracketError,
    GeometryError,
    GridError,
    InvalidSpecError,
    OutOfRangeError,
)

__all__ = [
    "ZeroProcess",
    "ShotConstant",
    "OrnsteinUhlenbeck",
    "BandlimitedWhite",
    "NoiseModel",
    "NoisePath",
    "DisplacementCoefficients",
    "PointMassSource",
    "GRAVITATIONAL_CONSTANT",
    "sample_path",
    "displacement_coefficients",
    "displacement_at_site",
    "displacement_std",
    "newtonian_acceleration",
    "finite_difference_sensitivity",
    "solve_standoff_distance",
]

GRAVITATIONAL_CONSTANT = 6.674e-11  # m^3 kg^-1 s^-2


# --------------------------------------------------------------------------
# stochastic processes for the expansion coefficients g_k(t)


@dataclass(frozen=True)
class ZeroProcess:
    """No noise at this order."""

    def n_draws(self, n_nodes: int, times: np.ndarray) -> int:
        return 0

    def realize(self, z: np.ndarray, times: np.ndarray) -> np.ndarray:
        return np.zeros((z.shape[0], len(times)))

    def covariance(self, times: np.ndarray) -> np.ndarray:
        n = len(times)
        return np.zeros((n, n))


@dataclass(frozen=True)
class ShotConstant:
    """Constant over one run, redrawn each shot: g(t) = mean + std * z."""

    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if self.std < 0:
            raise InvalidSpecError(f"std must be >= 0, got {self.std}")

    def n_draws(self, n_nodes: int, times: np.ndarray) -> int:
        return 1

    def realize(self, z, times):
        values = self.mean + self.std * z[:, 0]
        return np.repeat(values[:, None], len(times), axis=1)

    def covariance(self, times):
        n = len(times)
        return np.full((n, n), self.std**2)


@dataclass(frozen=True)
class OrnsteinUhlenbeck:
    """Stationary OU process: autocorrelation std^2 exp(-|dt| / tau)."""

    tau: float
    std: float

    def __post_init__(self):
        if not (self.tau > 0):
            raise InvalidSpecError(f"relaxation time must be positive, got {self.tau}")
        if self.std < 0:
            raise InvalidSpecError(f"std must be >= 0, got {self.std}")

    def n_draws(self, n_nodes: int, times: np.ndarray) -> int:
        return n_nodes

    def realize(self, z, times):
        if len(times) == 1:
            return self.std * z[:, :1]
        step = times[1] - times[0]
        rho = math.exp(-step / self.tau)
        return ou_paths(np.ascontiguousarray(z[:, : len(times)]), rho, self.std)

    def covariance(self, times):
        dt = np.abs(times[:, None] - times[None, :])
        return self.std**2 * np.exp(-dt / self.tau)


@dataclass(frozen=True)
class BandlimitedWhite:
    """Piecewise-constant white noise: a fresh N(0, std^2) value every ``hold``."""

    std: float
    hold: float

    def __post_init__(self):
        if self.std < 0:
            raise InvalidSpecError(f"std must be >= 0, got {self.std}")
        if not (self.hold > 0):
            raise InvalidSpecError(f"hold time must be positive, got {self.hold}")

    def _blocks(self, times: np.ndarray) -> np.ndarray:
        return np.minimum(
            np.floor(times / self.hold).astype(np.int64),
            int(math.floor(times[-1] / self.hold)),
        )

    def n_draws(self, n_nodes: int, times: np.ndarray) -> int:
        return int(self._blocks(times)[-1]) + 1

    def realize(self, z, times):
        return self.std * z[:, self._blocks(times)]

    def covariance(self, times):
        blocks = self._blocks(times)
        same = blocks[:, None] == blocks[None, :]
        return self.std**2 * same.astype(float)


NoiseProcess = Union[ZeroProcess, ShotConstant, OrnsteinUhlenbeck, BandlimitedWhite]


@dataclass(frozen=True)
class NoiseModel:
    """One stochastic process per expansion order g_0 .. g_Q."""

    processes: tuple

    def __post_init__(self):
        object.__setattr__(self, "processes", tuple(self.processes))

    @property
    def order(self) -> int:
        """Highest expansion order Q (number of processes minus one)."""
        return len(self.processes) - 1

    @staticmethod
    def zero(order: int = 0) -> "NoiseModel":
        return NoiseModel(tuple(ZeroProcess() for _ in range(order + 1)))

    @staticmethod
    def common_mode(process: NoiseProcess) -> "NoiseModel":
        return NoiseModel((process,))

    def draws_per_shot(self, times: np.ndarray) -> int:
        return sum(p.n_draws(len(times), times) for p in self.processes)

    def realize(self, z: np.ndarray, times: np.ndarray) -> list[np.ndarray]:
        """Split the per-shot draw matrix into per-order sample paths."""
        out = []
        col = 0
        for p in self.processes:
            n = p.n_draws(len(times), times)
            out.append(p.realize(z[:, col : col + n], times))
            col += n
        return out


@dataclass(frozen=True)
class NoisePath:
    """One realization of every expansion order on a common time grid."""

    times: np.ndarray
    values: np.ndarray  # shape (orders, n_nodes)
    seed: int
    shot: int = 0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 1 or t[0] != 0.0:
            raise GridError("time grid must be 1-D and start at 0")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise GridError("time grid must be strictly increasing")
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if v.shape[1] != len(t):
            raise GridError("values and time grid lengths differ")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    @property
    def order(self) -> int:
        return self.values.shape[0] - 1

    def interpolate(self, t, order: int = 0):
        """Linear interpolation of g_order(t); the path's ground truth."""
        return np.interp(t, self.times, self.values[order])


def _time_grid(duration: float, step: float) -> np.ndarray:
    if not (duration > 0):
        raise GridError(f"duration must be positive, got {duration}")
    if not (step > 0):
        raise GridError(f"step must be positive, got {step}")
    if step > duration:
        raise GridError(f"step {step} exceeds duration {duration}")
    n = int(round(duration / step))
    return np.linspace(0.0, duration, n + 1)


def sample_path(
    model: NoiseModel, duration: float, step: float, seed: int, shot: int = 0
) -> NoisePath:
    """Draw one noise realization, reproducible per (seed, shot).

    The draws come from the same counter-based layout the Monte Carlo
    engine uses, so ``sample_path(..., shot=i)`` reproduces exactly the
    path that shot ``i`` of an experiment with the same seed sees.
    """
    times = _time_grid(duration, step)
    stream = ShotStream(seed, NOISE_PURPOSE, max(1, model.draws_per_shot(times)))
    z = stream.normals(shot, 1)
    values = np.vstack([v[0] for v in model.realize(z, times)])
    return NoisePath(times=times, values=values, seed=seed, shot=shot)


# --------------------------------------------------------------------------
# displacement functionals


def kernel_weights(times: np.ndarray, t: float) -> np.ndarray:
    """Trapezoid weights w with w . g = int_0^t g(s) (s - t) ds.

    The integrand vanishes at s = t, so a final partial interval needs no
    interpolated endpoint; accuracy is O(step^2) overall.
    """
    times = np.asarray(times, dtype=float)
    if t < 0 or t > times[-1] * (1 + 1e-12):
        raise OutOfRangeError(f"t={t} outside path duration [0, {times[-1]}]")
    t = min(t, times[-1])
    w = np.zeros(len(times))
    if t <= 0.0:
        return w
    i = int(np.searchsorted(times, t, side="left"))  # nodes [:i] are < t
    kern = times[:i] - t
    if i >= 2:
        d = np.diff(times[:i])
        w[: i - 1] += 0.5 * d * kern[:-1]
        w[1:i] += 0.5 * d * kern[1:]
    # last (possibly partial) interval [times[i-1], t]; the kernel is 0 at t
    w[i - 1] += 0.5 * (t - times[i - 1]) * kern[i - 1]
    return w


@dataclass(frozen=True)
class DisplacementCoefficients:
    """Per-order displacement X_k(t); the site shift is a polynomial in n h."""

    values: tuple
    time: float

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not all(math.isfinite(v) for v in self.values):
            raise InvalidSpecError("displacement coefficients must be finite")

    @property
    def order(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, k: int) -> float:
        return self.values[k]


def displacement_coefficients(path: NoisePath, t: float) -> DisplacementCoefficients:
    """Trapezoid quadrature of X_k(t) = int_0^t g_k(s) (s - t) ds for every order."""
    w = kernel_weights(path.times, t)
    vals = tuple(float(np.dot(path.values[k], w)) for k in range(path.order + 1))
    return DisplacementCoefficients(values=vals, time=float(t))


def displacement_at_site(
    coeffs: DisplacementCoefficients, n: int, h: float
) -> float:
    """Site displacement sum_k (n h)^k X_k, evaluated by Horner's rule."""
    if n < 0:
        raise OutOfRangeError(f"site index must be >= 0, got {n}")
    if not (h > 0):
        raise InvalidSpecError(f"spacing must be positive, got {h}")
    u = n * h
    acc = 0.0
    for v in reversed(coeffs.values):
        acc = acc * u + v
    return acc


def displacement_std(
    model: NoiseModel, duration: float, step: float
) -> tuple:
    """Exact standard deviation of each X_k under the model's processes.

    X_k is a linear functional of a Gaussian process, so
    Var[X_k] = w^T C w with C the process covariance on the grid.
    """
    times = _time_grid(duration, step)
    w = kernel_weights(times, duration)
    out = []
    for p in model.processes:
        var = float(w @ p.covariance(times) @ w)
        out.append(math.sqrt(max(var, 0.0)))
    return tuple(out)


# --------------------------------------------------------------------------
# point-mass scenario arithmetic


@dataclass(frozen=True)
class PointMassSource:
    """A perturbing point mass at standoff distance R on the array axis."""

    mass: float
    distance: float
    G: float = GRAVITATIONAL_CONSTANT

    def __post_init__(self):
        if not (self.mass > 0):
            raise InvalidSpecError(f"mass must be positive, got {self.mass}")
        if not (self.distance > 0):
            raise InvalidSpecError(f"distance must be positive, got {self.distance}")

    def field_at(self, x: float) -> float:
        """On-axis Newtonian acceleration at array coordinate x (sites approach the source)."""
        r = self.distance - x
        if r <= 0:
            raise GeometryError(
                f"site at x={x} lies at or beyond the source distance {self.distance}"
            )
        return self.G * self.mass / r**2


def newtonian_acceleration(src: PointMassSource) -> float:
    """G M / R^2 at the reference site."""
    return src.field_at(0.0)


def finite_difference_sensitivity(src: PointMassSource, h: float, q: int) -> float:
    """|q-th finite difference| of the exact field across sites 0, h, ..., q h.

    Returns |sum_i (-1)^i C(q, i) g(i h)| without the 1/2^q weighting of
    the difference variable; for h << R this tends to the derivative bound
    (q+1)! G M h^q / R^(q+2).
    """
    if q < 0:
        raise InvalidSpecError(f"order must be >= 0, got {q}")
    if not (h > 0):
        raise InvalidSpecError(f"spacing must be positive, got {h}")
    total = 0.0
    for i in range(q + 1):
        total += (-1) ** i * math.comb(q, i) * src.field_at(i * h)
    return abs(total)


def solve_standoff_distance(
    mass: float, h: float, q: int, delta_a: float, rel_tol: float = 1e-9
) -> float:
    """Distance R at which the order-q sensitivity equals ``delta_a``.

    The sensitivity is strictly decreasing in R, so plain bisection on a
    bracketing interval converges to a unique root.
    """
    if not (delta_a > 0):
        raise InvalidSpecError(f"acceleration budget must be positive, got {delta_a}")

    def f(R: float) -> float:
        return finite_difference_sensitivity(PointMassSource(mass, R), h, q) - delta_a

    # the sensitivity diverges as the last site approaches the source and
    # decays like R^-(q+2) far away, so a sign-changing bracket always exists
    lo = q * h + 1e-9 * max(h, 1.0)
    if f(lo) <= 0:
        raise BracketError(
            f"sensitivity at R={lo:.3g} already below delta_a={delta_a:.3g}"
        )
    hi = 2.0 * max(lo, h)
    for _ in range(200):
        if f(hi) < 0:
            break
        hi *= 2.0
    else:
        raise BracketError("no upper bracket: sensitivity stays above delta_a")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * hi:
            break
    return 0.5 * (lo + hi)
