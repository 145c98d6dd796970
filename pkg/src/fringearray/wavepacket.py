"""Closed-form single-interferometer physics.

A device prepares the center of mass of a particle of mass ``m`` in a
symmetric superposition of two coherent states (a "cat" state) of a
reference mode of frequency ``omega``, lets it fly freely under a
spatially uniform, possibly time-dependent acceleration, and measures
position.  Everything observable about one device is captured by three
closed forms implemented here:

* the free-flight position density of the cat state at any time, rigidly
  displaced by the acceleration history through the functional
  x_gamma(t) = int_0^t g(s) (s - t) ds;
* its shape at the overlap time t_k = -alpha_r / (omega alpha_i), where it
  collapses to the canonical fringe family
  P(x) ~ exp(-x^2 / 2 sigma^2) [a + cos(k x)]  with a = 1;
* the shot-averaged density when the displacement is Gaussian with
  standard deviation sigma_gamma.

All lengths are naturally expressed in units of the ground-state width
x0 = sqrt(hbar / (2 m omega)); the module is unit-agnostic as long as the
inputs are consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    InvalidSpecError,
    NonphysicalTimeError,
    NoOverlapTimeError,
)

__all__ = [
    "InterferometerSpec",
    "FringePattern",
    "AveragedPattern",
    "EvolvedPacketGeometry",
    "CatDensity",
    "Scales",
    "derive_scales",
    "overlap_time",
    "packet_geometry",
    "position_pdf",
    "pattern_at_overlap",
    "pattern_normalization",
    "averaged_pdf",
    "spec_from_pattern_scales",
    "matched_spec",
]


@dataclass(frozen=True)
class InterferometerSpec:
    """One interferometer: mass, reference frequency and cat amplitude.

    ``alpha = alpha_r + i alpha_i`` sets the initial packet separation
    (2 x0 alpha_r each side of the origin) and relative momentum
    (2 p0 alpha_i).  ``site`` is the device's index in an array (0 for a
    standalone device).
    """

    m: float
    omega: float
    alpha_r: float
    alpha_i: float
    hbar: float = 1.0
    site: int = 0

    def __post_init__(self):
        if not (self.m > 0):
            raise InvalidSpecError(f"mass must be positive, got {self.m}")
        if not (self.omega > 0):
            raise InvalidSpecError(f"frequency must be positive, got {self.omega}")
        if not (self.hbar > 0):
            raise InvalidSpecError(f"hbar must be positive, got {self.hbar}")
        if self.site < 0:
            raise InvalidSpecError(f"site index must be >= 0, got {self.site}")

    @property
    def x0(self) -> float:
        """Ground-state position width sqrt(hbar / (2 m omega))."""
        return math.sqrt(self.hbar / (2.0 * self.m * self.omega))

    @property
    def p0(self) -> float:
        """Ground-state momentum width; x0 * p0 = hbar / 2 exactly."""
        return self.hbar / (2.0 * self.x0)

    @property
    def alpha(self) -> complex:
        return complex(self.alpha_r, self.alpha_i)

    @property
    def alpha_sq(self) -> float:
        return self.alpha_r**2 + self.alpha_i**2


@dataclass(frozen=True)
class Scales:
    x0: float
    p0: float


def derive_scales(spec: InterferometerSpec) -> Scales:
    """Position and momentum scales of the reference mode."""
    return Scales(x0=spec.x0, p0=spec.p0)


def overlap_time(spec: InterferometerSpec) -> float:
    """Time t_k = -alpha_r / (omega alpha_i) at which both packets sit at x = 0.

    Raises :class:`NoOverlapTimeError` for alpha_i = 0 (the packets never
    move together) and :class:`NonphysicalTimeError` when the formula gives
    a negative time (packets receding from the start).
    """
    if spec.alpha_i == 0.0:
        raise NoOverlapTimeError(
            "alpha_i = 0: packets carry no relative momentum, no overlap time"
        )
    tk = -spec.alpha_r / (spec.omega * spec.alpha_i)
    if tk < 0.0:
        raise NonphysicalTimeError(
            f"overlap time t_k = {tk:.6g} < 0; require alpha_r/alpha_i <= 0"
        )
    return tk


@dataclass(frozen=True)
class EvolvedPacketGeometry:
    """Free-flight geometry of the two packets at time t.

    ``center_plus/minus`` are the packet centers before the common
    displacement; ``displacement`` is the rigid shift x_gamma(t) of the
    whole density.  ``wavenumber`` is the local fringe wavenumber of the
    interference term, ``normalization`` the integral of the unnormalized
    three-term density.
    """

    center_plus: float
    center_minus: float
    sigma: float
    wavenumber: float
    displacement: float
    time: float
    normalization: float


def packet_geometry(
    spec: InterferometerSpec, t: float, x_gamma: float = 0.0
) -> EvolvedPacketGeometry:
    """Centers, width and fringe wavenumber of the evolved cat at time t.

    The width spreads as sigma_t^2 = x0^2 [1 + (omega t)^2]; the centers
    move linearly as +/- 2 x0 (alpha_r + alpha_i omega t).  The fringe
    wavenumber of the interference term is

        k_t = (2 / x0) [alpha_i - omega t (alpha_r + alpha_i omega t)
                                   / (1 + (omega t)^2)]
            = (2 / x0) (alpha_i - alpha_r omega t) / (1 + (omega t)^2),

    which reduces to 2 alpha_i / x0 both at t = 0 and at the overlap time.
    (The sign of the second term is fixed by the exact Gaussian evolution;
    see test_oracle.py for the first-principles check.)
    """
    if t < 0:
        raise InvalidSpecError(f"time must be >= 0, got {t}")
    x0 = spec.x0
    tau = spec.omega * t
    sigma = x0 * math.sqrt(1.0 + tau * tau)
    xa = 2.0 * x0 * (spec.alpha_r + spec.alpha_i * tau)
    k_t = (2.0 / x0) * (spec.alpha_i - spec.alpha_r * tau) / (1.0 + tau * tau)
    amp = math.exp(-(xa * xa) / (2.0 * sigma * sigma))
    norm = math.sqrt(2.0 * math.pi) * sigma * (
        2.0 + 2.0 * amp * math.exp(-0.5 * k_t * k_t * sigma * sigma)
    )
    return EvolvedPacketGeometry(
        center_plus=xa,
        center_minus=-xa,
        sigma=sigma,
        wavenumber=k_t,
        displacement=x_gamma,
        time=t,
        normalization=norm,
    )


class CatDensity:
    """Evaluable position density of the evolved cat state.

    Two Gaussians of width sigma_t at x_gamma +/- x_alpha(t) plus an
    interference term with envelope at x_gamma, all normalized in closed
    form.  The whole density is the x_gamma = 0 density translated by
    x_gamma (rigid-displacement property of a uniform acceleration).
    """

    def __init__(self, spec: InterferometerSpec, t: float, x_gamma: float = 0.0):
        self.spec = spec
        self.geometry = packet_geometry(spec, t, x_gamma)

    @property
    def normalization(self) -> float:
        return self.geometry.normalization

    def __call__(self, x):
        g = self.geometry
        u = np.asarray(x, dtype=float) - g.displacement
        s2 = 2.0 * g.sigma * g.sigma
        xa = g.center_plus
        amp = math.exp(-(xa * xa) / s2)
        raw = (
            np.exp(-((u - xa) ** 2) / s2)
            + np.exp(-((u + xa) ** 2) / s2)
            + 2.0 * amp * np.exp(-(u * u) / s2) * np.cos(g.wavenumber * u)
        )
        return raw / g.normalization

    def default_grid(self, points_per_period: int = 32, span_sigmas: float = 8.0):
        """Sampling grid covering both packets, resolving every fringe."""
        g = self.geometry
        half = abs(g.center_plus) + span_sigmas * g.sigma
        lo = g.displacement - half
        hi = g.displacement + half
        n = 513
        if g.wavenumber > 0:
            period = 2.0 * math.pi / g.wavenumber
            n = max(n, int(math.ceil((hi - lo) / period * points_per_period)) + 1)
        x = np.linspace(lo, hi, n)
        return x, self(x)


def position_pdf(
    spec: InterferometerSpec, t: float, x_gamma: float = 0.0
) -> CatDensity:
    """Normalized position density of the cat state at time t, displaced by x_gamma."""
    return CatDensity(spec, t, x_gamma)


@dataclass(frozen=True)
class FringePattern:
    """Canonical fringe family: exp(-(x-mu)^2 / 2 sigma^2) [a + cos(k (x-mu))] / N.

    The offset ``a >= 1`` keeps the density nonnegative; visibility of the
    oscillation is 1/a.  The family is closed under the pattern-reduction
    step used for difference variables (see the array module).
    """

    a: float
    sigma: float
    k: float
    mu: float = 0.0

    def __post_init__(self):
        if not (self.sigma > 0):
            raise InvalidSpecError(f"envelope width must be positive, got {self.sigma}")
        if self.k < 0:
            raise InvalidSpecError(f"wavenumber must be >= 0, got {self.k}")
        if self.a < 1.0 - 1e-12:
            raise InvalidSpecError(f"offset a must be >= 1 for a valid density, got {self.a}")

    @property
    def normalization(self) -> float:
        """N = sqrt(2 pi) sigma (a + exp(-sigma^2 k^2 / 2))."""
        return math.sqrt(2.0 * math.pi) * self.sigma * (
            self.a + math.exp(-0.5 * self.sigma**2 * self.k**2)
        )

    @property
    def visibility(self) -> float:
        return 1.0 / self.a

    @property
    def period(self) -> float:
        return math.inf if self.k == 0 else 2.0 * math.pi / self.k

    def __call__(self, x):
        u = np.asarray(x, dtype=float) - self.mu
        raw = np.exp(-(u * u) / (2.0 * self.sigma**2)) * (self.a + np.cos(self.k * u))
        return raw / self.normalization

    def shifted(self, dx: float) -> "FringePattern":
        return replace(self, mu=self.mu + dx)

    def default_grid(self, points_per_period: int = 32, span_sigmas: float = 8.0):
        lo = self.mu - span_sigmas * self.sigma
        hi = self.mu + span_sigmas * self.sigma
        n = 513
        if self.k > 0:
            n = max(n, int(math.ceil((hi - lo) / self.period * points_per_period)) + 1)
        x = np.linspace(lo, hi, n)
        return x, self(x)


def pattern_at_overlap(spec: InterferometerSpec) -> FringePattern:
    """Fringe pattern at the overlap time: a = 1, k = 2 alpha_i / x0, sigma = sigma_tk."""
    tk = overlap_time(spec)
    g = packet_geometry(spec, tk)
    return FringePattern(a=1.0, sigma=g.sigma, k=abs(2.0 * spec.alpha_i / spec.x0))


def pattern_normalization(pattern: FringePattern) -> float:
    """Closed-form integral of the unnormalized fringe density."""
    return pattern.normalization


@dataclass(frozen=True)
class AveragedPattern:
    """Fringe pattern averaged over Gaussian shot-to-shot displacements.

    Averaging exp(-x^2/2 sigma^2)[a + cos kx] over x_gamma ~ N(0, sigma_gamma^2)
    widens the envelope to Sigma^2 = sigma^2 + sigma_gamma^2, rescales the
    wavenumber to k sigma^2 / Sigma^2 and multiplies the oscillation by

        D = exp(-k^2 sigma^2 sigma_gamma^2 / (2 Sigma^2)),

    so the visibility drops from 1/a to D/a.
    """

    a: float
    sigma: float
    k: float
    fringe_factor: float
    mu: float = 0.0

    @property
    def normalization(self) -> float:
        return math.sqrt(2.0 * math.pi) * self.sigma * (
            self.a + self.fringe_factor * math.exp(-0.5 * self.sigma**2 * self.k**2)
        )

    @property
    def visibility(self) -> float:
        return self.fringe_factor / self.a

    def __call__(self, x):
        u = np.asarray(x, dtype=float) - self.mu
        raw = np.exp(-(u * u) / (2.0 * self.sigma**2)) * (
            self.a + self.fringe_factor * np.cos(self.k * u)
        )
        return raw / self.normalization

    def default_grid(self, points_per_period: int = 32, span_sigmas: float = 8.0):
        lo = self.mu - span_sigmas * self.sigma
        hi = self.mu + span_sigmas * self.sigma
        n = 513
        if self.k > 0:
            period = 2.0 * math.pi / self.k
            n = max(n, int(math.ceil((hi - lo) / period * points_per_period)) + 1)
        x = np.linspace(lo, hi, n)
        return x, self(x)


def averaged_pdf(pattern: FringePattern, sigma_gamma: float) -> AveragedPattern:
    """Shot-averaged density for Gaussian displacement noise of width sigma_gamma."""
    if sigma_gamma < 0:
        raise InvalidSpecError(f"sigma_gamma must be >= 0, got {sigma_gamma}")
    s2 = pattern.sigma**2
    g2 = sigma_gamma**2
    big = s2 + g2
    return AveragedPattern(
        a=pattern.a,
        sigma=math.sqrt(big),
        k=pattern.k * s2 / big,
        fringe_factor=math.exp(-0.5 * pattern.k**2 * s2 * g2 / big),
        mu=pattern.mu,
    )


def spec_from_pattern_scales(
    k_x0: float,
    sigma_over_x0: float,
    m: float = 1.0,
    omega: float = 1.0,
    hbar: float = 1.0,
    site: int = 0,
) -> InterferometerSpec:
    """Design a device whose overlap pattern has given k*x0 and sigma/x0.

    Inverts k = 2 alpha_i / x0 and sigma_tk = x0 sqrt(1 + (omega t_k)^2):
    alpha_i = k x0 / 2 and alpha_r = -alpha_i omega t_k.
    """
    if k_x0 <= 0:
        raise InvalidSpecError(f"k*x0 must be positive, got {k_x0}")
    if sigma_over_x0 < 1:
        raise InvalidSpecError(
            f"sigma/x0 must be >= 1 (width only spreads), got {sigma_over_x0}"
        )
    alpha_i = 0.5 * k_x0
    omega_tk = math.sqrt(sigma_over_x0**2 - 1.0)
    alpha_r = -alpha_i * omega_tk
    return InterferometerSpec(
        m=m, omega=omega, alpha_r=alpha_r, alpha_i=alpha_i, hbar=hbar, site=site
    )


def matched_spec(reference: InterferometerSpec, m: float, site: int = 0) -> InterferometerSpec:
    """A device of mass ``m`` with the same overlap time and fringe wavenumber.

    Holding omega fixed, equal k = 2 alpha_i / x0 across different masses
    requires alpha_i proportional to x0, i.e. to 1/sqrt(m); the ratio
    alpha_r / alpha_i (hence t_k) is preserved.
    """
    tk = overlap_time(reference)
    k = 2.0 * reference.alpha_i / reference.x0
    x0_new = math.sqrt(reference.hbar / (2.0 * m * reference.omega))
    alpha_i = 0.5 * k * x0_new
    alpha_r = -alpha_i * reference.omega * tk
    return InterferometerSpec(
        m=m,
        omega=reference.omega,
        alpha_r=alpha_r,
        alpha_i=alpha_i,
        hbar=reference.hbar,
        site=site,
    )
