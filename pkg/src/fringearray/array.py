"""Difference variables over an interferometer array and their patterns.

An order-q variable combines q+1 consecutive site positions with binomial
weights,

    x_{n,q} = sum_i (-1)^i C(q, i) / 2^q  x_{n+i},

which annihilates every polynomial of degree < q in the site index: the
array is blind to acceleration-field structure below order q.  The price
is paid in the pattern: each halving/subtraction step maps the fringe
family (a, sigma, k) to (2 a^2, sqrt((sigma_n^2 + sigma_{n+1}^2)/4), 2 k),
so visibility drops 1 -> 1/2 -> 1/8 -> ... while the rejected noise order
climbs.

``convolve_patterns`` carries the full five-term closed form of the
difference density; ``reduce_order`` keeps only the dominant term and
reports the discarded overlap factor eta = exp(-k^2 s1^2 s2^2 / (8 sp^2)),
valid when k sigma >> 1.

A caution on the recursion's reach: the convolution step treats the two
lower-order variables as independent.  That holds when they share no
devices, so the recursion describes the measured variable exactly for
q <= 1, and for any q when each subtraction pairs disjoint device groups
(2^q devices).  For the (q+1)-device binomial variable at q >= 2 the
shared devices misalign the interference terms in the characteristic
function (side lobes at k_q/2^j from different factors never coincide)
and the true marginal carries no visible fringe; the noise-cancellation
property of the weights is unaffected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, EtaToleranceError, InvalidSpecError, OutOfRangeError
from .noisefield import DisplacementCoefficients
from .wavepacket import FringePattern, InterferometerSpec, overlap_time, pattern_at_overlap

__all__ = [
    "ArraySpec",
    "DifferenceVariable",
    "ConvolvedPattern",
    "PatternRecursionState",
    "validate_matched_wavenumbers",
    "difference_weights",
    "difference_variable",
    "residual_fluctuation",
    "convolve_patterns",
    "reduce_order",
    "pattern_recursion",
    "recursive_pattern",
]

_MATCH_RTOL = 1e-12


def _overlap_wavenumber(dev: InterferometerSpec) -> float:
    return abs(2.0 * dev.alpha_i / dev.x0)


def _check_matched(devices) -> None:
    k0 = _overlap_wavenumber(devices[0])
    t0 = overlap_time(devices[0])
    for i, dev in enumerate(devices[1:], start=1):
        k = _overlap_wavenumber(dev)
        if abs(k - k0) > _MATCH_RTOL * max(abs(k0), abs(k)):
            raise ConfigurationError(
                f"wavenumber mismatch between devices 0 and {i}: "
                f"k0={k0!r}, k{i}={k!r}"
            )
        t = overlap_time(dev)
        if abs(t - t0) > _MATCH_RTOL * max(abs(t0), abs(t), 1e-300):
            raise ConfigurationError(
                f"overlap-time mismatch between devices 0 and {i}: "
                f"t0={t0!r}, t{i}={t!r}"
            )


@dataclass(frozen=True)
class ArraySpec:
    """Evenly spaced devices with matched fringe wavenumbers and overlap times.

    Matching is enforced on the computed at-overlap wavenumber
    k = 2 alpha_i / x0 itself (to 1e-12 relative), not on a proxy such as
    |alpha| / sqrt(m): at fixed omega, k scales as alpha_i sqrt(m omega),
    so keeping |alpha| / sqrt(m) equal across masses would not equalize k.
    Use :func:`fringearray.wavepacket.matched_spec` to design a device of a
    different mass that satisfies both the k and overlap-time conditions.
    """

    devices: tuple
    spacing: float

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        if len(self.devices) < 1:
            raise InvalidSpecError("array needs at least one device")
        if not (self.spacing > 0):
            raise InvalidSpecError(f"spacing must be positive, got {self.spacing}")
        _check_matched(self.devices)

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    @property
    def wavenumber(self) -> float:
        """Common at-overlap fringe wavenumber."""
        return _overlap_wavenumber(self.devices[0])

    @property
    def overlap_time(self) -> float:
        return overlap_time(self.devices[0])

    def site_position(self, n: int) -> float:
        return n * self.spacing


def validate_matched_wavenumbers(spec: ArraySpec) -> None:
    """Re-check the matched-k and equal-t_k conditions; raise on mismatch."""
    _check_matched(spec.devices)


def difference_weights(q: int) -> np.ndarray:
    """Binomial weights [(-1)^i C(q, i) / 2^q] for i = 0..q (exactly dyadic)."""
    if q < 0:
        raise InvalidSpecError(f"order must be >= 0, got {q}")
    scale = 2.0**-q
    return np.array([(-1) ** i * math.comb(q, i) * scale for i in range(q + 1)])


@dataclass(frozen=True)
class DifferenceVariable:
    """Order-q combination of sites n .. n+q."""

    base: int
    order: int
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.base < 0:
            raise InvalidSpecError(f"base index must be >= 0, got {self.base}")
        object.__setattr__(self, "weights", difference_weights(self.order))

    def evaluate(self, positions) -> float:
        return difference_variable(positions, self.base, self.order)


def difference_variable(positions, n: int, q: int) -> float:
    """Dot product of difference_weights(q) with positions[n : n+q+1].

    Identical to the pairwise recursion
    x_{n,q} = (x_{n,q-1} - x_{n+1,q-1}) / 2.
    """
    positions = np.asarray(positions, dtype=float)
    if n < 0 or n + q >= len(positions):
        raise OutOfRangeError(
            f"order-{q} variable at base {n} needs sites up to {n + q}, "
            f"have {len(positions)}"
        )
    return float(np.dot(difference_weights(q), positions[n : n + q + 1]))


def residual_fluctuation(
    coeffs: DisplacementCoefficients, h: float, q: int
) -> float:
    """Leading shift of x_{n,q}: q! h^q X_q / 2^q.

    All lower orders cancel exactly; this is the first surviving term of
    the displacement polynomial under the order-q weights.
    """
    if q < 0 or q > coeffs.order:
        raise OutOfRangeError(
            f"order {q} outside the expansion (max {coeffs.order})"
        )
    return math.factorial(q) * h**q * coeffs[q] / 2.0**q


@dataclass(frozen=True)
class ConvolvedPattern:
    """Exact five-term density of x = (x1 - x2)/2 for two fringe patterns.

    With sp^2 = (s1^2 + s2^2)/4 and eta = exp(-k^2 s1^2 s2^2 / (8 sp^2)):

        P(x) ~ exp(-x^2/2 sp^2) { a1 a2 + cos(2kx)/2
               + eta [a1 cos(s2^2 k x / 2 sp^2) + a2 cos(s1^2 k x / 2 sp^2)]
               + eta^4 cos((s1^2 - s2^2) k x / 2 sp^2) / 2 }.
    """

    a1: float
    a2: float
    sigma1: float
    sigma2: float
    k: float
    mu: float = 0.0

    @property
    def sigma_plus(self) -> float:
        return math.sqrt((self.sigma1**2 + self.sigma2**2) / 4.0)

    @property
    def eta(self) -> float:
        sp2 = self.sigma_plus**2
        return math.exp(-self.k**2 * self.sigma1**2 * self.sigma2**2 / (8.0 * sp2))

    def terms(self):
        """(amplitude, wavenumber) of every cosine component (0-frequency first)."""
        sp2 = self.sigma_plus**2
        eta = self.eta
        k = self.k
        return (
            (self.a1 * self.a2, 0.0),
            (0.5, 2.0 * k),
            (eta * self.a1, self.sigma2**2 * k / (2.0 * sp2)),
            (eta * self.a2, self.sigma1**2 * k / (2.0 * sp2)),
            (0.5 * eta**4, abs(self.sigma1**2 - self.sigma2**2) * k / (2.0 * sp2)),
        )

    @property
    def normalization(self) -> float:
        sp = self.sigma_plus
        total = 0.0
        for amp, kappa in self.terms():
            total += amp * math.exp(-0.5 * kappa**2 * sp**2)
        return math.sqrt(2.0 * math.pi) * sp * total

    def __call__(self, x):
        u = np.asarray(x, dtype=float) - self.mu
        sp = self.sigma_plus
        env = np.exp(-(u * u) / (2.0 * sp * sp))
        osc = np.zeros_like(u)
        for amp, kappa in self.terms():
            osc += amp * np.cos(kappa * u)
        return env * osc / self.normalization

    def truncated(self) -> FringePattern:
        """Dominant term only: the next member of the fringe family."""
        return FringePattern(
            a=2.0 * self.a1 * self.a2,
            sigma=self.sigma_plus,
            k=2.0 * self.k,
            mu=self.mu,
        )

    def default_grid(self, points_per_period: int = 32, span_sigmas: float = 8.0):
        sp = self.sigma_plus
        lo = self.mu - span_sigmas * sp
        hi = self.mu + span_sigmas * sp
        n = 513
        if self.k > 0:
            period = 2.0 * math.pi / (2.0 * self.k)
            n = max(n, int(math.ceil((hi - lo) / period * points_per_period)) + 1)
        x = np.linspace(lo, hi, n)
        return x, self(x)


def convolve_patterns(p1: FringePattern, p2: FringePattern) -> ConvolvedPattern:
    """Exact density of (x1 - x2)/2 for independent draws from p1 and p2.

    Requires matched wavenumbers; the result is centered at (mu1 - mu2)/2.
    """
    if abs(p1.k - p2.k) > _MATCH_RTOL * max(p1.k, p2.k):
        raise ConfigurationError(
            f"convolution requires matched wavenumbers, got {p1.k!r} and {p2.k!r}"
        )
    return ConvolvedPattern(
        a1=p1.a,
        a2=p2.a,
        sigma1=p1.sigma,
        sigma2=p2.sigma,
        k=0.5 * (p1.k + p2.k),
        mu=0.5 * (p1.mu - p2.mu),
    )


def reduce_order(
    p1: FringePattern, p2: FringePattern, eta_tolerance: float = 1e-6
):
    """One recursion step: truncate the convolution to the fringe family.

    Returns ``(pattern, eta)`` with pattern parameters
    a' = 2 a1 a2, sigma'^2 = (s1^2 + s2^2)/4, k' = 2k.  Raises
    :class:`EtaToleranceError` when the discarded overlap factor eta is
    above tolerance (the truncation would be unsound).
    """
    conv = convolve_patterns(p1, p2)
    eta = conv.eta
    if eta > eta_tolerance:
        raise EtaToleranceError(eta, eta_tolerance)
    return conv.truncated(), eta


@dataclass(frozen=True)
class PatternRecursionState:
    """Triangular reduction of per-site patterns down to one order-q pattern.

    ``levels[j]`` holds the patterns of x_{n,j} for n = 0..N-1-j;
    ``etas[j]`` the overlap factors discarded when building level j+1.
    """

    order: int
    levels: tuple
    etas: tuple

    @property
    def pattern(self) -> FringePattern:
        return self.levels[self.order][0]

    @property
    def max_eta(self) -> float:
        return max((e for step in self.etas for e in step), default=0.0)


def pattern_recursion(
    spec: ArraySpec, q: int, eta_tolerance: float = 1e-6
) -> PatternRecursionState:
    """Fold reduce_order across the array, keeping every level and eta."""
    if q < 0:
        raise InvalidSpecError(f"order must be >= 0, got {q}")
    if spec.n_devices < q + 1:
        raise OutOfRangeError(
            f"order-{q} recursion needs {q + 1} devices, spec has {spec.n_devices}"
        )
    level = [pattern_at_overlap(dev) for dev in spec.devices]
    levels = [tuple(level)]
    etas = []
    for _ in range(q):
        step_etas = []
        nxt = []
        for n in range(len(level) - 1):
            pat, eta = reduce_order(level[n], level[n + 1], eta_tolerance)
            nxt.append(pat)
            step_etas.append(eta)
        level = nxt
        levels.append(tuple(level))
        etas.append(tuple(step_etas))
    return PatternRecursionState(order=q, levels=tuple(levels), etas=tuple(etas))


def recursive_pattern(
    spec: ArraySpec, q: int, eta_tolerance: float = 1e-6
) -> FringePattern:
    """Fringe pattern of the base-0 order-q difference variable."""
    return pattern_recursion(spec, q, eta_tolerance).pattern
