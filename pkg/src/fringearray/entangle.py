"""Entanglement protection for pairs of interferometers.

A "device" here is a pair of interferometers (sides A and B) whose arms
span a qubit each: |L> and |R>.  Gradient noise imprints a random phase on
the |RR> branch of every device's Bell-type state; averaging over a broad
phase kills the device's own entanglement.  Combining several devices at
different positions leaves phase-noise-immune components in the joint
state, detectable (and distillable by a local A-side measurement) across
the global A|B bipartition.

Basis convention: with d devices the state lives on 2d qubits ordered
A1..Ad B1..Bd (A block first, so the A|B bipartition is contiguous);
within a block device 1 is the most significant qubit; L = 0, R = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CapacityError, InvalidSpecError, InvalidStateError

__all__ = [
    "ArmState",
    "PhaseDistribution",
    "MeasurementResult",
    "ket",
    "device_state",
    "tensor_combine",
    "average_over_phases",
    "average_by_quadrature",
    "dephase_independent",
    "log_negativity",
    "local_measurement",
    "measurement_average_negativity",
    "recovered_entanglement",
    "state_fidelity",
]

_PURE_DEVICE_LIMIT = 8   # vector dimension 4^8 = 65536
_MIXED_DEVICE_LIMIT = 6  # density matrix 4096 x 4096

_HERM_TOL = 1e-12
_TRACE_TOL = 1e-10
_EIG_TOL = 1e-12


@dataclass(frozen=True)
class ArmState:
    """Pure vector or density matrix over the 2d arm qubits of d devices."""

    n_devices: int
    data: np.ndarray
    pure: bool

    def __post_init__(self):
        dim = 4**self.n_devices
        data = np.asarray(self.data, dtype=complex)
        if self.pure:
            if data.shape != (dim,):
                raise InvalidSpecError(
                    f"pure state for {self.n_devices} device(s) needs shape ({dim},)"
                )
        else:
            if data.shape != (dim, dim):
                raise InvalidSpecError(
                    f"density matrix for {self.n_devices} device(s) needs shape ({dim}, {dim})"
                )
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return 4**self.n_devices

    @property
    def side_dim(self) -> int:
        return 2**self.n_devices

    def as_density(self) -> np.ndarray:
        if self.pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def norm(self) -> float:
        if self.pure:
            return float(np.linalg.norm(self.data))
        return float(np.trace(self.data).real)


def _validate_density(rho: np.ndarray) -> np.ndarray:
    if np.max(np.abs(rho - rho.conj().T)) > _HERM_TOL:
        raise InvalidStateError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > _TRACE_TOL:
        raise InvalidStateError(f"density matrix trace {tr} != 1")
    eig = np.linalg.eigvalsh(rho)
    if eig.min() < -_EIG_TOL:
        raise InvalidStateError(
            f"density matrix has negative eigenvalue {eig.min():.3e}"
        )
    return rho


def ket(d: int, a: str, b: str) -> np.ndarray:
    """Basis vector from arm letters, e.g. ket(2, 'LR', 'LR').

    ``a``/``b`` list the A-side and B-side arms device by device (device 1
    first); 'L' = 0, 'R' = 1.
    """
    if len(a) != d or len(b) != d:
        raise InvalidSpecError(f"need {d} arm letters per side, got {a!r}, {b!r}")

    def bits(s: str) -> int:
        v = 0
        for ch in s:
            if ch not in "LR":
                raise InvalidSpecError(f"arm letters must be L or R, got {s!r}")
            v = (v << 1) | (ch == "R")
        return v

    vec = np.zeros(4**d, dtype=complex)
    vec[bits(a) * 2**d + bits(b)] = 1.0
    return vec


def device_state(j: int, phi: float, dphi: float) -> ArmState:
    """(|LL> + e^{i [phi + (j-1) dphi]} |RR>) / sqrt(2) for the device at slot j >= 1."""
    if j < 1:
        raise InvalidSpecError(f"device slot must be >= 1, got {j}")
    theta = phi + (j - 1) * dphi
    vec = (ket(1, "L", "L") + np.exp(1j * theta) * ket(1, "R", "R")) / math.sqrt(2.0)
    return ArmState(n_devices=1, data=vec, pure=True)


def _combine_pure(states: Sequence[ArmState]) -> ArmState:
    mats = [s.data.reshape(s.side_dim, s.side_dim) for s in states]
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    d = sum(s.n_devices for s in states)
    return ArmState(n_devices=d, data=out.reshape(-1), pure=True)


def _combine_mixed(states: Sequence[ArmState]) -> ArmState:
    d = states[0].n_devices
    out = states[0].as_density()
    for s in states[1:]:
        a1 = 2 ** d
        a2 = s.side_dim
        t1 = out.reshape(a1, a1, a1, a1)
        t2 = s.as_density().reshape(a2, a2, a2, a2)
        merged = np.einsum("abcd,efgh->aebfcgdh", t1, t2)
        d += s.n_devices
        dim = 4**d
        out = merged.reshape(dim, dim)
    return ArmState(n_devices=d, data=out, pure=False)


def tensor_combine(states: Sequence[ArmState]) -> ArmState:
    """Tensor product with the A sides grouped before the B sides.

    All inputs pure or all mixed; total devices capped at 8 (pure) or 6
    (mixed; the density matrix becomes too large beyond that).
    """
    states = list(states)
    if not states:
        raise InvalidSpecError("tensor_combine needs at least one state")
    total = sum(s.n_devices for s in states)
    all_pure = all(s.pure for s in states)
    all_mixed = all(not s.pure for s in states)
    if not (all_pure or all_mixed):
        raise InvalidSpecError("tensor_combine requires all pure or all mixed states")
    if all_pure and total > _PURE_DEVICE_LIMIT:
        raise CapacityError(f"{total} devices exceed the pure-state limit {_PURE_DEVICE_LIMIT}")
    if all_mixed and total > _MIXED_DEVICE_LIMIT:
        raise CapacityError(f"{total} devices exceed the mixed-state limit {_MIXED_DEVICE_LIMIT}")
    return _combine_pure(states) if all_pure else _combine_mixed(states)


@dataclass(frozen=True)
class PhaseDistribution:
    """Distribution of a noise phase: uniform on [0, 2pi), Gaussian, or a point.

    ``shared`` marks whether one draw applies to all devices (the
    common-mode case treated by the averaging operations) or each device
    draws independently (see :func:`dephase_independent`).
    """

    kind: str
    sigma: float = 0.0
    center: float = 0.0
    shared: bool = True

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian", "point"):
            raise InvalidSpecError(f"unknown phase distribution kind {self.kind!r}")
        if self.sigma < 0:
            raise InvalidSpecError(f"sigma must be >= 0, got {self.sigma}")

    @staticmethod
    def uniform(shared: bool = True) -> "PhaseDistribution":
        return PhaseDistribution(kind="uniform", shared=shared)

    @staticmethod
    def gaussian(sigma: float, center: float = 0.0, shared: bool = True) -> "PhaseDistribution":
        return PhaseDistribution(kind="gaussian", sigma=sigma, center=center, shared=shared)

    @staticmethod
    def point(value: float = 0.0) -> "PhaseDistribution":
        return PhaseDistribution(kind="point", center=value)

    def char(self, n: int) -> complex:
        """Characteristic function E[exp(i n theta)] at integer n."""
        if self.kind == "uniform":
            return 1.0 + 0.0j if n == 0 else 0.0 + 0.0j
        if self.kind == "gaussian":
            return np.exp(1j * n * self.center - 0.5 * n * n * self.sigma**2)
        return np.exp(1j * n * self.center)

    def quadrature_nodes(self, n_nodes: int = 64):
        """(theta, weight) nodes for brute-force averaging."""
        if self.kind == "uniform":
            theta = 2.0 * math.pi * np.arange(n_nodes) / n_nodes
            return theta, np.full(n_nodes, 1.0 / n_nodes)
        if self.kind == "gaussian":
            if self.sigma == 0.0:
                return np.array([self.center]), np.array([1.0])
            nodes, weights = np.polynomial.hermite_e.hermegauss(n_nodes)
            return self.center + self.sigma * nodes, weights / weights.sum()
        return np.array([self.center]), np.array([1.0])


def _dephasing_kernel(dist: PhaseDistribution, max_charge: int):
    """Grid phases and scalar weights reproducing E_dist[rho(theta)] exactly.

    rho(theta) is a trigonometric polynomial of degree <= max_charge, so
    sampling on 2*max_charge + 1 equidistant phases determines every
    Fourier coefficient; the weights fold in the distribution's
    characteristic function.
    """
    n_grid = 2 * max_charge + 1
    theta = 2.0 * math.pi * np.arange(n_grid) / n_grid
    weights = np.zeros(n_grid, dtype=complex)
    for n in range(-max_charge, max_charge + 1):
        weights += dist.char(n) * np.exp(-1j * n * theta)
    return theta, weights / n_grid


StateFamily = Callable[[float, float], ArmState]


def average_over_phases(
    family: StateFamily,
    phi_dist: PhaseDistribution,
    dphi_dist: Optional[PhaseDistribution] = None,
) -> ArmState:
    """Mixed state E[|psi(phi, dphi)><psi(phi, dphi)|] for shared phases.

    Exact for any family whose amplitudes carry integer multiples of phi
    (up to d) and of dphi (up to d(d-1)/2), which covers every state built
    from :func:`device_state`; works for all three distribution kinds.
    """
    if dphi_dist is None:
        dphi_dist = PhaseDistribution.point(0.0)
    if not phi_dist.shared or not dphi_dist.shared:
        raise InvalidSpecError(
            "average_over_phases handles shared phases; use dephase_independent"
        )
    probe = family(0.0, 0.0)
    d = probe.n_devices
    if d > _MIXED_DEVICE_LIMIT:
        raise CapacityError(
            f"{d} devices exceed the mixed-state limit {_MIXED_DEVICE_LIMIT}"
        )
    phi_nodes, phi_w = _dephasing_kernel(phi_dist, d)
    m_max = max(d * (d - 1) // 2, 0)
    dphi_nodes, dphi_w = _dephasing_kernel(dphi_dist, m_max) if m_max else (
        np.array([0.0]), np.array([1.0 + 0.0j]))
    dim = probe.dim
    acc = np.zeros((dim, dim), dtype=complex)
    for wp, phi in zip(phi_w, phi_nodes):
        for wd, dphi in zip(dphi_w, dphi_nodes):
            acc += (wp * wd) * family(phi, dphi).as_density()
    acc = 0.5 * (acc + acc.conj().T)  # clear rounding skew
    return ArmState(n_devices=d, data=acc, pure=False)


def average_by_quadrature(
    family: StateFamily,
    phi_dist: PhaseDistribution,
    dphi_dist: Optional[PhaseDistribution] = None,
    n_nodes: int = 96,
) -> ArmState:
    """Brute-force numerical average; cross-check for average_over_phases."""
    if dphi_dist is None:
        dphi_dist = PhaseDistribution.point(0.0)
    probe = family(0.0, 0.0)
    tp, wp = phi_dist.quadrature_nodes(n_nodes)
    td, wd = dphi_dist.quadrature_nodes(n_nodes)
    acc = np.zeros((probe.dim, probe.dim), dtype=complex)
    for w1, phi in zip(wp, tp):
        for w2, dphi in zip(wd, td):
            acc += (w1 * w2) * family(phi, dphi).as_density()
    acc = 0.5 * (acc + acc.conj().T)
    return ArmState(n_devices=probe.n_devices, data=acc, pure=False)


def dephase_independent(
    device_families: Sequence[Callable[[float], ArmState]],
    dist: PhaseDistribution,
) -> ArmState:
    """Average when every device draws its own independent phase.

    Independence factorizes the average over the tensor product, so each
    single-device family is dephased on its own and the mixed factors are
    combined.
    """
    averaged = [
        average_over_phases(
            lambda phi, _dphi, f=f: f(phi),
            PhaseDistribution(kind=dist.kind, sigma=dist.sigma, center=dist.center),
        )
        for f in device_families
    ]
    return tensor_combine(averaged)


def _partial_transpose_a(rho: np.ndarray, side_dim: int) -> np.ndarray:
    t = rho.reshape(side_dim, side_dim, side_dim, side_dim)
    return np.ascontiguousarray(t.transpose(2, 1, 0, 3)).reshape(rho.shape)


def log_negativity(state: ArmState) -> float:
    """E_N = log2 of the trace norm of the partial transpose over the A side."""
    rho = _validate_density(state.as_density())
    eig = np.linalg.eigvalsh(_partial_transpose_a(rho, state.side_dim))
    trace_norm = float(np.sum(np.abs(eig)))
    return max(0.0, math.log2(trace_norm))


@dataclass(frozen=True)
class MeasurementResult:
    """Outcome labels, probabilities and normalized post-measurement states."""

    labels: tuple
    probabilities: tuple
    post_states: tuple


def _a_side_projector(d: int, keep: Callable[[int], bool]) -> np.ndarray:
    """Diagonal projector selecting A-side bit patterns, identity on B."""
    side = 2**d
    diag = np.zeros(4**d)
    for a in range(side):
        if keep(a):
            diag[a * side : (a + 1) * side] = 1.0
    return diag


def local_measurement(
    state: ArmState, sectors: Optional[Sequence] = None
) -> MeasurementResult:
    """Projective measurement of the A-side arm populations.

    By default (two devices) the outcomes group the A-side patterns by
    their R-count: 1 -> LL, 2 -> span(LR, RL), 3 -> RR.  ``sectors`` may
    override with (label, predicate-on-A-bits) pairs.
    """
    d = state.n_devices
    if sectors is None:
        if d != 2:
            raise InvalidSpecError(
                "default measurement sectors are defined for 2 devices; "
                "pass explicit sectors otherwise"
            )
        sectors = [
            (1, lambda a: _popcount(a) == 0),
            (2, lambda a: _popcount(a) == 1),
            (3, lambda a: _popcount(a) == 2),
        ]
    rho = _validate_density(state.as_density())
    labels, probs, posts = [], [], []
    for label, keep in sectors:
        diag = _a_side_projector(d, keep)
        p = float(np.real(np.sum(diag * np.diag(rho).real)))
        labels.append(label)
        probs.append(p)
        if p > 1e-15:
            proj = diag[:, None] * rho * diag[None, :]
            posts.append(ArmState(n_devices=d, data=proj / p, pure=False))
        else:
            posts.append(None)
    return MeasurementResult(
        labels=tuple(labels), probabilities=tuple(probs), post_states=tuple(posts)
    )


def _popcount(v: int) -> int:
    return bin(v).count("1")


def measurement_average_negativity(
    state: ArmState, sectors: Optional[Sequence] = None
) -> float:
    """sum_outcomes p * E_N(post): the local-measurement lower-bound witness."""
    result = local_measurement(state, sectors)
    total = 0.0
    for p, post in zip(result.probabilities, result.post_states):
        if post is not None and p > 1e-15:
            total += p * log_negativity(post)
    return total


def recovered_entanglement(
    copies: int,
    phi_dist: PhaseDistribution,
    dphi_dist: Optional[PhaseDistribution] = None,
) -> float:
    """E_N across A|B of the phase-averaged state of ``copies`` devices.

    The devices sit at consecutive slots of the linear-gradient phase
    model (slot j picks up phi + (j-1) dphi).
    """
    if copies not in (1, 2, 4):
        raise InvalidSpecError(f"copies must be 1, 2 or 4, got {copies}")
    if not phi_dist.shared:
        families = [
            (lambda phi, j=j: device_state(j, phi, 0.0)) for j in range(1, copies + 1)
        ]
        return log_negativity(dephase_independent(families, phi_dist))

    def family(phi: float, dphi: float) -> ArmState:
        return tensor_combine(
            [device_state(j, phi, dphi) for j in range(1, copies + 1)]
        )

    return log_negativity(average_over_phases(family, phi_dist, dphi_dist))


def state_fidelity(state: ArmState, target: ArmState) -> float:
    """<psi|rho|psi> for a pure target."""
    if not target.pure:
        raise InvalidSpecError("fidelity target must be pure")
    v = target.data
    return float(np.real(v.conj() @ state.as_density() @ v))
