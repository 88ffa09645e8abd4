"""Dense state-vector simulation of the quantum side of the scheme.

Only for tiny instances in odd characteristic. The n-qudit system has basis |x>, x in F_q^n,
stored at index sum_i int(x_i) q^i. The mixed stabilizer state is purified: amplitudes are a
(q^n, D) matrix whose columns are indexed by the reference system, so the reduced system
state is amplitudes @ amplitudes^H.

Conventions: W(a, b)|x> = w^{tr(b.x)} |x + a> with w = exp(2 pi i / p), so
W(a, b) W(c, d) = w^{tr(b.c - a.d)} W(c, d) W(a, b). The stabilizer group of a
self-orthogonal V is {E(v)} with E(a, b) = w^{tr(a.b) / 2} W(a, b), which makes v -> E(v) a
group homomorphism on V. Outcome x of the PVM has projector
P_x = |V|^-1 sum_v w^{-s <v, x M>} E(v) where <.,.> is the trace symplectic form and the sign
s is calibrated per instance.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import List, Optional

import galois
import numpy as np
import scipy.linalg

from qpir_lab.errors import (
    CheckFailedError,
    EvenCharacteristicUnsupportedError,
    NotSelfOrthogonalError,
    TooLargeError,
)
from qpir_lab.fields import FieldSpec, trace
from qpir_lab.linalg import MatrixGF, enumerate_vectors, rank, span_elements
from qpir_lab.protocol import (
    Measurement,
    QpirScheme,
    RoundState,
    StorageSystem,
    Transcript,
    run_protocol,
)
from qpir_lab.symplectic import is_self_orthogonal, symp_form

MAX_DENSE_DIMENSION = 10**6
PROBABILITY_TOLERANCE = 1e-9
OUTCOME_CHUNK_SIZE = 4096


@dataclass(frozen=True, eq=False)
class QuditSpace:
    """The basis of (C^q)^{tensor n} labelled by F_q^n."""

    field: FieldSpec
    n: int

    def __post_init__(self):
        if self.field.is_char2:
            raise EvenCharacteristicUnsupportedError(
                f"The dense oracle supports odd characteristic only, got {self.field}"
            )

    @property
    def dim(self) -> int:
        return self.field.q**self.n

    @functools.cached_property
    def points(self) -> MatrixGF:
        return enumerate_vectors(self.field.GF, self.n)

    @functools.cached_property
    def place_values(self) -> np.ndarray:
        return self.field.q ** np.arange(self.n, dtype=np.int64)

    def index_of(self, points: MatrixGF) -> np.ndarray:
        return points.view(np.ndarray) @ self.place_values

    def phases(self, prime_values: galois.FieldArray) -> np.ndarray:
        """w^v for prime-field values v."""
        return np.exp(2j * np.pi * prime_values.view(np.ndarray) / self.field.p)


@dataclass(frozen=True, eq=False)
class WeylLabel:
    a: MatrixGF
    """Shift part."""
    b: MatrixGF
    """Phase part."""

    @classmethod
    def from_vector(cls, v: MatrixGF) -> WeylLabel:
        n = v.shape[0] // 2
        return cls(a=v[:n], b=v[n:])


@dataclass(frozen=True, eq=False)
class StateVector:
    space: QuditSpace
    amplitudes: np.ndarray
    """(q^n, D) complex; column j is the branch paired with reference state j."""
    aux_exponent: int

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def reduced_density(self) -> np.ndarray:
        return self.amplitudes @ self.amplitudes.conj().T


def _weyl_amplitudes(space: QuditSpace, amplitudes: np.ndarray, a: MatrixGF, b: MatrixGF, extra_phase: complex = 1.0) -> np.ndarray:
    phase = space.phases(trace(space.points @ b)) * extra_phase
    target = space.index_of(space.points + a)
    out = np.empty_like(amplitudes)
    out[target] = phase[:, np.newaxis] * amplitudes
    return out


def _symmetric_phase(space: QuditSpace, a: MatrixGF, b: MatrixGF) -> complex:
    half = space.field.prime_field(2) ** -1
    return complex(space.phases(trace(a @ b) * half))


def weyl_apply(state: StateVector, label: WeylLabel) -> StateVector:
    """W(a, b) = X(a) Z(b) on the system factor."""
    return StateVector(
        space=state.space,
        amplitudes=_weyl_amplitudes(state.space, state.amplitudes, label.a, label.b),
        aux_exponent=state.aux_exponent,
    )


def symmetric_weyl_apply(space: QuditSpace, amplitudes: np.ndarray, v: MatrixGF) -> np.ndarray:
    """E(v) applied to raw amplitudes."""
    label = WeylLabel.from_vector(v)
    return _weyl_amplitudes(
        space, amplitudes, label.a, label.b, _symmetric_phase(space, label.a, label.b)
    )


def apply_stabilizer_projector(space: QuditSpace, amplitudes: np.ndarray, V_basis: MatrixGF) -> np.ndarray:
    """P_0 = |V|^-1 sum_v E(v)."""
    elements = span_elements(V_basis)
    out = np.zeros_like(amplitudes)
    for v in elements:
        out += symmetric_weyl_apply(space, amplitudes, v)
    return out / elements.shape[0]


def stabilizer_initial_state(
    V_basis: MatrixGF, space: QuditSpace, rng: Optional[np.random.Generator] = None
) -> StateVector:
    """Purification of P_0 / tr(P_0), i.e. |0><0| tensor the maximally mixed state."""
    if not is_self_orthogonal(V_basis):
        raise NotSelfOrthogonalError("Stabilizer basis is not self-orthogonal")
    rng = np.random.default_rng(0) if rng is None else rng
    aux_exponent = space.n - rank(V_basis)
    D = space.field.q**aux_exponent
    if space.dim * D > MAX_DENSE_DIMENSION:
        raise TooLargeError(f"Purified state needs {space.dim} x {D} amplitudes")

    batch = rng.standard_normal((space.dim, D + 2)) + 1j * rng.standard_normal((space.dim, D + 2))
    basis = scipy.linalg.orth(apply_stabilizer_projector(space, batch, V_basis))
    assert basis.shape[1] == D, f"Stabilized subspace has dimension {basis.shape[1]}, expected {D}"
    return StateVector(space=space, amplitudes=basis / np.sqrt(D), aux_exponent=aux_exponent)


@dataclass(frozen=True, eq=False)
class PvmDistribution:
    labels: MatrixGF
    """All q^{2c} outcome labels, one per row."""
    probabilities: np.ndarray

    @property
    def total(self) -> float:
        return float(self.probabilities.sum())

    @property
    def max_probability(self) -> float:
        return float(self.probabilities.max())

    def most_likely(self) -> MatrixGF:
        return self.labels[int(np.argmax(self.probabilities))]

    def is_point_mass(self, tolerance: float = PROBABILITY_TOLERANCE) -> bool:
        return self.max_probability >= 1 - tolerance


def stabilizer_expectations(state: StateVector, elements: MatrixGF) -> np.ndarray:
    """tr(rho E(v)) for every listed v."""
    return np.array(
        [np.vdot(state.amplitudes, symmetric_weyl_apply(state.space, state.amplitudes, v)) for v in elements]
    )


def pvm_probabilities(
    state: StateVector, V_basis: MatrixGF, M: MatrixGF, sign: int = 1
) -> PvmDistribution:
    elements = span_elements(V_basis)
    expectations = stabilizer_expectations(state, elements)
    labels = enumerate_vectors(state.space.field.GF, M.shape[0])

    probabilities = np.empty(labels.shape[0])
    for start in range(0, labels.shape[0], OUTCOME_CHUNK_SIZE):
        chunk = labels[start : start + OUTCOME_CHUNK_SIZE]
        pairing = symp_form(elements, chunk @ M)
        characters = state.space.phases(pairing) ** (-sign)
        probabilities[start : start + chunk.shape[0]] = np.real(expectations @ characters) / elements.shape[0]
    return PvmDistribution(labels=labels, probabilities=probabilities)


def calibrate_phase_sign(state: StateVector, V_basis: MatrixGF, M: MatrixGF) -> int:
    """The sign under which displacing by the first row of M yields the first unit label."""
    displaced = weyl_apply(state, WeylLabel.from_vector(M[0]))
    for sign in (1, -1):
        distribution = pvm_probabilities(displaced, V_basis, M, sign)
        label = distribution.most_likely()
        if distribution.is_point_mass() and int(label[0]) == 1 and not np.any(label[1:]):
            return sign
    raise CheckFailedError("phase-calibration", "no sign maps x M to outcome x", witness=M[0].tolist())


class DenseMeasurement(Measurement):
    """Samples the PVM outcome from the dense simulation; fails unless it is a point mass."""

    def __init__(self, scheme: QpirScheme, seed: int = 0):
        params = scheme.params
        if scheme.field.is_char2:
            raise EvenCharacteristicUnsupportedError(
                f"The dense oracle supports odd characteristic only, got {scheme.field}"
            )
        if scheme.field.q ** (2 * params.s_dim) > MAX_DENSE_DIMENSION:
            raise TooLargeError(
                f"q^(2(k+t-1)) = {scheme.field.q ** (2 * params.s_dim)} exceeds {MAX_DENSE_DIMENSION}"
            )
        self.space = QuditSpace(field=scheme.field, n=params.n_eff)
        self.V_basis = scheme.V_basis
        self.initial_state = stabilizer_initial_state(
            self.V_basis, self.space, np.random.default_rng(seed)
        )
        self.sign = calibrate_phase_sign(self.initial_state, self.V_basis, scheme.schedules[0].M)
        self.name = f"dense-pvm(sign={self.sign:+d})"
        self.distributions: List[PvmDistribution] = []

    def __call__(self, scheme: QpirScheme, state: RoundState) -> MatrixGF:
        received = weyl_apply(self.initial_state, WeylLabel.from_vector(state.A))
        distribution = pvm_probabilities(received, self.V_basis, state.schedule.M, self.sign)
        self.distributions.append(distribution)
        if abs(distribution.total - 1) > PROBABILITY_TOLERANCE:
            raise CheckFailedError("pvm-normalization", f"probabilities sum to {distribution.total}", witness=state.r)
        if not distribution.is_point_mass():
            raise CheckFailedError(
                "pvm-determinism", f"max probability {distribution.max_probability}", witness=state.r
            )
        return distribution.most_likely()


def run_dense_protocol(scheme: QpirScheme, storage: StorageSystem, K: int, seed: int) -> Transcript:
    """The scheme with the measurement taken from the dense PVM."""
    return run_protocol(scheme, storage, K, seed, DenseMeasurement(scheme, seed))


def reduced_state_distance(state_a: StateVector, state_b: StateVector) -> float:
    """Trace distance between the reduced system states."""
    difference = state_a.reduced_density() - state_b.reduced_density()
    return float(0.5 * np.abs(scipy.linalg.eigvalsh(difference)).sum())
