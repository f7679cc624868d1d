"""Dense linear algebra for small quantum systems.

States are stored as plain numpy arrays wrapped in light frozen dataclasses
that check their physical invariants on construction. Qubit 0 is the most
significant bit of the computational-basis index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

MAX_QUBITS = 12
ATOL = 1e-10

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class QuantumError(ValueError):
    """Raised when an object violates a physical invariant or shapes disagree."""


def _n_qubits_for(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise QuantumError(f"dimension {dim} is not a power of two >= 2")
    if n > MAX_QUBITS:
        raise QuantumError(f"{n} qubits exceeds the dense limit of {MAX_QUBITS}")
    return n


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state over ``n_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        _n_qubits_for(amps.size)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-8:
            raise QuantumError(f"state is not normalized (norm={norm:.12g})")
        amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return _n_qubits_for(self.amplitudes.size)

    @classmethod
    def from_unnormalized(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise QuantumError("cannot normalize the zero vector")
        return cls(amps / norm)

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> "StateVector":
        if not 0 <= index < 2**n_qubits:
            raise QuantumError(f"basis index {index} out of range for {n_qubits} qubits")
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def random(cls, n_qubits: int, rng: np.random.Generator) -> "StateVector":
        """Haar-random pure state."""
        d = 2**n_qubits
        return cls.from_unnormalized(rng.normal(size=d) + 1j * rng.normal(size=d))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(np.kron(self.amplitudes, other.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits}, amplitudes={np.round(self.amplitudes, 6)})"


def _check_hermitian(matrix: np.ndarray, what: str) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise QuantumError(f"{what} must be a square matrix, got shape {matrix.shape}")
    if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > ATOL:
        raise QuantumError(f"{what} is not Hermitian")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        _check_hermitian(m, "density matrix")
        _n_qubits_for(m.shape[0])
        tr = np.trace(m).real
        if abs(tr - 1.0) > ATOL:
            raise QuantumError(f"density matrix trace is {tr:.12g}, expected 1")
        if np.linalg.eigvalsh(m).min() < -ATOL:
            raise QuantumError("density matrix has a negative eigenvalue")
        # Exact symmetrization keeps downstream eigh calls stable.
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_qubits(self) -> int:
        return _n_qubits_for(self.matrix.shape[0])

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        d = 2**n_qubits
        return cls(np.eye(d, dtype=complex) / d)

    @classmethod
    def random(cls, n_qubits: int, rng: np.random.Generator, rank: int | None = None) -> "DensityMatrix":
        """Random mixed state from the induced (Ginibre) measure."""
        d = 2**n_qubits
        k = d if rank is None else rank
        g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
        m = g @ g.conj().T
        return cls(m / np.trace(m).real)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def bloch_vector(self) -> np.ndarray:
        """(x, y, z) for a single-qubit state."""
        if self.n_qubits != 1:
            raise QuantumError("Bloch vector is only defined for one qubit")
        return np.array([np.trace(self.matrix @ p).real for p in (PAULI_X, PAULI_Y, PAULI_Z)])

    def __repr__(self):
        return f"DensityMatrix(n_qubits={self.n_qubits})"


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Observable or two-outcome measurement operator."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        _check_hermitian(m, "operator")
        _n_qubits_for(m.shape[0])
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_qubits(self) -> int:
        return _n_qubits_for(self.matrix.shape[0])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_measurement(self, atol: float = ATOL) -> bool:
        """True when all eigenvalues lie in [0, 1]."""
        ev = self.eigenvalues()
        return bool(ev.min() >= -atol and ev.max() <= 1 + atol)


State = Union[StateVector, DensityMatrix]


def as_density(state: State) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, StateVector):
        return state.to_density()
    raise TypeError(f"expected StateVector or DensityMatrix, got {type(state).__name__}")


def _same_dims(a, b) -> None:
    if a.n_qubits != b.n_qubits:
        raise QuantumError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")


EIG_ZERO = 1e-13


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian PSD matrix; eigenvalues in [-1e-10, 0) clamp to zero.

    Eigenvalues below 1e-13 are also treated as zero: they are rounding noise
    for rank-deficient inputs, and their square roots (~1e-7) would otherwise
    leak into the result.
    """
    w, v = np.linalg.eigh(matrix)
    if w.min() < -ATOL:
        raise QuantumError(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3g})")
    w = np.where(w < EIG_ZERO, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity_pure(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2."""
    _same_dims(a, b)
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def fidelity_mixed(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2.

    Computed as the squared trace norm of sqrt(rho) sqrt(sigma): its singular
    values are the square roots of the inner eigenvalues, obtained without
    taking square roots of rounding noise.
    """
    _same_dims(rho, sigma)
    prod = psd_sqrt(rho.matrix) @ psd_sqrt(sigma.matrix)
    f = float(np.sum(np.linalg.svd(prod, compute_uv=False)) ** 2)
    return min(max(f, 0.0), 1.0)


def fidelity(a: State, b: State) -> float:
    """Fidelity that dispatches on pure vs mixed inputs."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return fidelity_pure(a, b)
    if isinstance(a, StateVector):
        a, b = b, a
    if isinstance(b, StateVector):
        _same_dims(a, b)
        v = b.amplitudes
        return float(min(1.0, max(0.0, np.real(v.conj() @ a.matrix @ v))))
    return fidelity_mixed(a, b)


def trace_distance(a: State, b: State) -> float:
    a, b = as_density(a), as_density(b)
    _same_dims(a, b)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(a.matrix - b.matrix))))


def helstrom_positive(sigma: DensityMatrix, rho: DensityMatrix, threshold: float = ATOL) -> HermitianOperator:
    """Projector onto the strictly positive eigenspace of sigma - rho.

    This is the optimal two-outcome measurement T for telling sigma from rho:
    it maximizes Tr[T sigma] - Tr[T rho] over 0 <= T <= I.
    """
    _same_dims(sigma, rho)
    w, v = np.linalg.eigh(sigma.matrix - rho.matrix)
    pos = v[:, w > threshold]
    return HermitianOperator(pos @ pos.conj().T)


def bloch_to_density(x: float, y: float, z: float) -> DensityMatrix:
    """(I + x X + y Y + z Z) / 2."""
    r2 = x * x + y * y + z * z
    if r2 > 1 + ATOL:
        raise QuantumError(f"Bloch vector norm {np.sqrt(r2):.6g} exceeds 1")
    return DensityMatrix((I2 + x * PAULI_X + y * PAULI_Y + z * PAULI_Z) / 2)


def partial_trace(rho: State, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the qubits in ``keep`` (returned in ascending qubit order)."""
    rho = as_density(rho)
    n = rho.n_qubits
    keep = sorted(set(int(q) for q in keep))
    if any(q < 0 or q >= n for q in keep):
        raise QuantumError(f"qubit indices {keep} out of range for {n} qubits")
    if not keep:
        raise QuantumError("must keep at least one qubit")
    traced = [q for q in range(n) if q not in keep]
    t = rho.matrix.reshape([2] * (2 * n))
    # Trace pairs from the highest index down so earlier axis numbers stay valid.
    for count, q in enumerate(sorted(traced, reverse=True)):
        m = n - count
        t = np.trace(t, axis1=q, axis2=q + m)
    d = 2 ** len(keep)
    return DensityMatrix(t.reshape(d, d))


def expectation(rho: State, obs: HermitianOperator) -> float:
    """Tr[obs rho]."""
    rho = as_density(rho)
    _same_dims(rho, obs)
    val = np.trace(obs.matrix @ rho.matrix)
    if abs(val.imag) > 1e-9:
        raise QuantumError(f"expectation has imaginary part {val.imag:.3g}")
    return float(val.real)
