"""Parameterized circuits, the gate library, state-vector simulation and noise rewriting.

Rotation convention: RX(t) = exp(-i t X / 2), likewise RY and RZ.
Gate matrices act on the gate's qubits in the order they are listed, the
first listed qubit being the most significant local bit.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.linalg import expm

from .quantum import QuantumError, StateVector

ParamValue = Union[str, float, None]


class GateKind(str, enum.Enum):
    H = "H"
    X = "X"
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    CZ = "CZ"
    CNOT = "CNOT"
    CSWAP_EXP = "CSWAP_EXP"
    G_ENTANGLE = "G_ENTANGLE"
    RAW_UNITARY = "RAW_UNITARY"


PARAMETRIC = {GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.CSWAP_EXP, GateKind.G_ENTANGLE}
_FIXED_ARITY = {
    GateKind.H: 1, GateKind.X: 1, GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1,
    GateKind.CZ: 2, GateKind.CNOT: 2, GateKind.G_ENTANGLE: 2,
}
# Frequency unit of the expectation value as a function of each gate's angle:
# half-angle rotations and G(t) contribute integer frequencies, exp(-i t P)
# with involutory P contributes even ones.
_FREQ_UNIT = {GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1, GateKind.G_ENTANGLE: 1, GateKind.CSWAP_EXP: 2}


class CircuitError(QuantumError):
    pass


def _split_symbol(sym: str) -> tuple[str, float]:
    if sym.startswith("-"):
        return sym[1:], -1.0
    return sym, 1.0


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate application.

    ``param`` is a symbol name (optionally prefixed with ``-`` for the
    negated value), a fixed angle in radians, or None for fixed gates.
    RAW_UNITARY gates carry ``matrix``; if they also carry ``param`` the
    matrix is read as a Hermitian generator H and the gate is exp(-i t H).
    """

    kind: GateKind
    qubits: tuple[int, ...]
    param: ParamValue = None
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if len(set(qubits)) != len(qubits):
            raise CircuitError(f"{kind.value}: repeated qubit in {qubits}")
        if any(q < 0 for q in qubits):
            raise CircuitError(f"{kind.value}: negative qubit index")
        k = len(qubits)
        if kind in _FIXED_ARITY and k != _FIXED_ARITY[kind]:
            raise CircuitError(f"{kind.value} takes {_FIXED_ARITY[kind]} qubits, got {k}")
        if kind is GateKind.CSWAP_EXP and k < 2:
            raise CircuitError("CSWAP_EXP needs at least one swapped pair")
        if kind in PARAMETRIC and self.param is None:
            raise CircuitError(f"{kind.value} requires a parameter")
        if kind not in PARAMETRIC and kind is not GateKind.RAW_UNITARY and self.param is not None:
            raise CircuitError(f"{kind.value} takes no parameter")
        if self.param is not None and not isinstance(self.param, str):
            object.__setattr__(self, "param", float(self.param))
        if kind is GateKind.RAW_UNITARY:
            if self.matrix is None:
                raise CircuitError("RAW_UNITARY requires a matrix")
            m = np.array(self.matrix, dtype=complex)
            if m.shape != (2**k, 2**k):
                raise CircuitError(f"RAW_UNITARY matrix shape {m.shape} does not match {k} qubits")
            if self.param is None:
                if np.max(np.abs(m.conj().T @ m - np.eye(2**k))) > 1e-10:
                    raise CircuitError("RAW_UNITARY matrix is not unitary")
            elif np.max(np.abs(m - m.conj().T)) > 1e-10:
                raise CircuitError("parameterized RAW_UNITARY needs a Hermitian generator")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif self.matrix is not None:
            raise CircuitError(f"{kind.value} does not take a matrix")

    @property
    def symbol(self) -> str | None:
        """Bare parameter name, or None for fixed-angle and fixed gates."""
        if isinstance(self.param, str):
            return _split_symbol(self.param)[0]
        return None

    def angle(self, bound: Mapping[str, float] | None = None) -> float | None:
        if self.param is None:
            return None
        if isinstance(self.param, float):
            return self.param
        name, sign = _split_symbol(self.param)
        if bound is None or name not in bound:
            raise CircuitError(f"unbound parameter {name!r}")
        return sign * float(bound[name])

    def with_param(self, param: ParamValue) -> "Gate":
        return Gate(self.kind, self.qubits, param, self.matrix)

    def remap(self, mapping: Mapping[int, int]) -> "Gate":
        return Gate(self.kind, tuple(mapping[q] for q in self.qubits), self.param, self.matrix)


@lru_cache(maxsize=None)
def _register_swap_perm(k: int, controlled: bool) -> np.ndarray:
    """Permutation matrix of the (controlled) swap of two k-qubit registers.

    Local qubit order is (control?, a_0..a_{k-1}, b_0..b_{k-1}).
    """
    width = 2 * k + (1 if controlled else 0)
    dim = 2**width
    idx = np.arange(dim)
    a_shift = k
    a_mask = (1 << k) - 1
    a = (idx >> a_shift) & a_mask
    b = idx & a_mask
    swapped = (idx & ~((1 << 2 * k) - 1)) | (b << a_shift) | a
    if controlled:
        ctrl = (idx >> (2 * k)) & 1
        target = np.where(ctrl == 1, swapped, idx)
    else:
        target = swapped
    perm = np.zeros((dim, dim))
    perm[target, idx] = 1.0
    perm.setflags(write=False)
    return perm


_FIXED = {
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.CZ: np.diag([1, 1, 1, -1]).astype(complex),
    GateKind.CNOT: np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}


def gate_matrix(g: Gate, bound_params: Mapping[str, float] | None = None) -> np.ndarray:
    """Unitary of ``g`` on its own qubits (first listed qubit most significant)."""
    if g.kind in _FIXED:
        return _FIXED[g.kind]
    if g.kind is GateKind.RAW_UNITARY:
        if g.param is None:
            return g.matrix
        return expm(-1j * g.angle(bound_params) * g.matrix)
    t = g.angle(bound_params)
    c, s = np.cos(t / 2), np.sin(t / 2)
    if g.kind is GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]])
    if g.kind is GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=complex)
    if g.kind is GateKind.RZ:
        return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    if g.kind is GateKind.G_ENTANGLE:
        p = np.exp(-1j * t)
        return np.diag([1, p, p, 1])
    if g.kind is GateKind.CSWAP_EXP:
        k = len(g.qubits) // 2
        perm = _register_swap_perm(k, len(g.qubits) % 2 == 1)
        # exp(-i t P) = cos t I - i sin t P whenever P^2 = I.
        return np.cos(t) * np.eye(perm.shape[0]) - 1j * np.sin(t) * perm
    raise CircuitError(f"no matrix for {g.kind}")


def apply_matrix(state: np.ndarray, matrix: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """Apply a k-qubit matrix to ``qubits`` of an n-qubit amplitude vector."""
    k = len(qubits)
    psi = state.reshape([2] * n_qubits)
    op = matrix.reshape([2] * (2 * k))
    psi = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), list(qubits)))
    # tensordot puts the gate's output axes first; move them back into place.
    psi = np.moveaxis(psi, list(range(k)), list(qubits))
    return psi.reshape(-1)


def embed(matrix: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """Full 2^n matrix of a local gate, built column by column from basis states."""
    dim = 2**n_qubits
    full = np.zeros((dim, dim), dtype=complex)
    k = len(qubits)
    for col in range(dim):
        bits = [(col >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]
        local_in = 0
        for q in qubits:
            local_in = (local_in << 1) | bits[q]
        for local_out in range(2**k):
            amp = matrix[local_out, local_in]
            if amp == 0:
                continue
            out_bits = list(bits)
            for pos, q in enumerate(qubits):
                out_bits[q] = (local_out >> (k - 1 - pos)) & 1
            row = 0
            for q in range(n_qubits):
                row = (row << 1) | out_bits[q]
            full[row, col] += amp
    return full


@dataclass(frozen=True, eq=False)
class ParameterizedCircuit:
    """Ordered gate list over ``n_qubits`` with named real parameters."""

    n_qubits: int
    gates: tuple[Gate, ...] = ()
    parameter_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise CircuitError("circuit needs at least one qubit")
        gates = tuple(self.gates)
        for g in gates:
            if max(g.qubits) >= self.n_qubits:
                raise CircuitError(f"{g.kind.value} on {g.qubits} exceeds width {self.n_qubits}")
        used = []
        for g in gates:
            if g.symbol is not None and g.symbol not in used:
                used.append(g.symbol)
        names = tuple(used) if self.parameter_names is None else tuple(self.parameter_names)
        if len(set(names)) != len(names):
            raise CircuitError(f"duplicate parameter names in {names}")
        missing = [s for s in used if s not in names]
        if missing:
            raise CircuitError(f"symbols {missing} are not declared parameters")
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "parameter_names", names)

    def __len__(self):
        return len(self.gates)

    def bind(self, params) -> dict[str, float]:
        """Normalize a mapping or a sequence aligned with ``parameter_names``."""
        if isinstance(params, Mapping):
            missing = [p for p in self.parameter_names if p not in params]
            if missing:
                raise CircuitError(f"unbound parameters {missing}")
            return {p: float(params[p]) for p in self.parameter_names}
        values = np.asarray([] if params is None else params, dtype=float).reshape(-1)
        if values.size != len(self.parameter_names):
            raise CircuitError(f"expected {len(self.parameter_names)} parameter values, got {values.size}")
        return dict(zip(self.parameter_names, values.tolist()))

    def append(self, *gates: Gate) -> "ParameterizedCircuit":
        return ParameterizedCircuit(self.n_qubits, self.gates + tuple(gates))

    def two_qubit_gate_count(self) -> int:
        return sum(1 for g in self.gates if len(g.qubits) >= 2)

    def rename(self, mapping: Mapping[str, str]) -> "ParameterizedCircuit":
        gates = []
        for g in self.gates:
            if g.symbol in mapping:
                neg = "-" if g.param.startswith("-") else ""
                g = g.with_param(neg + mapping[g.symbol])
            gates.append(g)
        names = tuple(mapping.get(p, p) for p in self.parameter_names)
        return ParameterizedCircuit(self.n_qubits, tuple(gates), names)

    def on_qubits(self, qubits: Sequence[int], n_qubits: int) -> "ParameterizedCircuit":
        """Relocate this circuit into a wider register."""
        mapping = dict(enumerate(qubits))
        return ParameterizedCircuit(n_qubits, tuple(g.remap(mapping) for g in self.gates), self.parameter_names)

    def __add__(self, other: "ParameterizedCircuit") -> "ParameterizedCircuit":
        if other.n_qubits != self.n_qubits:
            raise CircuitError("cannot concatenate circuits of different widths")
        names = self.parameter_names + tuple(p for p in other.parameter_names if p not in self.parameter_names)
        return ParameterizedCircuit(self.n_qubits, self.gates + other.gates, names)


@lru_cache(maxsize=None)
def _global_swap_index(qubits: tuple[int, ...], n_qubits: int) -> np.ndarray:
    """Basis-index image of a (controlled) register swap acting on ``qubits``.

    The swap is an involution, so (P psi)[j] = psi[idx[j]].
    """
    k = len(qubits) // 2
    controlled = len(qubits) % 2 == 1
    ctrl = qubits[0] if controlled else None
    a, b = qubits[int(controlled):int(controlled) + k], qubits[int(controlled) + k:]
    idx = np.arange(2**n_qubits)
    shift = [n_qubits - 1 - q for q in range(n_qubits)]
    out = idx.copy()
    for qa, qb in zip(a, b):
        ba, bb = (idx >> shift[qa]) & 1, (idx >> shift[qb]) & 1
        diff = ba ^ bb
        out = out ^ (diff << shift[qa]) ^ (diff << shift[qb])
    if controlled:
        out = np.where((idx >> shift[ctrl]) & 1 == 1, out, idx)
    out.setflags(write=False)
    return out


def simulate(c: ParameterizedCircuit, bound_params=None, initial: StateVector | None = None) -> StateVector:
    """Apply the gates of ``c`` in order to ``initial`` (default |0...0>)."""
    bound = c.bind(bound_params if bound_params is not None else {})
    if initial is None:
        psi = np.zeros(2**c.n_qubits, dtype=complex)
        psi[0] = 1.0
    else:
        if initial.n_qubits != c.n_qubits:
            raise CircuitError(f"initial state has {initial.n_qubits} qubits, circuit has {c.n_qubits}")
        psi = np.array(initial.amplitudes)
    for g in c.gates:
        if g.kind is GateKind.CSWAP_EXP and len(g.qubits) > 3:
            # Wide swaps: act with the index permutation instead of a dense matrix.
            t = g.angle(bound)
            psi = np.cos(t) * psi - 1j * np.sin(t) * psi[_global_swap_index(g.qubits, c.n_qubits)]
            continue
        psi = apply_matrix(psi, gate_matrix(g, bound), g.qubits, c.n_qubits)
    return StateVector.from_unnormalized(psi)


def circuit_unitary(c: ParameterizedCircuit, bound_params=None) -> np.ndarray:
    """Compose the embedded full-width gate matrices."""
    bound = c.bind(bound_params if bound_params is not None else {})
    u = np.eye(2**c.n_qubits, dtype=complex)
    for g in c.gates:
        u = embed(gate_matrix(g, bound), g.qubits, c.n_qubits) @ u
    return u


def prob_zero(s: StateVector, qubit: int) -> float:
    """Marginal probability that ``qubit`` reads 0."""
    n = s.n_qubits
    if not 0 <= qubit < n:
        raise CircuitError(f"qubit {qubit} out of range for {n} qubits")
    p = s.probabilities().reshape([2] * n)
    return float(np.take(p, 0, axis=qubit).sum())


@dataclass(frozen=True)
class NoiseModel:
    """Biased coherent Z over-rotations inserted after selected gates.

    Angles are drawn once per rewrite from Normal(mean, std) with ``seed``.
    """

    rz_bias_mean: float = 0.3
    rz_bias_std: float = 0.05
    target_kinds: frozenset = frozenset({GateKind.CZ})
    seed: int = 0

    def __post_init__(self):
        if self.rz_bias_std < 0:
            raise ValueError("rz_bias_std must be >= 0")
        object.__setattr__(self, "target_kinds", frozenset(GateKind(k) for k in self.target_kinds))


def apply_noise(c: ParameterizedCircuit, nm: NoiseModel) -> ParameterizedCircuit:
    """Insert a fixed RZ(eps) on every operand qubit right after each targeted gate."""
    rng = np.random.default_rng(nm.seed)
    gates = []
    for g in c.gates:
        gates.append(g)
        if g.kind in nm.target_kinds:
            eps = rng.normal(nm.rz_bias_mean, nm.rz_bias_std, size=len(g.qubits))
            gates.extend(Gate(GateKind.RZ, (q,), float(e)) for q, e in zip(g.qubits, eps))
    return ParameterizedCircuit(c.n_qubits, tuple(gates), c.parameter_names)


def compile_g_entangle(c: ParameterizedCircuit) -> ParameterizedCircuit:
    """Rewrite every G(t) into CZ, H and RZ gates (exact up to global phase).

    G(t) = exp(-i t/2) exp(i t/2 Z Z), and CNOT RZ_b(-t) CNOT = exp(i t/2 Z Z)
    with each CNOT expanded as (I x H) CZ (I x H).
    """
    gates = []
    for g in c.gates:
        if g.kind is not GateKind.G_ENTANGLE:
            gates.append(g)
            continue
        a, b = g.qubits
        if isinstance(g.param, str):
            neg = g.param[1:] if g.param.startswith("-") else "-" + g.param
        else:
            neg = -g.param
        cnot = [Gate(GateKind.H, (b,)), Gate(GateKind.CZ, (a, b)), Gate(GateKind.H, (b,))]
        gates.extend(cnot + [Gate(GateKind.RZ, (b,), neg)] + cnot)
    return ParameterizedCircuit(c.n_qubits, tuple(gates), c.parameter_names)


def shift_spectrum(circuits: Iterable[ParameterizedCircuit], name: str) -> tuple[int, int]:
    """(base frequency, number of harmonics) of the cost as a function of ``name``.

    The expectation value is a trigonometric polynomial in the parameter with
    frequencies that are multiples of ``base`` up to ``base * count``.
    """
    units = []
    for c in circuits:
        for g in c.gates:
            if g.symbol != name:
                continue
            if g.kind is GateKind.RAW_UNITARY:
                raise CircuitError(f"parameter {name!r} drives a RAW_UNITARY gate; no shift rule applies")
            units.append(_FREQ_UNIT[g.kind])
    if not units:
        return 1, 0
    base = 0
    for u in units:
        base = gcd(base, u)
    return base, sum(u // base for u in units)


# ---------------------------------------------------------------- text format

def _format_param(p) -> str:
    return p if isinstance(p, str) else repr(float(p))


def dumps(c: ParameterizedCircuit) -> str:
    """Line-oriented text form: ``KIND q0[,q1,...] [param=<symbol|float>]``."""
    lines = [f"# qubits={c.n_qubits} params={','.join(c.parameter_names)}"]
    for g in c.gates:
        line = f"{g.kind.value} {','.join(str(q) for q in g.qubits)}"
        if g.param is not None:
            line += f" param={_format_param(g.param)}"
        if g.matrix is not None:
            flat = [[float(z.real), float(z.imag)] for z in g.matrix.reshape(-1)]
            line += f" matrix={json.dumps(flat, separators=(',', ':'))}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def loads(text: str, n_qubits: int | None = None) -> ParameterizedCircuit:
    """Parse :func:`dumps` output. Width comes from the header or ``n_qubits``."""
    gates = []
    names = None
    width = n_qubits
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "qubits" and width is None:
                    width = int(val)
                elif key == "params":
                    names = tuple(v for v in val.split(",") if v)
            continue
        parts = line.split()
        try:
            kind = GateKind(parts[0])
            qubits = tuple(int(q) for q in parts[1].split(","))
            param, matrix = None, None
            for tok in parts[2:]:
                key, _, val = tok.partition("=")
                if key == "param":
                    try:
                        param = float(val)
                    except ValueError:
                        param = val
                elif key == "matrix":
                    flat = json.loads(val)
                    d = int(round(np.sqrt(len(flat))))
                    matrix = np.array([complex(re, im) for re, im in flat]).reshape(d, d)
                else:
                    raise ValueError(f"unknown field {key!r}")
            gates.append(Gate(kind, qubits, param, matrix))
        except (ValueError, IndexError) as exc:
            raise CircuitError(f"line {lineno}: {exc}") from exc
    if width is None:
        width = max((max(g.qubits) for g in gates), default=0) + 1
    return ParameterizedCircuit(width, tuple(gates), names)
