"""Readout-qubit QNN classifier trained by sampling or by QRAM superpositions.

Layout: data qubits 0..n-1, readout qubit n. The readout is prepared in
|+>, coupled to every data qubit by G(theta) = diag(1, e^-it, e^-it, 1) in
``n_layers`` passes, then rotated back with H and measured in Z.

For a basis input with bits b_k the couplings only imprint a relative phase
on the readout, so the prediction is cos(sum_k s_k w_k) with s_k = +-1 and
w_k the sum of qubit k's angles over all passes. A superposition input gives
the probability-weighted average of its basis predictions.
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field

import numpy as np

from .circuit import Gate, GateKind, ParameterizedCircuit, simulate, prob_zero
from .qram import Dataset, qram_state
from .quantum import StateVector
from .training import GradientMethod, circuit_spectra, gradient, make_optimizer

# Tuned learning rates reported for the two training modes.
DEFAULT_LR = {"SAMPLING": 10**-3.93, "SUPERPOSITION": 10**-1.83}
DEFAULT_BUDGET = 60


class QnnMode(str, enum.Enum):
    SAMPLING = "SAMPLING"
    SUPERPOSITION = "SUPERPOSITION"


def class_label(class_id: int) -> int:
    """Class 0 -> +1, class 1 -> -1."""
    return 1 if class_id == 0 else -1


def build_qnn_circuit(n_data_qubits: int, n_layers: int = 2) -> ParameterizedCircuit:
    r = n_data_qubits
    gates = [Gate(GateKind.H, (r,))]
    for layer in range(n_layers):
        gates += [Gate(GateKind.G_ENTANGLE, (k, r), f"w_{layer}_{k}") for k in range(n_data_qubits)]
    gates.append(Gate(GateKind.H, (r,)))
    return ParameterizedCircuit(n_data_qubits + 1, tuple(gates))


@dataclass(eq=False)
class QnnModel:
    n_data_qubits: int = 4
    n_layers: int = 2
    params: np.ndarray | None = None

    def __post_init__(self):
        self.circuit = build_qnn_circuit(self.n_data_qubits, self.n_layers)
        n = len(self.circuit.parameter_names)
        self.params = np.zeros(n) if self.params is None else np.array(self.params, dtype=float).reshape(-1)
        if self.params.size != n:
            raise ValueError(f"expected {n} parameters, got {self.params.size}")

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return self.circuit.parameter_names

    @classmethod
    def random(cls, rng: np.random.Generator, n_data_qubits: int = 4, n_layers: int = 2) -> "QnnModel":
        # theta = 0 is a stationary point of every loss, so start away from it.
        m = cls(n_data_qubits, n_layers)
        m.params = rng.uniform(-np.pi, np.pi, size=m.params.size)
        return m

    def copy(self) -> "QnnModel":
        return QnnModel(self.n_data_qubits, self.n_layers, self.params.copy())

    def to_text(self) -> str:
        """Plain key=value lines."""
        lines = [f"n_data_qubits={self.n_data_qubits}", f"n_layers={self.n_layers}"]
        lines += [f"{k}={v:.17g}" for k, v in zip(self.parameter_names, self.params)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QnnModel":
        kv = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key=value")
            k, v = line.split("=", 1)
            kv[k.strip()] = v.strip()
        m = cls(int(kv.pop("n_data_qubits", 4)), int(kv.pop("n_layers", 2)))
        missing = [p for p in m.parameter_names if p not in kv]
        if missing:
            raise ValueError(f"missing parameters {missing}")
        m.params = np.array([float(kv[p]) for p in m.parameter_names])
        return m


def _predict(circuit: ParameterizedCircuit, params, state: StateVector) -> float:
    n = circuit.n_qubits - 1
    if state.n_qubits != n:
        raise ValueError(f"input has {state.n_qubits} qubits, model expects {n}")
    out = simulate(circuit, params, StateVector(np.kron(state.amplitudes, [1.0, 0.0])))
    return 2.0 * prob_zero(out, n) - 1.0


def qnn_predict(m: QnnModel, state: StateVector) -> float:
    """<Z> of the readout, in [-1, 1]."""
    return _predict(m.circuit, m.params, state)


def hinge_loss(pred: float, label: int) -> float:
    return max(0.0, 1.0 - label * pred)


@dataclass
class QueryCounter:
    """Simulator invocations, split into loss evaluations and gradient evaluations."""

    loss_evaluations: int = 0
    gradient_evaluations: int = 0

    @property
    def total(self) -> int:
        return self.loss_evaluations + self.gradient_evaluations


@dataclass
class QnnHistory:
    mode: QnnMode
    loss: list[float] = field(default_factory=list)
    label: list[int] = field(default_factory=list)
    params: list[np.ndarray] = field(default_factory=list)
    queries: QueryCounter = field(default_factory=QueryCounter)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "loss", "label"])
        for i, (l, y) in enumerate(zip(self.loss, self.label)):
            w.writerow([i, f"{l:.17g}", y])
        return buf.getvalue()


def _training_inputs(mode: QnnMode, d: Dataset, qram_params, budget: int, rng: np.random.Generator):
    """The (state, label) shown at each of ``budget`` iterations."""
    if mode is QnnMode.SAMPLING:
        idx = d.train_idx[rng.permutation(d.train_idx.size)]
        if budget > idx.size:
            raise ValueError(f"SAMPLING budget {budget} exceeds one epoch of {idx.size} examples")
        return [(StateVector.basis(d.n_qubits, int(d.values[i])), class_label(int(d.labels[i])))
                for i in idx[:budget]]
    if qram_params is None or any(c not in qram_params for c in (0, 1)):
        raise ValueError("SUPERPOSITION mode needs trained QRAM parameters for classes 0 and 1")
    states = {c: qram_state(d.n_qubits, c, qram_params[c]) for c in (0, 1)}
    return [(states[i % 2], class_label(i % 2)) for i in range(budget)]


def train_qnn(mode, d: Dataset, qram_params=None, budget: int = DEFAULT_BUDGET, lr: float | None = None,
              seed: int = 0, optimizer: str = "adam", model: QnnModel | None = None,
              gradient_method=GradientMethod.PARAM_SHIFT) -> tuple[QnnModel, QnnHistory]:
    """Train for ``budget`` iterations, one loss circuit and one gradient per iteration.

    SAMPLING shows one basis-encoded training example per iteration (a single
    epoch in shuffled order). SUPERPOSITION alternates the two QRAM class
    states, each carrying its class label.
    """
    mode = QnnMode(mode)
    if budget < 0:
        raise ValueError("budget must be non-negative")
    rng = np.random.default_rng(seed)
    m = model.copy() if model is not None else QnnModel.random(rng, d.n_qubits)
    if m.n_data_qubits != d.n_qubits:
        raise ValueError("model width does not match the dataset")
    lr = DEFAULT_LR[mode.value] if lr is None else lr
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    opt = make_optimizer(optimizer, lr)
    hist = QnnHistory(mode)
    spectra = circuit_spectra([m.circuit], m.parameter_names)
    for state, label in _training_inputs(mode, d, qram_params, budget, rng):
        def loss(p):
            hist.queries.gradient_evaluations += 1
            return hinge_loss(_predict(m.circuit, p, state), label)

        hist.queries.loss_evaluations += 1
        current = hinge_loss(_predict(m.circuit, m.params, state), label)
        grad = gradient(loss, m.params, gradient_method, 1e-4, spectra)
        m.params = opt.step(m.params, grad)
        hist.loss.append(current)
        hist.label.append(label)
        hist.params.append(m.params.copy())
    return m, hist


def evaluate_accuracy(m: QnnModel, d: Dataset, split: str = "test") -> float:
    """Fraction of examples with sign(prediction) == label; a zero prediction counts as wrong."""
    idx = d.split(split)
    if idx.size == 0:
        raise ValueError(f"split {split!r} is empty")
    correct = 0
    for i in idx:
        pred = qnn_predict(m, StateVector.basis(d.n_qubits, int(d.values[i])))
        correct += int(np.sign(pred) == class_label(int(d.labels[i])))
    return correct / idx.size


def lr_grid(n: int = 10, low: float = 1e-4, high: float = 1e-1) -> np.ndarray:
    return np.logspace(np.log10(low), np.log10(high), n)


def lr_grid_search(mode, d: Dataset, qram_params=None, lrs=None, seeds=(0, 1, 2),
                   budget: int = DEFAULT_BUDGET, optimizer: str = "adam"):
    """Mean train-split accuracy per learning rate; returns (best lr, [(lr, accuracy)])."""
    lrs = lr_grid() if lrs is None else np.asarray(lrs, dtype=float)
    table = []
    for lr in lrs:
        accs = [evaluate_accuracy(train_qnn(mode, d, qram_params, budget, lr, s, optimizer)[0], d, "train")
                for s in seeds]
        table.append((float(lr), float(np.mean(accs))))
    best = max(table, key=lambda row: row[1])[0]
    return best, table


def accuracy_csv(rows) -> str:
    """rows of (seed, mode, split, accuracy)."""
    lines = ["seed,mode,split,accuracy"]
    lines += [f"{s},{mode},{split},{acc:.17g}" for s, mode, split, acc in rows]
    return "\n".join(lines) + "\n"
