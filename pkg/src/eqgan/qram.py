"""Variational QRAM for a two-peak classical dataset.

A class's empirical histogram {P_i} over 2^n bins is loaded as the state
sum_i sqrt(P_i)|i>. The exact state is written into the simulator directly;
a shallow "peak" ansatz is then trained with the EQ-GAN to approximate it.

Peak ansatz. Every free qubit gets an RY rotation, then a *mirror* qubit m
controls (on |0>) a CNOT onto each later qubit. The later qubits carry a
product state, i.e. an exponential profile over their bits, and the mirror
reflects that profile about the centre between bins ...0111 and ...1000 of
the sub-register, giving a symmetric peak built from two concatenated
exponentials with one two-qubit gate per mirrored qubit. A trailing RY on
each mirrored qubit skews the two halves so that the peak need not be
exactly symmetric (small empirical samples rarely are). Class 0 mirrors at
qubit 0 (peak centred at 2^(n-1) - 1/2). Class 1 fixes qubit 0 to |1> with
an X gate and mirrors at qubit 1, which offsets the peak to
2^(n-1) + 2^(n-2) - 1/2.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .circuit import Gate, GateKind, ParameterizedCircuit, simulate
from .quantum import StateVector, fidelity_pure
from .swap_test import DiscriminatorForm, DiscriminatorSpec
from .training import TrainingConfig, TrainingMode, train

DEFAULT_N_QUBITS = 4
DEFAULT_MEANS = (7.5, 11.5)
DEFAULT_STD = 1.5


@dataclass(frozen=True, eq=False)
class Dataset:
    values: np.ndarray
    labels: np.ndarray
    n_qubits: int
    train_idx: np.ndarray
    test_idx: np.ndarray

    def split(self, name: str) -> np.ndarray:
        if name == "train":
            return self.train_idx
        if name == "test":
            return self.test_idx
        if name == "all":
            return np.arange(self.values.size)
        raise ValueError(f"unknown split {name!r}")

    def class_values(self, class_id: int, split: str = "train") -> np.ndarray:
        idx = self.split(split)
        return self.values[idx][self.labels[idx] == class_id]

    def histogram(self, class_id: int, split: str = "train") -> np.ndarray:
        return np.bincount(self.class_values(class_id, split), minlength=2**self.n_qubits)

    def to_csv(self, fh=None) -> str:
        """Columns value, label, split."""
        split = np.empty(self.values.size, dtype=object)
        split[self.train_idx] = "train"
        split[self.test_idx] = "test"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "label", "split"])
        for v, lab, s in zip(self.values, self.labels, split):
            w.writerow([int(v), int(lab), s])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str, n_qubits: int = DEFAULT_N_QUBITS) -> "Dataset":
        rows = list(csv.DictReader(io.StringIO(text)))
        values = np.array([int(r["value"]) for r in rows], dtype=int)
        labels = np.array([int(r["label"]) for r in rows], dtype=int)
        split = np.array([r["split"] for r in rows])
        if values.size and (values.min() < 0 or values.max() >= 2**n_qubits):
            raise ValueError(f"values out of range for {n_qubits} qubits")
        return cls(values, labels, n_qubits, np.flatnonzero(split == "train"), np.flatnonzero(split == "test"))


def histogram_csv(d: Dataset, split: str = "train") -> str:
    """Per-bin counts of both classes: columns bin, count_class0, count_class1."""
    h0, h1 = d.histogram(0, split), d.histogram(1, split)
    lines = ["bin,count_class0,count_class1"]
    lines += [f"{i},{a},{b}" for i, (a, b) in enumerate(zip(h0, h1))]
    return "\n".join(lines) + "\n"


def sample_two_peak(n_qubits: int = DEFAULT_N_QUBITS, class0_mean: float = DEFAULT_MEANS[0],
                    class0_std: float = DEFAULT_STD, class1_mean: float = DEFAULT_MEANS[1],
                    class1_std: float = DEFAULT_STD, n_samples: int = 120, seed: int = 0) -> Dataset:
    """Draw a balanced two-class dataset from two normals, binned to 2^n integers.

    Each class gets n_samples / 2 draws; each class is split in half between
    train and test, so both splits are balanced.
    """
    top = 2**n_qubits - 1
    for name, mean, std in (("class0", class0_mean, class0_std), ("class1", class1_mean, class1_std)):
        if not std > 0:
            raise ValueError(f"{name} std must be positive, got {std}")
        if not 0 <= mean <= top:
            raise ValueError(f"{name} mean {mean} outside bin range [0, {top}]")
    if n_samples % 4:
        raise ValueError("n_samples must be divisible by 4 for balanced splits")
    rng = np.random.default_rng(seed)
    per_class = n_samples // 2
    values, labels, train_idx, test_idx = [], [], [], []
    for label, (mean, std) in enumerate(((class0_mean, class0_std), (class1_mean, class1_std))):
        draws = rng.normal(mean, std, size=per_class)
        bins = np.clip(np.floor(draws + 0.5), 0, top).astype(int)
        offset = label * per_class
        order = rng.permutation(per_class)
        train_idx += (offset + order[: per_class // 2]).tolist()
        test_idx += (offset + order[per_class // 2:]).tolist()
        values.append(bins)
        labels.append(np.full(per_class, label))
    return Dataset(np.concatenate(values), np.concatenate(labels), n_qubits,
                   np.sort(train_idx), np.sort(test_idx))


def empirical_superposition(d: Dataset, class_id: int, split: str = "train") -> StateVector:
    """sum_i sqrt(count_i / N_class) |i>."""
    counts = d.histogram(class_id, split)
    total = counts.sum()
    if total == 0:
        raise ValueError(f"class {class_id} has no samples in split {split!r}")
    return StateVector(np.sqrt(counts / total))


def _mirror_qubit(class_id: int) -> int:
    if class_id not in (0, 1):
        raise ValueError(f"class_id must be 0 or 1, got {class_id}")
    return class_id


def build_peak_ansatz(n_qubits: int, class_id: int = 0) -> ParameterizedCircuit:
    if n_qubits < 2:
        raise ValueError("peak ansatz needs at least 2 qubits")
    m = _mirror_qubit(class_id)
    if m >= n_qubits - 1:
        raise ValueError(f"class {class_id} peak needs more than {n_qubits} qubits")
    gates = [Gate(GateKind.X, (q,)) for q in range(m)]
    gates += [Gate(GateKind.RY, (q,), f"theta_{q}") for q in range(m, n_qubits)]
    gates.append(Gate(GateKind.X, (m,)))
    gates += [Gate(GateKind.CNOT, (m, q)) for q in range(m + 1, n_qubits)]
    gates.append(Gate(GateKind.X, (m,)))
    gates += [Gate(GateKind.RY, (q,), f"skew_{q}") for q in range(m + 1, n_qubits)]
    return ParameterizedCircuit(n_qubits, tuple(gates))


def qram_state(n_qubits: int, class_id: int, params) -> StateVector:
    return simulate(build_peak_ansatz(n_qubits, class_id), params)


def qram_config(d: Dataset, class_id: int, **overrides) -> TrainingConfig:
    """Default EQ-GAN configuration for fitting one class."""
    gen = build_peak_ansatz(d.n_qubits, class_id)
    rng = np.random.default_rng(overrides.get("seed", 0))
    base = dict(
        generator=gen,
        discriminator=DiscriminatorSpec(DiscriminatorForm.ANCILLA_EXP_SWAP, d.n_qubits),
        true_state=empirical_superposition(d, class_id),
        mode=TrainingMode.EQGAN,
        outer_iterations=150,
        learning_rate_g=0.5,
        learning_rate_d=0.05,
        pretrain=True,
        pretrain_iterations=150,
        init_generator=rng.normal(0.0, 0.1, size=len(gen.parameter_names)),
    )
    base.update(overrides)
    return TrainingConfig(**base)


def train_qram(d: Dataset, class_id: int, cfg: TrainingConfig | None = None):
    """Train the peak ansatz with the EQ-GAN; returns (best params, fidelity to the exact superposition)."""
    if cfg is None:
        cfg = qram_config(d, class_id)
    if cfg.generator.n_qubits != d.n_qubits:
        raise ValueError("ansatz width does not match the dataset")
    target = empirical_superposition(d, class_id)
    cfg = replace(cfg, true_state=target, mode=TrainingMode.EQGAN)
    hist = train(cfg)
    best = int(np.argmax(hist.fidelity))
    params = dict(zip(cfg.generator.parameter_names, hist.gen_params[best].tolist()))
    return params, fidelity_pure(target, simulate(cfg.generator, params))


def sample_counts(state: StateVector, shots: int, seed: int = 0) -> np.ndarray:
    """Histogram of computational-basis samples."""
    rng = np.random.default_rng(seed)
    p = state.probabilities()
    return rng.multinomial(shots, p / p.sum())


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float) / np.sum(p)
    q = np.asarray(q, dtype=float) / np.sum(q)
    return float(0.5 * np.abs(p - q).sum())
