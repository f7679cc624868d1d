"""EQ-GAN simulation: swap-test discriminators, minimax training, variational QRAM and a QNN classifier."""
from .circuit import (
    CircuitError,
    Gate,
    GateKind,
    NoiseModel,
    ParameterizedCircuit,
    apply_noise,
    circuit_unitary,
    prob_zero,
    simulate,
)
from .qnn import QnnMode, QnnModel, evaluate_accuracy, qnn_predict, train_qnn
from .qram import Dataset, build_peak_ansatz, empirical_superposition, qram_state, sample_two_peak, train_qram
from .quantum import (
    DensityMatrix,
    HermitianOperator,
    QuantumError,
    StateVector,
    fidelity,
    helstrom_positive,
    trace_distance,
)
from .swap_test import Discriminator, DiscriminatorForm, DiscriminatorSpec, discriminator_prob_zero
from .training import GradientMethod, TrainHistory, TrainingConfig, TrainingMode, gradient, train

__version__ = "0.1.0"

__all__ = [
    "CircuitError", "Gate", "GateKind", "NoiseModel", "ParameterizedCircuit", "apply_noise", "circuit_unitary",
    "prob_zero", "simulate",
    "QnnMode", "QnnModel", "evaluate_accuracy", "qnn_predict", "train_qnn",
    "Dataset", "build_peak_ansatz", "empirical_superposition", "qram_state", "sample_two_peak", "train_qram",
    "DensityMatrix", "HermitianOperator", "QuantumError", "StateVector", "fidelity", "helstrom_positive",
    "trace_distance",
    "Discriminator", "DiscriminatorForm", "DiscriminatorSpec", "discriminator_prob_zero",
    "GradientMethod", "TrainHistory", "TrainingConfig", "TrainingMode", "gradient", "train",
]
