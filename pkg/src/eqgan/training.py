"""Minimax training engines.

Four modes share one loop:

``EQGAN``
    Generator descends V = 1 - D, discriminator ascends V, where D is the
    'same state' probability of a fidelity discriminator. With ``pretrain``
    the discriminator is first frozen at its perfect-swap binding while the
    generator converges.
``FROZEN_SWAP``
    Supervised baseline: the discriminator stays at its perfect-swap binding.
``QUGAN_FULL``
    Each iteration takes the exact Helstrom measurement T = P+(sigma - rho)
    and fully re-optimizes the generator against Tr[T sigma] - Tr[T rho].
``QUGAN_PARTIAL``
    The same game with T restricted to a rank-1 projector prepared by a
    trainable circuit, and plain gradient steps for both players.
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .circuit import CircuitError, Gate, GateKind, NoiseModel, ParameterizedCircuit, shift_spectrum, simulate
from .quantum import (
    DensityMatrix,
    HermitianOperator,
    State,
    StateVector,
    as_density,
    expectation,
    fidelity,
    helstrom_positive,
    trace_distance,
)
from .swap_test import Discriminator, DiscriminatorSpec


class TrainingMode(str, enum.Enum):
    EQGAN = "EQGAN"
    FROZEN_SWAP = "FROZEN_SWAP"
    QUGAN_FULL = "QUGAN_FULL"
    QUGAN_PARTIAL = "QUGAN_PARTIAL"


class GradientMethod(str, enum.Enum):
    FINITE_DIFF = "FINITE_DIFF"
    PARAM_SHIFT = "PARAM_SHIFT"


# ------------------------------------------------------------------ gradients

def _shift_rule(base: int, count: int) -> list[tuple[float, float]]:
    """(shift, coefficient) pairs for d/dtheta of a trig polynomial.

    The function has frequencies base * {1..count}. Shifts are placed at
    (2mu - 1) pi / (2 count) in the rescaled variable, which makes the rule
    exact for every such polynomial.
    """
    r = count
    rule = []
    for mu in range(1, 2 * r + 1):
        x = (2 * mu - 1) * np.pi / (2 * r)
        coeff = (-1) ** (mu - 1) / (4 * r * np.sin(x / 2) ** 2)
        rule.append((x / base, coeff * base))
    return rule


def gradient(f: Callable[[np.ndarray], float], theta, method=GradientMethod.FINITE_DIFF,
             fd_step: float = 1e-4, spectra: Sequence[tuple[int, int]] | None = None) -> np.ndarray:
    """Gradient of a scalar cost at ``theta``.

    FINITE_DIFF uses central differences. PARAM_SHIFT needs ``spectra``, one
    ``(base, count)`` pair per parameter as returned by
    :func:`eqgan.circuit.shift_spectrum`.
    """
    method = GradientMethod(method)
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    if method is GradientMethod.FINITE_DIFF:
        if fd_step <= 0:
            raise ValueError("fd_step must be positive")
        for i in range(theta.size):
            e = np.zeros_like(theta)
            e[i] = fd_step
            grad[i] = (f(theta + e) - f(theta - e)) / (2 * fd_step)
        return grad
    if spectra is None or len(spectra) != theta.size:
        raise ValueError("PARAM_SHIFT needs one (base, count) spectrum per parameter")
    for i, (base, count) in enumerate(spectra):
        if count == 0:
            continue
        for shift, coeff in _shift_rule(base, count):
            e = np.zeros_like(theta)
            e[i] = shift
            grad[i] += coeff * f(theta + e)
    return grad


def circuit_spectra(circuits: Sequence[ParameterizedCircuit], names: Sequence[str]) -> list[tuple[int, int]]:
    """Shift-rule spectra of ``names`` across ``circuits``; raises for RAW_UNITARY parameters."""
    return [shift_spectrum(circuits, n) for n in names]


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return theta - self.lr * grad


def make_optimizer(name: str, lr: float):
    name = name.lower()
    if name == "sgd":
        return SGD(lr)
    if name == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {name!r} (expected 'sgd' or 'adam')")


# -------------------------------------------------------------------- config

@dataclass
class TrainingConfig:
    generator: ParameterizedCircuit
    discriminator: DiscriminatorSpec
    true_state: State
    mode: TrainingMode = TrainingMode.EQGAN
    epochs_per_phase: tuple[int, int] = (1, 1)
    outer_iterations: int = 200
    learning_rate_g: float = 0.05
    learning_rate_d: float = 0.05
    gradient: GradientMethod = GradientMethod.PARAM_SHIFT
    fd_step: float = 1e-4
    noise: NoiseModel | None = None
    pretrain: bool = False
    pretrain_iterations: int = 200
    seed: int = 0
    init_generator: Sequence[float] | None = None
    #: "optimal" (perfect-swap binding), "random", or explicit values.
    init_discriminator: str | Sequence[float] = "optimal"
    optimizer: str = "sgd"
    shots: int | None = None
    #: Learning-rate multiplier applied once per outer iteration.
    lr_decay: float = 1.0

    def __post_init__(self):
        self.mode = TrainingMode(self.mode)
        self.gradient = GradientMethod(self.gradient)
        if self.learning_rate_g <= 0 or self.learning_rate_d <= 0:
            raise ValueError("learning rates must be positive")
        if self.fd_step <= 0:
            raise ValueError("fd_step must be positive")
        g, d = self.epochs_per_phase
        self.epochs_per_phase = (int(g), int(d))
        if min(self.epochs_per_phase) < 1 or self.outer_iterations < 1 or self.pretrain_iterations < 1:
            raise ValueError("iteration counts must be >= 1")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must lie in (0, 1]")
        if self.true_state.n_qubits != self.generator.n_qubits:
            raise ValueError("true_state width does not match the generator")
        if self.mode in (TrainingMode.EQGAN, TrainingMode.FROZEN_SWAP):
            if self.discriminator.n_data_qubits != self.generator.n_qubits:
                raise ValueError("discriminator data width does not match the generator")


@dataclass
class TrainHistory:
    """Per-iteration record. Fidelity is always measured against the noiseless target."""

    generator_names: tuple[str, ...] = ()
    discriminator_names: tuple[str, ...] = ()
    gen_loss: list[float] = field(default_factory=list)
    disc_loss: list[float] = field(default_factory=list)
    fidelity: list[float] = field(default_factory=list)
    gen_params: list[np.ndarray] = field(default_factory=list)
    disc_params: list[np.ndarray] = field(default_factory=list)
    phase: list[int] = field(default_factory=list)
    states: list[DensityMatrix] = field(default_factory=list, repr=False)
    #: False when the discriminator never moves (FROZEN_SWAP, QUGAN_FULL).
    discriminator_trained: bool = True

    def record(self, gen_loss, disc_loss, fid, theta_g, theta_d, phase, state=None):
        self.gen_loss.append(float(gen_loss))
        self.disc_loss.append(float(disc_loss))
        self.fidelity.append(float(fid))
        self.gen_params.append(np.array(theta_g, dtype=float))
        self.disc_params.append(np.array(theta_d, dtype=float))
        self.phase.append(int(phase))
        if state is not None:
            self.states.append(state)

    def __len__(self):
        return len(self.fidelity)

    @property
    def final_fidelity(self) -> float:
        return self.fidelity[-1]

    @property
    def best_fidelity(self) -> float:
        """Highest noiseless fidelity seen during training (minimum state error)."""
        return max(self.fidelity)

    @property
    def converged_index(self) -> int:
        """Iteration of minimum discriminator loss within the last recorded phase.

        Early stopping on the discriminator loss only means something when
        the discriminator is trained; otherwise the final iterate is used.
        """
        if not self.discriminator_trained:
            return len(self) - 1
        last = self.phase[-1]
        idx = [i for i, p in enumerate(self.phase) if p == last]
        return min(idx, key=lambda i: (self.disc_loss[i], i))

    @property
    def converged_fidelity(self) -> float:
        return self.fidelity[self.converged_index]

    def to_csv(self, fh=None) -> str:
        """CSV with columns iteration, gen_loss, disc_loss, fidelity (17 significant digits)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "gen_loss", "disc_loss", "fidelity"])
        for i, (g, d, f) in enumerate(zip(self.gen_loss, self.disc_loss, self.fidelity)):
            w.writerow([i, f"{g:.17g}", f"{d:.17g}", f"{f:.17g}"])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


# ------------------------------------------------------------------- EQ-GAN

class _FidelityGame:
    """Evaluates D(theta_d, rho(theta_g)) for the EQ-GAN and frozen modes."""

    def __init__(self, cfg: TrainingConfig):
        self.cfg = cfg
        self.gen = cfg.generator
        self.disc = Discriminator(cfg.discriminator, cfg.noise)
        self.rng = np.random.default_rng([cfg.seed, 1])
        self.g_spectra = self.d_spectra = None
        if cfg.gradient is GradientMethod.PARAM_SHIFT:
            self.g_spectra = circuit_spectra([self.gen], self.gen.parameter_names)
            self.d_spectra = circuit_spectra([self.disc.circuit], self.disc.parameter_names)

    def fake_state(self, theta_g) -> StateVector:
        return simulate(self.gen, theta_g)

    def prob_zero(self, theta_g, theta_d) -> float:
        params = dict(zip(self.disc.parameter_names, np.asarray(theta_d, dtype=float).tolist()))
        return self.disc.prob_zero(params, self.cfg.true_state, self.fake_state(theta_g),
                                   shots=self.cfg.shots, rng=self.rng)

    def value(self, theta_g, theta_d) -> float:
        return 1.0 - self.prob_zero(theta_g, theta_d)

    def grad_g(self, theta_g, theta_d) -> np.ndarray:
        return gradient(lambda t: self.value(t, theta_d), theta_g, self.cfg.gradient, self.cfg.fd_step,
                        self.g_spectra)

    def grad_d(self, theta_g, theta_d) -> np.ndarray:
        return gradient(lambda t: self.value(theta_g, t), theta_d, self.cfg.gradient, self.cfg.fd_step,
                        self.d_spectra)


def eqgan_value(theta_g, theta_d, cfg: TrainingConfig) -> float:
    """V(theta_g, theta_d) = 1 - D under ``cfg.noise``; generator minimizes, discriminator maximizes."""
    names_g, names_d = cfg.generator.parameter_names, cfg.discriminator.parameter_names
    theta_g = _as_vector(theta_g, names_g)
    theta_d = _as_vector(theta_d, names_d)
    return _FidelityGame(cfg).value(theta_g, theta_d)


def _as_vector(values, names) -> np.ndarray:
    if isinstance(values, dict):
        extra = set(values) - set(names)
        missing = [n for n in names if n not in values]
        if extra or missing:
            raise CircuitError(f"parameter mismatch: missing {missing}, unexpected {sorted(extra)}")
        return np.array([values[n] for n in names], dtype=float)
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size != len(names):
        raise CircuitError(f"expected {len(names)} parameters {list(names)}, got {arr.size}")
    return arr


def _init_generator(cfg: TrainingConfig, rng: np.random.Generator) -> np.ndarray:
    names = cfg.generator.parameter_names
    if cfg.init_generator is not None:
        return _as_vector(cfg.init_generator, names)
    return rng.uniform(0, 2 * np.pi, size=len(names))


def _init_discriminator(cfg: TrainingConfig, rng: np.random.Generator) -> np.ndarray:
    spec = cfg.discriminator
    names = spec.parameter_names
    init = cfg.init_discriminator
    if isinstance(init, str):
        if init == "optimal":
            opt = spec.optimal_params()
            return np.array([opt[n] for n in names], dtype=float)
        if init == "random":
            return rng.uniform(-np.pi, np.pi, size=len(names))
        raise ValueError(f"unknown init_discriminator {init!r}")
    return _as_vector(init, names)


def _noiseless_fidelity(cfg: TrainingConfig, rho: State) -> float:
    return fidelity(cfg.true_state, rho)


def _train_fidelity_game(cfg: TrainingConfig) -> TrainHistory:
    rng = np.random.default_rng(cfg.seed)
    game = _FidelityGame(cfg)
    theta_g = _init_generator(cfg, rng)
    theta_d = _init_discriminator(cfg, rng)
    if cfg.mode is TrainingMode.FROZEN_SWAP:
        opt = cfg.discriminator.optimal_params()
        theta_d = np.array([opt[n] for n in cfg.discriminator.parameter_names], dtype=float)
    hist = TrainHistory(cfg.generator.parameter_names, cfg.discriminator.parameter_names,
                        discriminator_trained=cfg.mode is TrainingMode.EQGAN)
    opt_g = make_optimizer(cfg.optimizer, cfg.learning_rate_g)
    opt_d = make_optimizer(cfg.optimizer, cfg.learning_rate_d)

    def snapshot(phase, td):
        d = game.prob_zero(theta_g, td)
        hist.record(1.0 - d, d, _noiseless_fidelity(cfg, game.fake_state(theta_g)), theta_g, td, phase)

    if cfg.mode is TrainingMode.EQGAN and cfg.pretrain:
        opt = cfg.discriminator.optimal_params()
        frozen = np.array([opt[n] for n in cfg.discriminator.parameter_names], dtype=float)
        losses = []
        for _ in range(cfg.pretrain_iterations):
            theta_g = opt_g.step(theta_g, game.grad_g(theta_g, frozen))
            snapshot(1, frozen)
            losses.append(hist.gen_loss[-1])
            if len(losses) > 10 and abs(losses[-1] - losses[-11]) < 1e-6:
                break

    g_steps, d_steps = cfg.epochs_per_phase
    for _ in range(cfg.outer_iterations):
        for _ in range(g_steps):
            theta_g = opt_g.step(theta_g, game.grad_g(theta_g, theta_d))
        if cfg.mode is TrainingMode.EQGAN:
            for _ in range(d_steps):
                # Ascent on V: step along -grad of -V.
                theta_d = opt_d.step(theta_d, -game.grad_d(theta_g, theta_d))
        snapshot(2, theta_d)
        _decay(opt_g, cfg.lr_decay)
        _decay(opt_d, cfg.lr_decay)
    return hist


def _decay(opt, factor):
    opt.lr *= factor


# -------------------------------------------------------------------- QuGAN

def qugan_value(T: HermitianOperator, sigma: State, rho: State) -> float:
    """Tr[T sigma] - Tr[T rho]."""
    return expectation(sigma, T) - expectation(rho, T)


def fit_generator(gen: ParameterizedCircuit, target: StateVector, start: np.ndarray,
                  rng: np.random.Generator, restarts: int = 8) -> np.ndarray:
    """Generator parameters whose output state best overlaps ``target``."""
    def loss(t):
        return 1.0 - abs(np.vdot(target.amplitudes, simulate(gen, t).amplitudes)) ** 2

    best_x, best_f = np.asarray(start, dtype=float), loss(start)
    starts = [best_x] + [rng.uniform(0, 2 * np.pi, size=best_x.size) for _ in range(restarts)]
    for x0 in starts:
        res = minimize(loss, x0, method="BFGS", options={"gtol": 1e-13})
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
        if best_f < 1e-14:
            break
    return best_x


def _train_qugan(cfg: TrainingConfig) -> TrainHistory:
    rng = np.random.default_rng(cfg.seed)
    gen = cfg.generator
    sigma = as_density(cfg.true_state)
    theta_g = _init_generator(cfg, rng)
    # Measurement circuit for the partial game: same ansatz, its own symbols.
    meas = gen.rename({n: f"t_{n}" for n in gen.parameter_names})
    partial = cfg.mode is TrainingMode.QUGAN_PARTIAL
    hist = TrainHistory(gen.parameter_names, meas.parameter_names if partial else (), discriminator_trained=partial)

    def rho_of(t) -> DensityMatrix:
        return simulate(gen, t).to_density()

    if cfg.mode is TrainingMode.QUGAN_FULL:
        for _ in range(cfg.outer_iterations):
            rho = rho_of(theta_g)
            T = helstrom_positive(sigma, rho)
            disc_val = qugan_value(T, sigma, rho)
            theta_g = _full_generator_step(cfg, T, theta_g, rng)
            rho = rho_of(theta_g)
            hist.record(qugan_value(T, sigma, rho), -disc_val, fidelity(cfg.true_state, rho), theta_g, [], 2, rho)
        return hist

    theta_t = rng.uniform(0, 2 * np.pi, size=len(meas.parameter_names))
    spectra_g = spectra_t = None
    if cfg.gradient is GradientMethod.PARAM_SHIFT:
        spectra_g = circuit_spectra([gen], gen.parameter_names)
        spectra_t = circuit_spectra([meas], meas.parameter_names)
    opt_g = make_optimizer(cfg.optimizer, cfg.learning_rate_g)
    opt_t = make_optimizer(cfg.optimizer, cfg.learning_rate_d)

    def T_of(t) -> HermitianOperator:
        return HermitianOperator(simulate(meas, t).to_density().matrix)

    def value(tg, tt) -> float:
        return qugan_value(T_of(tt), sigma, rho_of(tg))

    g_steps, d_steps = cfg.epochs_per_phase
    for _ in range(cfg.outer_iterations):
        for _ in range(d_steps):
            grad = gradient(lambda t: value(theta_g, t), theta_t, cfg.gradient, cfg.fd_step, spectra_t)
            theta_t = opt_t.step(theta_t, -grad)
        disc_val = value(theta_g, theta_t)
        for _ in range(g_steps):
            grad = gradient(lambda t: value(t, theta_t), theta_g, cfg.gradient, cfg.fd_step, spectra_g)
            theta_g = opt_g.step(theta_g, grad)
        rho = rho_of(theta_g)
        hist.record(value(theta_g, theta_t), -disc_val, fidelity(cfg.true_state, rho), theta_g, theta_t, 2, rho)
    return hist


def _full_generator_step(cfg: TrainingConfig, T: HermitianOperator, theta_g: np.ndarray,
                         rng: np.random.Generator) -> np.ndarray:
    """Maximize Tr[T rho(theta_g)] to convergence."""
    gen = cfg.generator
    w, v = np.linalg.eigh(T.matrix)
    if w.max() < 1e-12:
        return theta_g  # T = 0: every generator state is optimal.
    if gen.n_qubits == 1:
        # Closed form: the best pure state is the top eigenvector of T.
        target = StateVector.from_unnormalized(v[:, -1])
        return fit_generator(gen, target, theta_g, rng)
    spectra = circuit_spectra([gen], gen.parameter_names) if cfg.gradient is GradientMethod.PARAM_SHIFT else None

    def cost(t):
        return -expectation(simulate(gen, t).to_density(), T)

    prev = cost(theta_g)
    for _ in range(100_000):
        theta_g = theta_g - cfg.learning_rate_g * gradient(cost, theta_g, cfg.gradient, cfg.fd_step, spectra)
        cur = cost(theta_g)
        if abs(prev - cur) < 1e-8:
            break
        prev = cur
    return theta_g


def period_two_residual(hist: TrainHistory, start: int = 1) -> float:
    """max_k trace distance between iterates k and k+2 for k >= ``start``."""
    states = hist.states
    return max(trace_distance(states[k], states[k + 2]) for k in range(start, len(states) - 2))


# --------------------------------------------------------------------- entry

def train(cfg: TrainingConfig) -> TrainHistory:
    """Run the configured minimax game and return its full history."""
    if cfg.mode in (TrainingMode.QUGAN_FULL, TrainingMode.QUGAN_PARTIAL):
        return _train_qugan(cfg)
    return _train_fidelity_game(cfg)


def vanishing_gradient_instance() -> tuple[ParameterizedCircuit, StateVector, np.ndarray]:
    """Generator RX(alpha) then RZ(beta), data with both angles at pi/2, generator at zero."""
    gen = ParameterizedCircuit(1, (
        Gate(GateKind.RX, (0,), "alpha"),
        Gate(GateKind.RZ, (0,), "beta"),
    ))
    data = simulate(gen, {"alpha": np.pi / 2, "beta": np.pi / 2})
    return gen, data, np.zeros(2)


def fidelity_loss(gen: ParameterizedCircuit, target: StateVector) -> Callable[[np.ndarray], float]:
    """1 - |<target|gen(theta)>|^2."""
    return lambda t: 1.0 - abs(np.vdot(target.amplitudes, simulate(gen, t).amplitudes)) ** 2


def mode_collapse_instance() -> tuple[ParameterizedCircuit, StateVector, np.ndarray]:
    """Two equatorial states pi/3 apart, where exact Helstrom training oscillates.

    The generator RY(a) then RZ(b) has Bloch vector (sin a cos b, sin a sin b, cos a);
    the target sits at azimuth +pi/6 and the generator starts at -pi/6.
    """
    gen = ParameterizedCircuit(1, (
        Gate(GateKind.RY, (0,), "a"),
        Gate(GateKind.RZ, (0,), "b"),
    ))
    target = simulate(gen, {"a": np.pi / 2, "b": np.pi / 6})
    return gen, target, np.array([np.pi / 2, -np.pi / 6])
