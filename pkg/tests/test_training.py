import numpy as np
import pytest

from eqgan.circuit import CircuitError, Gate, GateKind, NoiseModel, ParameterizedCircuit, prob_zero, simulate
from eqgan.quantum import StateVector, fidelity, trace_distance
from eqgan.swap_test import DiscriminatorSpec
from eqgan.training import (
    GradientMethod,
    TrainingConfig,
    _FidelityGame,
    circuit_spectra,
    eqgan_value,
    fidelity_loss,
    gradient,
    mode_collapse_instance,
    period_two_residual,
    train,
    vanishing_gradient_instance,
)

ANC = DiscriminatorSpec("ANCILLA_EXP_SWAP", 1)


def universal_1q():
    return ParameterizedCircuit(1, (Gate(GateKind.RY, (0,), "a"), Gate(GateKind.RZ, (0,), "b")))


def cfg(**kw):
    gen = kw.pop("generator", universal_1q())
    target = kw.pop("true_state", simulate(gen, [1.1, -0.4]))
    return TrainingConfig(gen, kw.pop("discriminator", ANC), target, **kw)


# ------------------------------------------------------------------ value

def test_eqgan_value_examples():
    c = cfg()
    target_params = [1.1, -0.4]
    assert eqgan_value(target_params, [np.pi / 2], c) == pytest.approx(0.0, abs=1e-12)
    assert eqgan_value([0.3, 2.0], [0.0], c) == pytest.approx(0.0, abs=1e-12)
    # |0> vs |1>: F = 0.
    c1 = cfg(true_state=StateVector([0, 1]))
    assert eqgan_value([0.0, 0.0], [np.pi / 2], c1) == pytest.approx(0.5, abs=1e-12)


def test_eqgan_value_symbol_mismatch():
    with pytest.raises(CircuitError):
        eqgan_value({"a": 0.0}, [np.pi / 2], cfg())
    with pytest.raises(CircuitError):
        eqgan_value([0.0, 0.0], [0.1, 0.2], cfg())


# --------------------------------------------------------------- gradient

def test_gradient_of_constant_is_zero():
    for m in GradientMethod:
        g = gradient(lambda t: 3.0, np.ones(3), m, spectra=[(1, 1)] * 3)
        assert np.allclose(g, 0)


def test_gradient_of_rx_prob_zero():
    c = ParameterizedCircuit(1, (Gate(GateKind.RX, (0,), "t"),))

    def f(t):
        return prob_zero(simulate(c, t), 0)

    spectra = circuit_spectra([c], c.parameter_names)
    assert gradient(f, [np.pi / 2], "PARAM_SHIFT", spectra=spectra)[0] == pytest.approx(-0.5, abs=1e-14)
    assert gradient(f, [np.pi / 2], "FINITE_DIFF", 1e-5)[0] == pytest.approx(-0.5, abs=1e-9)


def test_param_shift_handles_shared_and_even_frequency_parameters():
    # 'a' drives two rotations (frequencies up to 2); 'b' drives an exp-swap (frequency 2).
    c = ParameterizedCircuit(3, (
        Gate(GateKind.RY, (0,), "a"), Gate(GateKind.RX, (1,), "a"), Gate(GateKind.H, (2,)),
        Gate(GateKind.CSWAP_EXP, (2, 0, 1), "b"), Gate(GateKind.H, (2,)),
    ))

    def f(t):
        return prob_zero(simulate(c, t), 2)

    spectra = circuit_spectra([c], c.parameter_names)
    t = np.array([0.7, 0.4])
    assert np.allclose(gradient(f, t, "PARAM_SHIFT", spectra=spectra), gradient(f, t, "FINITE_DIFF", 1e-6), atol=1e-8)


def test_param_shift_rejects_raw_unitary():
    raw = ParameterizedCircuit(1, (Gate(GateKind.RAW_UNITARY, (0,), "h", np.diag([1.0, -1.0])),))
    with pytest.raises(CircuitError):
        circuit_spectra([raw], ["h"])


def test_param_shift_needs_spectra():
    with pytest.raises(ValueError):
        gradient(lambda t: 0.0, [0.0], "PARAM_SHIFT")


# ----------------------------------------------------------------- config

@pytest.mark.parametrize("bad", [
    dict(learning_rate_g=0.0), dict(learning_rate_d=-1.0), dict(fd_step=0.0),
    dict(outer_iterations=0), dict(epochs_per_phase=(0, 1)), dict(pretrain_iterations=0),
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        cfg(**bad)


def test_config_width_mismatch():
    with pytest.raises(ValueError):
        cfg(discriminator=DiscriminatorSpec("ANCILLA_EXP_SWAP", 2))
    with pytest.raises(ValueError):
        cfg(true_state=StateVector.basis(2, 0))


# ------------------------------------------------------------------ train

def test_training_is_deterministic():
    noisy = cfg(discriminator=DiscriminatorSpec("CZ_WITH_PHASES", 1), noise=NoiseModel(0.3, 0.05, seed=2),
                outer_iterations=30, gradient="FINITE_DIFF", pretrain=True, pretrain_iterations=20)
    assert train(noisy).to_csv() == train(noisy).to_csv()


def test_history_csv_format():
    h = train(cfg(outer_iterations=3))
    lines = h.to_csv().splitlines()
    assert lines[0] == "iteration,gen_loss,disc_loss,fidelity"
    assert len(lines) == 4
    row = lines[1].split(",")
    assert float(row[1]) == h.gen_loss[0] and float(row[3]) == h.fidelity[0]


def test_frozen_swap_noiseless_converges():
    rng = np.random.default_rng(8)
    target = StateVector.random(1, rng)
    h = train(cfg(true_state=target, mode="FROZEN_SWAP", learning_rate_g=0.5, outer_iterations=300, seed=1))
    assert h.final_fidelity >= 1 - 1e-4
    assert all(np.allclose(d, np.pi / 2) for d in h.disc_params)
    assert h.converged_index == len(h) - 1


def test_fidelity_metric_is_noiseless():
    noisy = cfg(discriminator=DiscriminatorSpec("CZ_WITH_PHASES", 1), noise=NoiseModel(0.3, 0.0),
                mode="FROZEN_SWAP", outer_iterations=5)
    h = train(noisy)
    for theta, f in zip(h.gen_params, h.fidelity):
        assert f == pytest.approx(fidelity(noisy.true_state, simulate(noisy.generator, theta)), abs=1e-12)


def test_pretrain_phase_freezes_discriminator():
    c = cfg(true_state=StateVector.random(1, np.random.default_rng(0)), pretrain=True, pretrain_iterations=50,
            outer_iterations=5, learning_rate_g=0.3, seed=3)
    h = train(c)
    phase1 = [i for i, p in enumerate(h.phase) if p == 1]
    assert 0 < len(phase1) <= 50
    assert all(np.allclose(h.disc_params[i], np.pi / 2) for i in phase1)
    assert h.phase[-5:] == [2] * 5


def test_nash_fixed_point_gradients_vanish():
    c = cfg()
    game = _FidelityGame(c)
    tg, td = np.array([1.1, -0.4]), np.array([np.pi / 2])
    assert np.max(np.abs(game.grad_g(tg, td))) < 1e-7
    assert np.max(np.abs(game.grad_d(tg, td))) < 1e-7


def test_discriminator_ascent_finds_half_pi():
    game = _FidelityGame(cfg())
    tg = np.array([0.2, 0.9])  # F < 1
    for start in (0.2, 2.9):
        td = np.array([start])
        for _ in range(2000):
            td = td + 0.5 * game.grad_d(tg, td)
        assert abs(td[0] - np.pi / 2) < 1e-2


# ------------------------------------------------------------------ QuGAN

def test_qugan_full_oscillates_at_three_quarters():
    gen, sigma, init = mode_collapse_instance()
    h = train(TrainingConfig(gen, ANC, sigma, mode="QUGAN_FULL", init_generator=init, outer_iterations=12))
    assert period_two_residual(h) < 1e-6
    assert np.allclose(h.fidelity, 0.75, atol=1e-6)
    # Consecutive iterates are the two partners (1 + Y)/2 and the initial state,
    # whose Bloch vectors meet at 120 degrees.
    assert fidelity(h.states[1], h.states[2]) == pytest.approx(0.25, abs=1e-6)
    assert trace_distance(h.states[0], h.states[1]) > 0.4
    assert h.converged_index == len(h) - 1


def test_eqgan_converges_on_mode_collapse_instance():
    gen, sigma, init = mode_collapse_instance()
    h = train(TrainingConfig(gen, ANC, sigma, mode="EQGAN", init_generator=init, outer_iterations=200))
    assert h.final_fidelity >= 0.99


def test_qugan_partial_runs_and_records_measurement_parameters():
    gen, sigma, init = mode_collapse_instance()
    h = train(TrainingConfig(gen, ANC, sigma, mode="QUGAN_PARTIAL", init_generator=init, outer_iterations=10))
    assert h.discriminator_names == ("t_a", "t_b")
    assert len(h) == 10


# -------------------------------------------------------- vanishing gradient

def test_vanishing_gradient_instance():
    gen, data, init = vanishing_gradient_instance()
    assert gen.parameter_names == ("alpha", "beta")
    assert np.array_equal(init, [0.0, 0.0])
    loss = fidelity_loss(gen, data)
    assert np.linalg.norm(gradient(loss, init, "FINITE_DIFF", 1e-5)) < 1e-8
    spectra = circuit_spectra([gen], gen.parameter_names)
    assert np.linalg.norm(gradient(loss, init, "PARAM_SHIFT", spectra=spectra)) < 1e-12


def test_frozen_swap_stuck_at_zero_gradient_start():
    gen, data, init = vanishing_gradient_instance()
    spec = DiscriminatorSpec("CZ_WITH_PHASES", 1)
    h = train(TrainingConfig(gen, spec, data, mode="FROZEN_SWAP", init_generator=init, learning_rate_g=0.2))
    assert max(abs(f - h.fidelity[0]) for f in h.fidelity) < 1e-6
    assert h.fidelity[0] == pytest.approx(0.5)


def test_zero_gradient_start_is_a_saddle():
    # The first derivatives vanish at (0, 0) but the mixed second derivative does not.
    gen, data, init = vanishing_gradient_instance()
    f, h = fidelity_loss(gen, data), 1e-3
    mixed = (f(init + [h, h]) - f(init + [h, -h]) - f(init + [-h, h]) + f(init + [-h, -h])) / (4 * h * h)
    assert mixed == pytest.approx(-0.5, abs=1e-5)
