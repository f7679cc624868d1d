import numpy as np
import pytest

from eqgan.circuit import CircuitError, GateKind, NoiseModel
from eqgan.quantum import DensityMatrix, StateVector, fidelity, fidelity_pure
from eqgan.swap_test import (
    Discriminator,
    DiscriminatorForm,
    DiscriminatorSpec,
    build_discriminator,
    discriminator_prob_zero,
    swap_test_value,
)

FORMS = list(DiscriminatorForm)
ZERO = StateVector([1, 0])
ONE = StateVector([0, 1])


def spec(form, n=1):
    return DiscriminatorSpec(form, n)


def test_widths_and_parameters():
    s = spec("CZ_WITH_PHASES", 3)
    assert s.width == 6
    assert s.parameter_names == ("phi_0_f", "phi_0_t", "phi_1_f", "phi_1_t", "phi_2_f", "phi_2_t")
    assert spec("ANCILLA_EXP_SWAP", 2).width == 5
    assert spec("DESTRUCTIVE", 2).parameter_names == ()
    with pytest.raises(CircuitError):
        DiscriminatorSpec("DESTRUCTIVE", 0)


def test_cz_form_has_phase_after_every_cz():
    c = build_discriminator(spec("CZ_WITH_PHASES", 2))
    kinds = [g.kind for g in c.gates]
    for i, k in enumerate(kinds):
        if k is GateKind.CZ:
            follow = c.gates[i + 1:i + 3]
            assert {g.qubits[0] for g in follow} == set(c.gates[i].qubits)
            assert all(g.kind is GateKind.RZ and isinstance(g.param, str) for g in follow)


def test_documented_examples():
    rng = np.random.default_rng(0)
    a, b = StateVector.random(1, rng), StateVector.random(1, rng)
    assert discriminator_prob_zero(spec("ANCILLA_EXP_SWAP"), {"theta_d": 0.0}, a, b) == pytest.approx(1.0)
    assert discriminator_prob_zero(spec("ANCILLA_EXP_SWAP"), {"theta_d": np.pi / 4}, ZERO, ONE) == pytest.approx(0.75)
    assert discriminator_prob_zero(spec("DESTRUCTIVE"), {}, ZERO, ZERO) == pytest.approx(1.0)
    assert discriminator_prob_zero(spec("DESTRUCTIVE"), {}, ZERO, ONE) == pytest.approx(0.5)


@pytest.mark.parametrize("form", FORMS)
@pytest.mark.parametrize("n", [1, 2, 3])
def test_perfect_swap_oracle(form, n):
    rng = np.random.default_rng(10 + n)
    s = spec(form, n)
    d = Discriminator(s)
    for _ in range(20):
        a, b = StateVector.random(n, rng), StateVector.random(n, rng)
        expected = 0.5 * (1 + fidelity_pure(a, b))
        assert abs(d.prob_zero(s.optimal_params(), a, b) - expected) < 1e-9


def test_destructive_equals_ancilla_at_half_pi():
    rng = np.random.default_rng(4)
    for n in (1, 2):
        for _ in range(10):
            a, b = StateVector.random(n, rng), StateVector.random(n, rng)
            p_anc = discriminator_prob_zero(spec("ANCILLA_EXP_SWAP", n), {"theta_d": np.pi / 2}, a, b)
            p_des = discriminator_prob_zero(spec("DESTRUCTIVE", n), {}, a, b)
            assert abs(p_anc - p_des) < 1e-9


def test_exp_swap_formula_on_registers():
    rng = np.random.default_rng(9)
    for n in (1, 2, 3):
        s = spec("ANCILLA_EXP_SWAP", n)
        d = Discriminator(s)
        for _ in range(10):
            a, b = StateVector.random(n, rng), StateVector.random(n, rng)
            t = rng.uniform(0, np.pi)
            assert abs(d.prob_zero({"theta_d": t}, a, b) - swap_test_value(fidelity_pure(a, b), t)) < 1e-9


def test_unique_discriminator_optimum_by_grid():
    for f in (0.0, 0.3, 0.9):
        grid = np.arange(0, np.pi + 1e-3, 1e-3)
        vals = swap_test_value(f, grid)
        assert abs(grid[np.argmin(vals)] - np.pi / 2) < 1e-3


def test_monotone_in_fidelity_at_half_pi():
    fs = np.linspace(0, 1, 50)
    assert np.all(np.diff(swap_test_value(fs)) > 0)


def test_mixed_inputs_follow_swap_formula():
    rng = np.random.default_rng(1)
    s = spec("ANCILLA_EXP_SWAP", 1)
    for _ in range(10):
        rho, sigma = DensityMatrix.random(1, rng), DensityMatrix.random(1, rng)
        # For mixed inputs the swap test measures Tr[rho sigma], not the Uhlmann fidelity.
        overlap = np.real(np.trace(rho.matrix @ sigma.matrix))
        assert discriminator_prob_zero(s, s.optimal_params(), sigma, rho) == pytest.approx(0.5 * (1 + overlap))
        assert overlap <= fidelity(rho, sigma) + 1e-12


def test_width_mismatch_raises():
    with pytest.raises(CircuitError):
        discriminator_prob_zero(spec("DESTRUCTIVE", 2), {}, ZERO, ONE)


def test_noise_breaks_frozen_test_and_phases_can_repair_true_side():
    s = spec("CZ_WITH_PHASES", 1)
    noise = NoiseModel(0.3, 0.0)
    plus = StateVector(np.array([1, 1]) / np.sqrt(2))
    i_plus = StateVector(np.array([1, 1j]) / np.sqrt(2))
    ideal = discriminator_prob_zero(s, s.optimal_params(), plus, i_plus)
    noisy = discriminator_prob_zero(s, s.optimal_params(), plus, i_plus, noise=noise)
    assert abs(noisy - ideal) > 1e-3
    # Undoing the coherent over-rotations restores the ideal statistics.
    undo = {"phi_0_f": -0.3, "phi_0_t": -0.3}
    assert discriminator_prob_zero(s, undo, plus, i_plus, noise=noise) == pytest.approx(ideal, abs=1e-12)


def test_shots_are_seeded_binomial():
    s = spec("ANCILLA_EXP_SWAP", 1)
    p = [discriminator_prob_zero(s, s.optimal_params(), ZERO, ONE, shots=1000, rng=np.random.default_rng(3))
         for _ in range(2)]
    assert p[0] == p[1]
    assert abs(p[0] - 0.5) < 0.06
