"""A QuGAN that never settles versus an EQ-GAN that does.

The full QuGAN plays the Helstrom measurement against a generator that
jumps to its best response, and the two states trade places forever at
overlap 3/4 with the target. EQ-GAN on the same instance converges.
"""
from eqgan.swap_test import DiscriminatorSpec
from eqgan.training import TrainingConfig, mode_collapse_instance, period_two_residual, train

gen, sigma, init = mode_collapse_instance()
spec = DiscriminatorSpec("ANCILLA_EXP_SWAP", 1)

qugan = train(TrainingConfig(gen, spec, sigma, mode="QUGAN_FULL", init_generator=init, outer_iterations=10))
print("QuGAN fidelity per iteration:", " ".join(f"{f:.3f}" for f in qugan.fidelity))
print(f"period-2 residual: {period_two_residual(qugan):.1e}")

eq = train(TrainingConfig(gen, spec, sigma, mode="EQGAN", init_generator=init, outer_iterations=200))
print("EQ-GAN fidelity every 25 iterations:", " ".join(f"{f:.3f}" for f in eq.fidelity[::25]))
print(f"EQ-GAN final fidelity: {eq.final_fidelity:.4f}")
