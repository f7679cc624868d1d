"""Coherent Z errors after CZ gates: frozen swap test vs adversarial discriminator.

Uses the same default config as ``eqgan run`` with experiment
EQGAN_VS_FROZEN_NOISY, but only three seeds to keep it quick.
"""
import tempfile
from pathlib import Path

from eqgan import config
from eqgan.experiments import run

cfg = config.load("experiment: EQGAN_VS_FROZEN_NOISY\nseeds: [0, 1, 2]\n")
out = Path(tempfile.mkdtemp()) / "noisy"
print(run(cfg, out).read_text())
print((out / "metrics.csv").read_text())
