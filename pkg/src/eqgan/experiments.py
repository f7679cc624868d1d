"""Experiment runners behind the command line.

Each runner takes a resolved config and an output directory, writes its CSV
histories, and returns per-seed metric rows plus summary lines. ``run``
wraps a runner with the aggregate summary and the manifest.
"""
from __future__ import annotations

import hashlib
import json
import platform
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import config as config_mod
from .circuit import NoiseModel, simulate
from .qnn import QnnMode, QnnModel, accuracy_csv, evaluate_accuracy, lr_grid_search, train_qnn
from .qram import (
    Dataset,
    empirical_superposition,
    histogram_csv,
    qram_config,
    qram_state,
    sample_counts,
    sample_two_peak,
    total_variation,
)
from .quantum import StateVector, fidelity
from .swap_test import DiscriminatorForm, DiscriminatorSpec
from .training import (
    TrainingConfig,
    TrainingMode,
    fidelity_loss,
    gradient,
    mode_collapse_instance,
    period_two_residual,
    train,
    vanishing_gradient_instance,
)


def _write(out: Path, name: str, text: str) -> str:
    (out / name).parent.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    return name


def _training_kwargs(cfg: dict) -> dict:
    t = cfg["training"]
    return dict(
        outer_iterations=t["outer_iterations"],
        learning_rate_g=t["learning_rate_g"],
        learning_rate_d=t["learning_rate_d"],
        epochs_per_phase=tuple(t["epochs_per_phase"]),
        gradient=t["gradient"],
        fd_step=t["fd_step"],
        pretrain=t["pretrain"],
        pretrain_iterations=t["pretrain_iterations"],
        lr_decay=t["lr_decay"],
        optimizer=t["optimizer"],
    )


def _noise(cfg: dict, seed: int) -> NoiseModel | None:
    n = cfg["noise"]
    if not n["enabled"]:
        return None
    return NoiseModel(n["rz_bias_mean"], n["rz_bias_std"], seed=seed)


def stats(values) -> dict:
    """median/min/max plus mean and a two-standard-deviation spread."""
    v = np.asarray(values, dtype=float)
    two_sigma = 2 * v.std(ddof=1) if v.size > 1 else 0.0
    return {"median": float(np.median(v)), "min": float(v.min()), "max": float(v.max()),
            "mean": float(v.mean()), "two_sigma": float(two_sigma)}


def _stat_line(name: str, values) -> str:
    s = stats(values)
    return (f"{name}: median={s['median']:.6f} min={s['min']:.6f} max={s['max']:.6f} "
            f"mean={s['mean']:.6f} +/- {s['two_sigma']:.6f} (2 sigma, n={len(values)})")


# ---------------------------------------------------------------- runners

def run_mode_collapse(cfg: dict, out: Path, files: list):
    gen, sigma, init = mode_collapse_instance()
    spec = DiscriminatorSpec(DiscriminatorForm.ANCILLA_EXP_SWAP, 1)
    rows, summary = [], []
    for seed in cfg["seeds"]:
        base = dict(generator=gen, discriminator=spec, true_state=sigma, init_generator=init, seed=seed,
                    **_training_kwargs(cfg))
        full = train(TrainingConfig(**{**base, "mode": TrainingMode.QUGAN_FULL,
                                       "outer_iterations": cfg["mode_collapse"]["full_iterations"]}))
        lr = cfg["mode_collapse"]["partial_learning_rate"]
        partial = train(TrainingConfig(**{**base, "mode": TrainingMode.QUGAN_PARTIAL,
                                          "learning_rate_g": lr, "learning_rate_d": lr}))
        eq = train(TrainingConfig(**{**base, "mode": TrainingMode.EQGAN}))
        for name, h in (("qugan_full", full), ("qugan_partial", partial), ("eqgan", eq)):
            files.append(_write(out, f"seed{seed}/{name}.csv", h.to_csv()))
        residual = period_two_residual(full) if len(full) >= 4 else float("nan")
        plateau = full.fidelity[1:]
        rows.append({"seed": seed, "period_two_residual": residual,
                     "plateau_min": min(plateau), "plateau_max": max(plateau),
                     "qugan_partial_final": partial.final_fidelity, "eqgan_final": eq.final_fidelity})
    res = max(r["period_two_residual"] for r in rows)
    if res < 1e-6:
        summary.append("oscillation detected: period 2")
    else:
        summary.append(f"oscillation not detected (period-2 residual {res:.3g})")
    summary.append(f"period_two_residual_max: {res:.3g}")
    summary.append(f"qugan_full_plateau_fidelity: {min(r['plateau_min'] for r in rows):.9f} .. "
                   f"{max(r['plateau_max'] for r in rows):.9f}")
    summary.append(_stat_line("qugan_partial_final_fidelity", [r["qugan_partial_final"] for r in rows]))
    summary.append(_stat_line("eqgan_final_fidelity", [r["eqgan_final"] for r in rows]))
    return rows, summary


def run_noisy(cfg: dict, out: Path, files: list):
    gen, _, _ = vanishing_gradient_instance()
    plus = StateVector(np.array([1.0, 1.0]) / np.sqrt(2))
    spec = DiscriminatorSpec(cfg["noisy"]["discriminator"], 1)
    rows = []
    for seed in cfg["seeds"]:
        base = dict(generator=gen, discriminator=spec, true_state=plus, noise=_noise(cfg, seed), seed=seed,
                    init_generator=cfg["noisy"]["init_generator"], **_training_kwargs(cfg))
        fz = train(TrainingConfig(mode=TrainingMode.FROZEN_SWAP, **base))
        eq = train(TrainingConfig(mode=TrainingMode.EQGAN, **base))
        files.append(_write(out, f"seed{seed}/frozen_swap.csv", fz.to_csv()))
        files.append(_write(out, f"seed{seed}/eqgan.csv", eq.to_csv()))
        rows.append({"seed": seed,
                     "frozen_best": fz.best_fidelity, "frozen_final": fz.final_fidelity,
                     "eqgan_best": eq.best_fidelity, "eqgan_final": eq.final_fidelity,
                     "eqgan_converged": eq.converged_fidelity, "eqgan_converged_index": eq.converged_index})
    wins = sum(r["eqgan_best"] > r["frozen_best"] for r in rows)
    summary = [f"eqgan_best_beats_frozen_best: {wins}/{len(rows)} seeds"]
    for key in ("frozen_best", "frozen_final", "eqgan_best", "eqgan_final", "eqgan_converged"):
        summary.append(_stat_line(key, [r[key] for r in rows]))
    return rows, summary


def run_vanishing(cfg: dict, out: Path, files: list):
    gen, data, init = vanishing_gradient_instance()
    spec = DiscriminatorSpec(cfg["vanishing"]["discriminator"], 1)
    rows = []
    g = gradient(fidelity_loss(gen, data), init, "FINITE_DIFF", 1e-5)
    for seed in cfg["seeds"]:
        base = dict(generator=gen, discriminator=spec, true_state=data, init_generator=init, seed=seed,
                    **_training_kwargs(cfg))
        fz = train(TrainingConfig(mode=TrainingMode.FROZEN_SWAP, **base))
        eq = train(TrainingConfig(mode=TrainingMode.EQGAN, **{**base, "init_discriminator":
                                                                 cfg["vanishing"]["init_discriminator"]}))
        files.append(_write(out, f"seed{seed}/frozen_swap.csv", fz.to_csv()))
        files.append(_write(out, f"seed{seed}/eqgan.csv", eq.to_csv()))
        initial = fidelity(data, simulate(gen, init))
        rows.append({"seed": seed, "gradient_norm": float(np.linalg.norm(g)), "initial_overlap": initial,
                     "frozen_max_deviation": max(abs(f - initial) for f in fz.fidelity),
                     "frozen_final": fz.final_fidelity, "eqgan_final": eq.final_fidelity,
                     "eqgan_best": eq.best_fidelity})
    r0 = rows[0]
    summary = [f"fidelity_loss_gradient_norm_at_init: {r0['gradient_norm']:.3g}",
               f"initial_overlap: {r0['initial_overlap']:.9f}",
               f"frozen_swap_max_overlap_change: {max(r['frozen_max_deviation'] for r in rows):.3g}",
               _stat_line("frozen_swap_final_overlap", [r["frozen_final"] for r in rows]),
               _stat_line("eqgan_final_overlap", [r["eqgan_final"] for r in rows])]
    return rows, summary


def _dataset(cfg: dict, seed: int) -> Dataset:
    q = cfg["qram"]
    return sample_two_peak(q["n_qubits"], q["class0_mean"], q["class0_std"], q["class1_mean"], q["class1_std"],
                           q["n_samples"], seed)


def _train_qram_classes(cfg: dict, d: Dataset, seed: int, out: Path | None = None, files: list | None = None,
                        prefix: str = ""):
    q = cfg["qram"]
    params, fids = {}, {}
    for c in (0, 1):
        tc = qram_config(d, c, seed=seed, outer_iterations=q["outer_iterations"],
                         pretrain_iterations=q["pretrain_iterations"], learning_rate_g=q["learning_rate_g"],
                         learning_rate_d=q["learning_rate_d"], gradient=cfg["training"]["gradient"])
        h = train(tc)
        best = int(np.argmax(h.fidelity))
        params[c] = dict(zip(tc.generator.parameter_names, h.gen_params[best].tolist()))
        fids[c] = h.fidelity[best]
        if out is not None:
            files.append(_write(out, f"{prefix}class{c}_history.csv", h.to_csv()))
    return params, fids


def run_qram(cfg: dict, out: Path, files: list):
    rows = []
    for seed in cfg["seeds"]:
        d = _dataset(cfg, seed)
        files.append(_write(out, f"seed{seed}/dataset.csv", d.to_csv()))
        files.append(_write(out, f"seed{seed}/histogram.csv", histogram_csv(d)))
        params, fids = _train_qram_classes(cfg, d, seed, out, files, f"seed{seed}/")
        lines = ["bin,class0_trained,class1_trained"]
        counts, tvs = {}, {}
        for c in (0, 1):
            state = qram_state(d.n_qubits, c, params[c])
            counts[c] = sample_counts(state, cfg["qram"]["samples"], seed)
            tvs[c] = total_variation(counts[c], d.histogram(c))
            fid = fidelity(empirical_superposition(d, c), state)
            assert abs(fid - fids[c]) < 1e-9
        lines += [f"{i},{a},{b}" for i, (a, b) in enumerate(zip(counts[0], counts[1]))]
        files.append(_write(out, f"seed{seed}/sampled_histogram.csv", "\n".join(lines) + "\n"))
        rows.append({"seed": seed, "class0_fidelity": fids[0], "class1_fidelity": fids[1],
                     "class0_tv": tvs[0], "class1_tv": tvs[1]})
    summary = [_stat_line(k, [r[k] for r in rows])
               for k in ("class0_fidelity", "class1_fidelity", "class0_tv", "class1_tv")]
    return rows, summary


def run_qnn(cfg: dict, out: Path, files: list):
    q = cfg["qnn"]
    rows, acc_rows = [], []
    for seed in cfg["seeds"]:
        d = _dataset(cfg, seed)
        qp, _ = _train_qram_classes(cfg, d, seed)
        lrs = {"SAMPLING": q["lr_sampling"], "SUPERPOSITION": q["lr_superposition"]}
        row = {"seed": seed}
        for mode in QnnMode:
            lr = lrs[mode.value]
            if q["grid_search"]:
                lr, _ = lr_grid_search(mode, d, qp, budget=q["budget"], optimizer=q["optimizer"])
            init = QnnModel.random(np.random.default_rng(seed), d.n_qubits, q["n_layers"])
            m, h = train_qnn(mode, d, qp, q["budget"], lr, seed, q["optimizer"], model=init)
            name = mode.value.lower()
            files.append(_write(out, f"seed{seed}/{name}_history.csv", h.to_csv()))
            files.append(_write(out, f"seed{seed}/{name}_model.txt", m.to_text()))
            for split in ("train", "test"):
                acc = evaluate_accuracy(m, d, split)
                acc_rows.append((seed, mode.value, split, acc))
                row[f"{name}_{split}_accuracy"] = acc
            row[f"{name}_lr"] = lr
            row[f"{name}_loss_evaluations"] = h.queries.loss_evaluations
            row[f"{name}_gradient_evaluations"] = h.queries.gradient_evaluations
        rows.append(row)
    files.append(_write(out, "accuracy.csv", accuracy_csv(acc_rows)))
    summary = [_stat_line(f"{m}_test_accuracy", [r[f"{m}_test_accuracy"] for r in rows])
               for m in ("sampling", "superposition")]
    parity = all(r["sampling_loss_evaluations"] == r["superposition_loss_evaluations"]
                 and r["sampling_gradient_evaluations"] == r["superposition_gradient_evaluations"] for r in rows)
    summary.append(f"query_budget_parity: {'yes' if parity else 'NO'}")
    return rows, summary


RUNNERS = {
    "MODE_COLLAPSE": run_mode_collapse,
    "EQGAN_VS_FROZEN_NOISY": run_noisy,
    "VANISHING_GRADIENT": run_vanishing,
    "QRAM_TRAIN": run_qram,
    "QNN_COMPARE": run_qnn,
}


def run_sweep(cfg: dict, out: Path, files: list):
    s = cfg["sweep"]
    # The resolved config already carries the base experiment's defaults.
    base = {**cfg, "experiment": s["base"]}
    rows, summary = [], []
    kind = config_mod.RULES[s["parameter"]].kind
    for i, value in enumerate(s["values"]):
        v = int(value) if kind == "int" else float(value)
        sub = config_mod.override(base, s["parameter"], v)
        sub_rows, sub_summary = RUNNERS[s["base"]](sub, out / f"value{i}", [])
        for r in sub_rows:
            rows.append({"value": v, **r})
        summary.append(f"[{s['parameter']} = {v!r}]")
        summary += [f"  {line}" for line in sub_summary]
    for i in range(len(s["values"])):
        files += [str(p.relative_to(out)) for p in sorted((out / f"value{i}").rglob("*.csv"))]
    return rows, summary


RUNNERS["SWEEP"] = run_sweep


def rows_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    keys = list(rows[0])
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    lines = [",".join(keys)]
    for r in rows:
        vals = []
        for k in keys:
            v = r.get(k, "")
            vals.append(f"{v:.17g}" if isinstance(v, float) else str(v))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def run(cfg: dict, out: Path) -> Path:
    """Execute a resolved config into ``out``; returns the summary path."""
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []
    started = time.time()
    rows, summary = RUNNERS[cfg["experiment"]](cfg, out, files)
    files.append(_write(out, "metrics.csv", rows_csv(rows)))
    header = [f"experiment: {cfg['experiment']}", f"seeds: {cfg['seeds']}"]
    files.append(_write(out, "summary.txt", "\n".join(header + summary) + "\n"))
    manifest = {
        "experiment": cfg["experiment"],
        "tool": "eqgan",
        "version": _version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": cfg,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "elapsed_seconds": round(time.time() - started, 3),
        "files": {f: hashlib.sha256((out / f).read_bytes()).hexdigest() for f in sorted(set(files))},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out / "summary.txt"
