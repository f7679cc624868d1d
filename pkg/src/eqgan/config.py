"""Declarative experiment configuration.

A config is one YAML mapping. Every field has a default and a config may be
empty; per-experiment defaults are layered between the global defaults and
the user's file. Diagnostics carry the line of the offending key when the
file provides one.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import yaml

EXPERIMENTS = (
    "MODE_COLLAPSE",
    "EQGAN_VS_FROZEN_NOISY",
    "VANISHING_GRADIENT",
    "QRAM_TRAIN",
    "QNN_COMPARE",
    "SWEEP",
)

DEFAULTS = {
    "experiment": "MODE_COLLAPSE",
    "output_dir": "results",
    # null means the experiment's own default seed list.
    "seeds": None,
    "training": {
        "outer_iterations": 200,
        "learning_rate_g": 0.05,
        "learning_rate_d": 0.05,
        "epochs_per_phase": [1, 1],
        "gradient": "PARAM_SHIFT",
        "fd_step": 1e-4,
        "pretrain": False,
        "pretrain_iterations": 200,
        "lr_decay": 1.0,
        "optimizer": "sgd",
    },
    "noise": {
        "enabled": False,
        "rz_bias_mean": 0.3,
        "rz_bias_std": 0.05,
    },
    "mode_collapse": {
        "full_iterations": 20,
        "partial_learning_rate": 0.2,
    },
    "noisy": {
        "discriminator": "CZ_WITH_PHASES",
        "init_generator": [1.2707963267948966, 0.2],
    },
    "vanishing": {
        "discriminator": "CZ_WITH_PHASES",
        "init_discriminator": [0.3, 0.0],
    },
    "qram": {
        "n_qubits": 4,
        "class0_mean": 7.5,
        "class0_std": 1.5,
        "class1_mean": 11.5,
        "class1_std": 1.5,
        "n_samples": 120,
        "outer_iterations": 150,
        "pretrain_iterations": 150,
        "learning_rate_g": 0.5,
        "learning_rate_d": 0.05,
        "samples": 10000,
    },
    "qnn": {
        "budget": 60,
        "lr_sampling": 10**-3.93,
        "lr_superposition": 10**-1.83,
        "optimizer": "adam",
        "n_layers": 2,
        "grid_search": False,
    },
    "sweep": {
        "base": "EQGAN_VS_FROZEN_NOISY",
        "parameter": "noise.rz_bias_mean",
        "values": [0.0, 0.1, 0.2, 0.3],
    },
}

EXPERIMENT_DEFAULTS = {
    "MODE_COLLAPSE": {"seeds": [0]},
    "EQGAN_VS_FROZEN_NOISY": {
        "seeds": list(range(10)),
        "training": {"outer_iterations": 300, "learning_rate_g": 0.2, "learning_rate_d": 0.3,
                     "pretrain": True, "lr_decay": 0.995},
        "noise": {"enabled": True},
    },
    "VANISHING_GRADIENT": {
        "seeds": [0],
        "training": {"learning_rate_g": 0.2, "learning_rate_d": 0.05},
    },
    "QRAM_TRAIN": {"seeds": [0]},
    "QNN_COMPARE": {"seeds": list(range(20))},
    "SWEEP": {"seeds": [0, 1, 2]},
}


class ConfigError(ValueError):
    def __init__(self, diagnostics: list[str]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(diagnostics))


@dataclass(frozen=True)
class _Rule:
    kind: str  # int, float, bool, str, list_int, list_float, pair_int
    check: object = None  # callable(value) -> error message or None
    choices: tuple | None = None
    nullable: bool = False


def _positive(v):
    return None if v > 0 else "must be > 0"


def _at_least_one(v):
    return None if v >= 1 else "must be >= 1"


def _non_negative(v):
    return None if v >= 0 else "must be >= 0"


def _unit_interval(v):
    return None if 0 < v <= 1 else "must lie in (0, 1]"


def _pair_positive(v):
    return None if min(v) >= 1 else "entries must be >= 1"


RULES = {
    "experiment": _Rule("str", choices=EXPERIMENTS),
    "output_dir": _Rule("str"),
    "seeds": _Rule("list_int", nullable=True),
    "training.outer_iterations": _Rule("int", _at_least_one),
    "training.learning_rate_g": _Rule("float", _positive),
    "training.learning_rate_d": _Rule("float", _positive),
    "training.epochs_per_phase": _Rule("pair_int", _pair_positive),
    "training.gradient": _Rule("str", choices=("PARAM_SHIFT", "FINITE_DIFF")),
    "training.fd_step": _Rule("float", _positive),
    "training.pretrain": _Rule("bool"),
    "training.pretrain_iterations": _Rule("int", _at_least_one),
    "training.lr_decay": _Rule("float", _unit_interval),
    "training.optimizer": _Rule("str", choices=("sgd", "adam")),
    "noise.enabled": _Rule("bool"),
    "noise.rz_bias_mean": _Rule("float"),
    "noise.rz_bias_std": _Rule("float", _non_negative),
    "mode_collapse.full_iterations": _Rule("int", _at_least_one),
    "mode_collapse.partial_learning_rate": _Rule("float", _positive),
    "noisy.discriminator": _Rule("str", choices=("CZ_WITH_PHASES", "ANCILLA_EXP_SWAP", "DESTRUCTIVE")),
    "noisy.init_generator": _Rule("list_float"),
    "vanishing.discriminator": _Rule("str", choices=("CZ_WITH_PHASES", "ANCILLA_EXP_SWAP", "DESTRUCTIVE")),
    "vanishing.init_discriminator": _Rule("list_float"),
    "qram.n_qubits": _Rule("int", lambda v: None if 3 <= v <= 5 else "must be in 3..5"),
    "qram.class0_mean": _Rule("float"),
    "qram.class0_std": _Rule("float", _positive),
    "qram.class1_mean": _Rule("float"),
    "qram.class1_std": _Rule("float", _positive),
    "qram.n_samples": _Rule("int", lambda v: None if v >= 4 and v % 4 == 0 else "must be a positive multiple of 4"),
    "qram.outer_iterations": _Rule("int", _at_least_one),
    "qram.pretrain_iterations": _Rule("int", _at_least_one),
    "qram.learning_rate_g": _Rule("float", _positive),
    "qram.learning_rate_d": _Rule("float", _positive),
    "qram.samples": _Rule("int", _at_least_one),
    "qnn.budget": _Rule("int", _non_negative),
    "qnn.lr_sampling": _Rule("float", _positive),
    "qnn.lr_superposition": _Rule("float", _positive),
    "qnn.optimizer": _Rule("str", choices=("sgd", "adam")),
    "qnn.n_layers": _Rule("int", _at_least_one),
    "qnn.grid_search": _Rule("bool"),
    "sweep.base": _Rule("str", choices=tuple(e for e in EXPERIMENTS if e != "SWEEP")),
    "sweep.parameter": _Rule("str"),
    "sweep.values": _Rule("list_float", lambda v: None if v else "must not be empty"),
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _key_lines(node, prefix="", lines=None) -> dict[str, int]:
    """Dotted key path -> 1-based line number, from a composed YAML node tree."""
    lines = {} if lines is None else lines
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}.{k.value}" if prefix else str(k.value)
            lines[path] = k.start_mark.line + 1
            _key_lines(v, path, lines)
    return lines


def _coerce(rule: _Rule, value):
    """Return (value, error message or None)."""
    if value is None:
        return (None, None) if rule.nullable else (None, "must not be null")
    k = rule.kind
    if k == "bool":
        return (value, None) if isinstance(value, bool) else (None, "expected true or false")
    if k == "str":
        return (value, None) if isinstance(value, str) else (None, "expected a string")
    if k == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            return None, "expected an integer"
        return value, None
    if k == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            return None, "expected a finite number"
        return float(value), None
    if k in ("list_int", "list_float", "pair_int"):
        if not isinstance(value, list):
            return None, "expected a list"
        item = _Rule("float" if k == "list_float" else "int")
        out = []
        for v in value:
            c, err = _coerce(item, v)
            if err:
                return None, f"list entries: {err}"
            out.append(c)
        if k == "pair_int" and len(out) != 2:
            return None, "expected two integers [generator_steps, discriminator_steps]"
        return out, None
    raise AssertionError(k)


def _flatten(tree: dict, prefix="") -> dict:
    out = {}
    for k, v in tree.items():
        path = f"{prefix}.{k}" if prefix else k
        if isinstance(v, dict):
            out.update(_flatten(v, path))
        else:
            out[path] = v
    return out


def _set_path(tree: dict, path: str, value) -> None:
    *heads, last = path.split(".")
    for h in heads:
        tree = tree[h]
    tree[last] = value


def resolve(text: str) -> tuple[dict, list[str]]:
    """Parse and validate; returns (resolved config, diagnostics)."""
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        problem = getattr(exc, "problem", None) or str(exc)
        return copy.deepcopy(DEFAULTS), [f"{where}syntax error: {problem}"]
    raw = {} if raw is None else raw
    lines = _key_lines(node) if node is not None else {}
    if not isinstance(raw, dict):
        return copy.deepcopy(DEFAULTS), ["line 1: top level must be a mapping of fields"]

    def at(path):
        return f"line {lines[path]}: " if path in lines else ""

    diags = []
    experiment = raw.get("experiment", DEFAULTS["experiment"])
    if experiment not in EXPERIMENTS:
        diags.append(f"{at('experiment')}experiment: unknown experiment {experiment!r}; "
                     f"valid choices: {', '.join(EXPERIMENTS)}")
        experiment = DEFAULTS["experiment"]
    resolved = _merge(DEFAULTS, EXPERIMENT_DEFAULTS[experiment])
    if experiment == "SWEEP":
        # A sweep runs its base experiment, so the base's defaults sit under the user's fields.
        sweep = raw.get("sweep")
        base = sweep.get("base", DEFAULTS["sweep"]["base"]) if isinstance(sweep, dict) else DEFAULTS["sweep"]["base"]
        if base in EXPERIMENT_DEFAULTS and base != "SWEEP":
            resolved = _merge(_merge(DEFAULTS, EXPERIMENT_DEFAULTS[base]), EXPERIMENT_DEFAULTS["SWEEP"])

    def walk(user: dict, defaults: dict, prefix: str):
        for key, value in user.items():
            path = f"{prefix}.{key}" if prefix else str(key)
            if path == "experiment":
                _set_path(resolved, path, experiment)
                continue
            if key not in defaults:
                valid = ", ".join(sorted(defaults))
                diags.append(f"{at(path)}{path}: unknown field (valid: {valid})")
                continue
            if isinstance(defaults[key], dict):
                if not isinstance(value, dict):
                    diags.append(f"{at(path)}{path}: expected a mapping")
                elif value:
                    walk(value, defaults[key], path)
                continue
            rule = RULES[path]
            coerced, err = _coerce(rule, value)
            if err is None and coerced is not None:
                if rule.choices is not None and coerced not in rule.choices:
                    err = f"must be one of {', '.join(rule.choices)}"
                elif rule.check is not None:
                    err = rule.check(coerced)
            if err:
                diags.append(f"{at(path)}{path}: {err} (got {value!r})")
            else:
                _set_path(resolved, path, coerced)

    walk(raw, DEFAULTS, "")
    if experiment == "SWEEP":
        param = resolved["sweep"]["parameter"]
        allowed = [p for p, r in RULES.items() if r.kind in ("float", "int") and "." in p and not p.startswith("sweep.")]
        if param not in allowed:
            diags.append(f"{at('sweep.parameter')}sweep.parameter: {param!r} is not a numeric field")
        else:
            for v in resolved["sweep"]["values"]:
                _, err = _coerce(RULES[param], int(v) if RULES[param].kind == "int" and float(v).is_integer() else v)
                err = err or (RULES[param].check(v) if RULES[param].check else None)
                if err:
                    diags.append(f"{at('sweep.values')}sweep.values: {v!r} for {param} {err}")
    return resolved, diags


def load(text: str) -> dict:
    cfg, diags = resolve(text)
    if diags:
        raise ConfigError(diags)
    return cfg


def dump(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=False, default_flow_style=None)


def override(cfg: dict, path: str, value) -> dict:
    out = copy.deepcopy(cfg)
    _set_path(out, path, value)
    return out


def flat(cfg: dict) -> dict:
    return _flatten(cfg)
