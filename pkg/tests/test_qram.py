from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eqgan.qram import (
    Dataset,
    build_peak_ansatz,
    empirical_superposition,
    histogram_csv,
    qram_config,
    qram_state,
    sample_counts,
    sample_two_peak,
    total_variation,
    train_qram,
)
from eqgan.quantum import StateVector


def tiny(values, labels, n=2):
    idx = np.arange(len(values))
    return Dataset(np.array(values), np.array(labels), n, idx, np.array([], dtype=int))


def test_default_dataset_split_is_balanced():
    d = sample_two_peak()
    assert d.values.size == 120
    assert d.train_idx.size == d.test_idx.size == 60
    assert not set(d.train_idx) & set(d.test_idx)
    for split in ("train", "test"):
        labels = d.labels[d.split(split)]
        assert (labels == 0).sum() == (labels == 1).sum() == 30
    assert d.values.min() >= 0 and d.values.max() <= 15


def test_class_means_are_centered_and_offset():
    d = sample_two_peak(n_samples=4000, seed=3)
    assert abs(d.class_values(0, "all").mean() - 7.5) < 0.15
    assert abs(d.class_values(1, "all").mean() - 11.5) < 0.15


def test_same_seed_same_dataset():
    assert sample_two_peak(seed=5).to_csv() == sample_two_peak(seed=5).to_csv()
    assert sample_two_peak(seed=5).to_csv() != sample_two_peak(seed=6).to_csv()


def test_delta_limit_puts_class_in_one_bin():
    d = sample_two_peak(class0_mean=6.2, class0_std=1e-9, class1_mean=12.0, class1_std=1e-9)
    assert set(d.class_values(0, "all")) == {6}
    assert set(d.class_values(1, "all")) == {12}


@pytest.mark.parametrize("kw", [dict(class0_std=0.0), dict(class1_std=-1.0), dict(class0_mean=16.0),
                                dict(n_samples=10)])
def test_sample_two_peak_rejects_bad_parameters(kw):
    with pytest.raises(ValueError):
        sample_two_peak(**kw)


def test_empirical_superposition_examples():
    s = empirical_superposition(tiny([3], [0]), 0)
    assert np.allclose(s.amplitudes, [0, 0, 0, 1])
    s = empirical_superposition(tiny([0, 1], [0, 0]), 0)
    assert np.allclose(s.amplitudes, [np.sqrt(0.5), np.sqrt(0.5), 0, 0])
    with pytest.raises(ValueError):
        empirical_superposition(tiny([0, 1], [0, 0]), 1)


def test_squared_amplitudes_match_histogram_exactly():
    d = sample_two_peak(seed=2)
    for c in (0, 1):
        counts = d.histogram(c)
        probs = [Fraction(int(k), int(counts.sum())) for k in counts]
        amps = empirical_superposition(d, c).amplitudes
        assert np.all(amps.imag == 0) and np.all(amps.real >= 0)
        for a, p in zip(amps.real, probs):
            assert abs(a * a - float(p)) < 1e-15


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 7), min_size=1, max_size=40))
def test_superposition_is_normalized(values):
    s = empirical_superposition(tiny(values, [0] * len(values), n=3), 0)
    assert abs(np.sum(np.abs(s.amplitudes) ** 2) - 1) < 1e-12


def test_csv_round_trip():
    d = sample_two_peak(seed=1)
    back = Dataset.from_csv(d.to_csv())
    assert np.array_equal(back.values, d.values)
    assert np.array_equal(back.labels, d.labels)
    assert np.array_equal(back.train_idx, d.train_idx)
    assert np.array_equal(back.test_idx, d.test_idx)
    lines = histogram_csv(d).splitlines()
    assert lines[0] == "bin,count_class0,count_class1" and len(lines) == 17


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_ansatz_gate_count_is_linear(n):
    assert build_peak_ansatz(n, 0).two_qubit_gate_count() == n - 1
    if n >= 3:
        # The offset peak mirrors one qubit further down the register.
        assert build_peak_ansatz(n, 1).two_qubit_gate_count() == n - 2


def test_ansatz_at_zero_is_basis_state():
    for c, expected in ((0, 0b0111), (1, 0b1011)):
        g = build_peak_ansatz(4, c)
        s = qram_state(4, c, np.zeros(len(g.parameter_names)))
        assert np.argmax(np.abs(s.amplitudes)) == expected
        assert np.abs(s.amplitudes[expected]) == pytest.approx(1.0)


def test_ansatz_peak_is_symmetric_without_skew():
    g = build_peak_ansatz(4, 0)
    params = {p: 0.0 for p in g.parameter_names}
    params.update({"theta_0": np.pi / 2, "theta_1": 0.6, "theta_2": 0.6, "theta_3": 0.6})
    p = qram_state(4, 0, params).probabilities()
    assert np.allclose(p, p[::-1])
    assert np.argmax(p) in (7, 8)


def test_ansatz_rejects_narrow_registers():
    with pytest.raises(ValueError):
        build_peak_ansatz(1, 0)
    with pytest.raises(ValueError):
        build_peak_ansatz(2, 1)
    with pytest.raises(ValueError):
        build_peak_ansatz(4, 2)


def test_single_bin_class_is_learned_exactly():
    d = sample_two_peak(class0_mean=7.0, class0_std=1e-9, class1_mean=11.0, class1_std=1e-9)
    for c in (0, 1):
        _, f = train_qram(d, c, qram_config(d, c, outer_iterations=20, pretrain_iterations=50))
        assert f >= 1 - 1e-3


def test_train_qram_default_dataset():
    d = sample_two_peak()
    params, f = train_qram(d, 0)
    assert f >= 0.95
    state = qram_state(4, 0, params)
    assert total_variation(sample_counts(state, 10_000, seed=0), d.histogram(0)) < 0.15
    again, f2 = train_qram(d, 0)
    assert again == params and f2 == f


def test_train_qram_width_mismatch():
    d = sample_two_peak()
    other = sample_two_peak(n_qubits=5, class0_mean=15.5, class1_mean=23.5)
    with pytest.raises(ValueError):
        train_qram(d, 0, qram_config(other, 0))


def test_total_variation():
    assert total_variation([1, 0], [0, 1]) == 1.0
    assert total_variation([2, 2], [1, 1]) == 0.0
    counts = sample_counts(StateVector([0, 1]), 50)
    assert counts.tolist() == [0, 50]
