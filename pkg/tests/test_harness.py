import math

import numpy as np
import pytest

from twostate_fp.harness import (
    ConvergenceTable,
    decay_study,
    observed_rates,
    read_csv,
    spatial_study,
    step_count,
    summarize,
    temporal_study,
)
from twostate_fp.problems import decay_problem, example1, example3, get_problem


def test_rate_of_synthetic_quartering():
    assert observed_rates([8, 16], [4e-4, 1e-4])[1] == pytest.approx(2.0, abs=1e-12)


def test_rate_of_synthetic_halving():
    r = observed_rates([10, 20, 40], [1e-3, 5e-4, 2.5e-4])
    assert r[0] is None and r[1] == pytest.approx(1.0) and r[2] == pytest.approx(1.0)


def test_decay_rate_orientation():
    # equal errors across a decade give 0; an error shrinking tenfold as t drops a decade gives 1
    assert observed_rates([1e-1, 1e-2], [3e-6, 3e-6])[1] == 0.0
    assert observed_rates([1e-1, 1e-2], [1e-5, 1e-6])[1] == pytest.approx(1.0)
    assert observed_rates([1e-1, 1e-2], [6.143e-6, 1.179e-5])[1] == pytest.approx(-0.2831, abs=1e-4)


def test_zero_error_flagged():
    with pytest.raises(ValueError):
        observed_rates([1, 2], [1e-3, 0.0])


def test_table_length_check():
    with pytest.raises(ValueError):
        ConvergenceTable("spatial", [1.0, 2.0], [1.0], [1.0, 2.0])


def test_step_count():
    assert step_count(0.1, 0.1 / 1600) == 1600
    with pytest.raises(ValueError):
        step_count(0.1, 0.03)


def test_csv_layout_and_round_trip():
    t = ConvergenceTable("spatial", [8.0, 16.0], [4e-4, 1e-4], [1e-3, 2.5e-4], {"problem": "x", "alpha1": 0.1})
    text = t.to_csv()
    lines = text.splitlines()
    assert lines[0] == "# problem=x,alpha1=0.1"
    assert lines[1] == "param,err_G1,rate_G1,err_G2,rate_G2"
    assert lines[2] == "8,0.0004,,0.001,"
    back = read_csv(text)
    assert back.params == t.params and back.err_g1 == t.err_g1 and back.err_g2 == t.err_g2
    assert "2.0000" in summarize(t)


def test_read_csv_needs_header():
    with pytest.raises(ValueError):
        read_csv("# a=1\n1,2,3,4,5\n")


def test_level_checks():
    p = example3()
    with pytest.raises(ValueError):
        spatial_study(p, [8, 24], 0.01, 0.01)  # not doublings
    with pytest.raises(ValueError):
        spatial_study(p, [6, 12], 0.01, 0.01)  # misses the discontinuity at 1/4
    with pytest.raises(ValueError):
        spatial_study(p, [8, 16], 0.003, 0.01)  # non-integral step count
    with pytest.raises(ValueError):
        decay_study(decay_problem("g2"), 10, [1e-2, 1e-1], 16)
    with pytest.raises(ValueError):
        decay_study(decay_problem("g2"), 10, [1e-1, 1e-2], 16, reference="coarse")
    with pytest.raises(ValueError):
        spatial_study(get_problem("example2"), [8, 16], 0.001, 0.01, reference="exact")


def test_spatial_example1_table():
    tab = spatial_study(example1(), [8, 16, 32, 64], 0.1 / 1600, 0.1)
    np.testing.assert_allclose(tab.err_g1, [2.417e-4, 5.873e-5, 1.316e-5, 2.406e-6], rtol=0.01)
    np.testing.assert_allclose(tab.rate_g1[1:], [2.04, 2.16, 2.45], atol=0.02)
    assert tab.metadata["reference"] == "exact"


def test_richardson_agrees_with_exact_path():
    # holds while the spatial error dominates; on finer levels the exact-solution
    # path also sees the temporal error and its rates drift upward
    p = example1()
    exact = spatial_study(p, [4, 8, 16], 0.1 / 1600, 0.1, reference="exact")
    rich = spatial_study(p, [4, 8, 16], 0.1 / 1600, 0.1, reference="richardson")
    for a, b in zip(exact.rate_g1[1:] + exact.rate_g2[1:], rich.rate_g1[1:] + rich.rate_g2[1:]):
        assert abs(a - b) < 0.1


def test_spatial_example3_fast():
    tab = spatial_study(example3(0.8, 0.9), [8, 16, 32, 64], 0.01 / 200, 0.01)
    np.testing.assert_allclose(tab.rate_g1[1:], [1.992, 1.999, 2.000], atol=0.02)


def test_temporal_study_rates():
    tab = temporal_study(get_problem("example2"), 64, [40, 80, 160], 0.01)
    assert all(abs(r - 1.0) < 0.05 for r in tab.rate_g1[1:] + tab.rate_g2[1:])
    assert tab.metadata["h"] == "1/64"


def test_decay_study_shape():
    tab = decay_study(decay_problem("g2", a=1.0), 10, [1e-1, 1e-2, 1e-3], 32)
    assert tab.kind == "decay"
    assert tab.params == [1e-1, 1e-2, 1e-3]
    assert all(e > 0 for e in tab.err_g1 + tab.err_g2)
    assert tab.metadata["N"] == 10
    fine = decay_study(decay_problem("g2", a=1.0), 10, [1e-1, 1e-2], 32, reference="fine")
    # the doubling proxy is half the error against a converged reference for a first-order scheme
    assert fine.err_g2[0] == pytest.approx(2 * tab.err_g2[0], rel=0.1)


def test_studies_are_deterministic():
    p = example3()
    a = spatial_study(p, [8, 16], 0.01 / 50, 0.01).to_csv()
    b = spatial_study(p, [8, 16], 0.01 / 50, 0.01).to_csv()
    assert a == b
    assert not math.isnan(read_csv(a).err_g1[0])


def test_temporal_fine_label_shifts_rows():
    p = example3()
    coarse = temporal_study(p, 32, [10, 20], 0.01)
    fine = temporal_study(p, 32, [20, 40], 0.01, label="fine")
    # the row for L under "fine" pairs L/2 with L, i.e. the "coarse" row for L/2
    assert fine.err_g1 == coarse.err_g1 and fine.err_g2 == coarse.err_g2
    assert fine.metadata["label"] == "fine"
    with pytest.raises(ValueError):
        temporal_study(p, 32, [5, 10], 0.01, label="fine")
    with pytest.raises(ValueError):
        temporal_study(p, 32, [10, 20], 0.01, label="middle")
