import math

import numpy as np
import pytest

from drcpd import datasets
from drcpd.errors import ParseError
from drcpd.series import TimeSeries


def test_label_series_examples():
    assert datasets.label_series(10, [4], 2).tolist() == [0, 0, 0, 0, 1, 1, 1, 1, 0, 0]
    lab = datasets.label_series(12, [3, 4], 3)
    assert np.flatnonzero(lab).tolist() == list(range(3, 10))
    assert datasets.label_series(6, [4], 5).tolist() == [0, 0, 0, 0, 1, 1]


def test_label_series_validation():
    with pytest.raises(ValueError):
        datasets.label_series(10, [10], 2)
    with pytest.raises(ValueError):
        datasets.label_series(10, [5, 3], 2)


def test_schedules():
    np.testing.assert_allclose(datasets.mean_schedule()[:4], [0.0, 1.0, 2.5, 4.5])
    np.testing.assert_allclose(datasets.std_schedule()[:3], [1.0, 1.5, 1.75])
    assert datasets.frequency_schedule()[0] == 1.0
    assert datasets.frequency_schedule()[1] == pytest.approx(math.log(math.e + 1.0))


@pytest.mark.parametrize("ds,dim", [(1, 2), (2, 2), (3, 1)])
def test_generators_shape_and_determinism(ds, dim):
    a = datasets.generate(datasets.SyntheticSpec(ds, 4))
    b = datasets.generate(datasets.SyntheticSpec(ds, 4))
    c = datasets.generate(datasets.SyntheticSpec(ds, 5))
    assert a.series.values.shape == (20000, dim)
    np.testing.assert_array_equal(a.series.values, b.series.values)
    assert not np.array_equal(a.series.values, c.series.values)
    assert a.change_points == tuple(range(2000, 20000, 2000))
    assert a.labels.sum() == 9 * 1000


def test_dataset1_segment_means_increase():
    x = datasets.gen_dataset1(0).series.values[:, 0]
    means = x.reshape(10, 2000).mean(axis=1)
    assert np.all(np.diff(means) > 0)
    # AR(2) stationary mean is mu / (1 - 0.6 + 0.5)
    assert means[-1] == pytest.approx(datasets.mean_schedule()[-1] / 0.9, abs=0.5)


def test_dataset2_segment_spread_increases():
    x = datasets.gen_dataset2(0).series.values
    stds = x[:, 0].reshape(10, 2000).std(axis=1)
    assert np.all(np.diff(stds) > 0)
    assert x[:, 1].std() == pytest.approx(5.0, rel=0.05)


def test_dataset3_noise_mean():
    x = datasets.gen_dataset3(0).series.values[:, 0]
    assert x.mean() == pytest.approx(0.5, abs=0.05)


def test_csv_round_trip_bit_exact(tmp_path, rng):
    s = TimeSeries(rng.normal(size=(50, 3)) * 1e3)
    path = tmp_path / "s.csv"
    datasets.save_csv(s, path, header=["a", "b", "c"])
    back = datasets.load_csv(path, header=True)
    np.testing.assert_array_equal(back.values, s.values)
    datasets.save_csv(s, path)
    np.testing.assert_array_equal(datasets.load_csv(path).values, s.values)


def test_csv_crlf_and_trailing_newline():
    s = datasets.parse_series("1.0,2.0\r\n3.0,4.0\r\n")
    assert s.values.tolist() == [[1.0, 2.0], [3.0, 4.0]]


@pytest.mark.parametrize("text,lineno", [("1,2\n3\n", 2), ("1,2\nx,4\n", 2),
                                         ("1,2\n\n3,4\n", 2), ("1,nan\n", 1)])
def test_csv_errors_name_the_line(text, lineno):
    with pytest.raises(ParseError) as err:
        datasets.parse_series(text)
    assert err.value.lineno == lineno


def test_csv_header_hint_and_empty():
    with pytest.raises(ParseError, match="header"):
        datasets.parse_series("a,b\n1,2\n")
    with pytest.raises(ParseError):
        datasets.parse_series("")
    with pytest.raises(ParseError):
        datasets.parse_series("", header=True)


def test_labels_round_trip(tmp_path):
    path = tmp_path / "l.txt"
    datasets.save_labels([5, 10, 15], path)
    assert datasets.load_labels(path) == [5, 10, 15]
    with pytest.raises(ParseError):
        datasets.parse_labels("5\n3\n")
    with pytest.raises(ParseError) as err:
        datasets.parse_labels("5\nabc\n")
    assert err.value.lineno == 2
