import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qstc import quantizer as qz
from qstc.errors import BadIndex, DimensionError, OutOfRange


def frame(c, E):
    return qz.QuantizationFrame(center=np.asarray(c, dtype=float), range=E)


def test_center_maps_to_center():
    spec = qz.QuantizerSpec(3, 2)
    f = frame([0.3, -1.2], 0.7)
    idx = qz.encode(spec, f, [0.3, -1.2])
    np.testing.assert_allclose(qz.decode(spec, f, idx), [0.3, -1.2], rtol=0, atol=1e-15)


def test_direct_bin_arithmetic():
    spec = qz.QuantizerSpec(2, 1)
    f = frame([0.0], 1.0)
    assert qz.encode(spec, f, [0.5]) == 2
    np.testing.assert_allclose(qz.decode(spec, f, 2), [0.5])
    assert qz.encode(spec, f, [1.0]) == 2      # upper boundary clamps to bin N-1
    assert qz.encode(spec, f, [-1.0]) == 1


def test_index_layout_axis0_least_significant():
    spec = qz.QuantizerSpec(3, 2)
    f = frame([0.0, 0.0], 3.0)
    assert qz.encode(spec, f, [-3.0, -3.0]) == 1
    assert qz.encode(spec, f, [3.0, -3.0]) == 3
    assert qz.encode(spec, f, [-3.0, 3.0]) == 7


def test_zero_range():
    spec = qz.QuantizerSpec(4, 2)
    f = frame([1.0, 2.0], 0.0)
    for i in range(1, spec.size + 1):
        np.testing.assert_array_equal(qz.decode(spec, f, i), [1.0, 2.0])
    qz.encode(spec, f, [1.0, 2.0])


def test_errors():
    spec = qz.QuantizerSpec(5, 1)
    with pytest.raises(BadIndex):
        qz.decode(spec, frame([0.0], 1.0), 0)
    with pytest.raises(BadIndex):
        qz.decode(spec, frame([0.0], 1.0), 6)
    with pytest.raises(OutOfRange):
        qz.encode(spec, frame([0.0], 1.0), [1.01])
    with pytest.raises(DimensionError):
        qz.QuantizerSpec(1, 1)
    with pytest.raises(DimensionError):
        qz.QuantizerSpec(2 ** 32, 3)
    qz.encode(spec, frame([0.0], 1.0), [1.0 + 1e-12])   # inside numeric slack


@pytest.mark.parametrize("N,ny", [(2, 1), (3, 2), (7, 3), (101, 2)])
def test_index_round_trip_exhaustive(N, ny):
    spec = qz.QuantizerSpec(N, ny)
    f = frame(np.linspace(-1, 1, ny), 2.5)
    for i in range(1, min(spec.size, 10 ** 4) + 1):
        assert qz.encode(spec, f, qz.decode(spec, f, i)) == i


def test_error_bound_many_draws():
    rng = np.random.default_rng(7)
    for N in (2, 3, 11, 101):
        c = rng.normal(size=(25000, 3)) * 10
        E = rng.exponential(size=25000) * rng.choice([1e-6, 1.0, 1e3], size=25000)
        y = c + rng.uniform(-1, 1, size=c.shape) * E[:, None]
        q = qz.quantize_many(N, c, E, y)
        assert np.all(np.abs(y - q) <= E[:, None] / N + 1e-12 * np.maximum(1.0, np.abs(y)))
        assert np.all(np.abs(q - c) < E[:, None] * (1 + 1e-12))


@given(st.integers(2, 40), st.integers(1, 3), st.floats(1e-3, 1e3), st.data())
@settings(max_examples=200, deadline=None)
def test_scalar_path_matches_bound(N, ny, E, data):
    spec = qz.QuantizerSpec(N, ny)
    c = np.array(data.draw(st.lists(st.floats(-100, 100), min_size=ny, max_size=ny)))
    u = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=ny, max_size=ny)))
    y = c + u * E
    f = frame(c, E)
    idx, q = qz.quantize(spec, f, y)
    assert 1 <= idx <= spec.size
    assert np.all(np.abs(y - q) <= E / N + 1e-12 * max(1.0, np.max(np.abs(y))))
    np.testing.assert_allclose(q, qz.quantize_many(N, c[None], [E], y[None])[0], rtol=0, atol=1e-12 * (1 + E))
