import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toposl.errors import NonFiniteState, NotHermitian, TooFewSamples
from toposl.numerics import (
    TimeSeries,
    cumulative_trapezoid,
    hermitian_eig,
    is_hermitian,
    log_mean,
    relative_gap,
    rk4_integrate,
    rk4_iter,
    safe_log,
    time_average,
    trace_norm,
    trapezoid,
)


def test_rk4_exponential_fourth_order():
    errs = []
    for steps in (10, 20, 40):
        ts = rk4_integrate(lambda t, y: -y, np.array([1.0]), 0.0, 1.0, steps)
        errs.append(abs(ts.values[-1, 0] - math.exp(-1)))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(16, rel=0.1)
    assert errs[2] < 1e-8


def test_rk4_is_exact_on_cubics():
    # y' = 3 t^2 integrates exactly under Simpson-like weights
    ts = rk4_integrate(lambda t, y: np.array([3 * t * t]), np.array([0.0]), 0.0, 2.0, 3)
    assert ts.values[-1, 0] == pytest.approx(8.0, abs=1e-12)


def test_rk4_complex_rotation():
    ts = rk4_integrate(lambda t, y: -1j * y, np.array([1.0 + 0j]), 0.0, math.pi, 2000)
    assert ts.values[-1, 0] == pytest.approx(-1.0, abs=1e-10)


def test_rk4_records_every_step_and_hits_end():
    pairs = list(rk4_iter(lambda t, y: y, np.array([1.0]), 0.0, 0.3, 7))
    assert len(pairs) == 8
    assert pairs[-1][0] == 0.3
    ts = rk4_integrate(lambda t, y: y, np.array([1.0]), 0.0, 0.3, 7)
    assert len(ts) == 8


def test_rk4_time_dependent_harmonic():
    def rhs(t, y):
        return np.array([y[1], -y[0]])

    ts = rk4_integrate(rhs, np.array([1.0, 0.0]), 0.0, 2 * math.pi, 1000)
    assert np.allclose(ts.values[-1], [1.0, 0.0], atol=1e-9)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_rk4_nonfinite_raises():
    with pytest.raises(NonFiniteState):
        rk4_integrate(lambda t, y: y * y, np.array([1.0]), 0.0, 2.0, 50)


def test_rk4_bad_steps():
    with pytest.raises(ValueError):
        rk4_integrate(lambda t, y: y, np.array([1.0]), 0.0, 1.0, 0)


def test_trapezoid_linear_exact_and_average():
    ts = TimeSeries(np.linspace(0, 2, 11), 3 * np.linspace(0, 2, 11) + 1)
    assert trapezoid(ts) == pytest.approx(8.0)
    assert time_average(ts) == pytest.approx(4.0)
    with pytest.raises(TooFewSamples):
        trapezoid(TimeSeries(np.array([0.0]), np.array([1.0])))


def test_cumulative_trapezoid():
    t = np.linspace(0, 1, 5)
    c = cumulative_trapezoid(t, 2 * t)
    assert c[0] == 0 and c[-1] == pytest.approx(1.0)
    assert np.allclose(c, t ** 2)


def test_timeseries_validation_and_csv():
    with pytest.raises(ValueError):
        TimeSeries(np.array([0.0, 0.0]), np.array([1.0, 2.0]))
    ts = TimeSeries(np.array([0.0, 0.5]), np.array([[1.0, 2.0], [3.0, 4.0]]), ("a", "b"))
    text = ts.to_csv()
    assert text.splitlines()[0] == "t,a,b"
    back = TimeSeries.from_csv(text)
    assert back.names == ("a", "b")
    assert np.array_equal(back.values, ts.values)
    assert ts.duration == 0.5


def test_hermitian_helpers(rng):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    H = A + A.conj().T
    assert is_hermitian(H) and not is_hermitian(A)
    w, U = hermitian_eig(H)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose(U @ np.diag(w) @ U.conj().T, H)
    with pytest.raises(NotHermitian):
        hermitian_eig(A)


def test_trace_norm(rng):
    H = np.diag([1.0, -2.0, 0.5])
    assert trace_norm(H) == pytest.approx(3.5)
    A = rng.normal(size=(3, 3))
    assert trace_norm(A) >= np.abs(np.trace(A)) - 1e-12


@given(st.floats(1e-6, 1e3), st.floats(1e-6, 1e3))
def test_log_mean_between_geometric_and_arithmetic(x, y):
    m = log_mean(x, y)
    assert math.sqrt(x * y) * (1 - 1e-9) <= m <= 0.5 * (x + y) * (1 + 1e-9)
    assert m == pytest.approx(log_mean(y, x), rel=1e-12)


def test_log_mean_limits():
    assert log_mean(2.0, 2.0) == pytest.approx(2.0)
    assert log_mean(2.0, 2.0 * (1 + 1e-12)) == pytest.approx(2.0, rel=1e-11)
    assert log_mean(math.e, 1.0) == pytest.approx(math.e - 1)
    assert log_mean(0.0, 1.0) == 0.0


def test_safe_log_and_gap():
    assert np.isfinite(safe_log(0.0))
    assert relative_gap(1.0, 1.0) == 0.0
    assert relative_gap(2.0, 1.0) == pytest.approx(0.5)
