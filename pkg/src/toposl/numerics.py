"""Small numerical kernels shared by the dynamics modules."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteState, NotHermitian, TooFewSamples

HERMITIAN_TOL = 1e-10
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class TimeSeries:
    """Samples ``values[k]`` taken at strictly increasing ``times[k]``."""

    times: np.ndarray
    values: np.ndarray
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values)
        if t.ndim != 1 or v.shape[0] != t.size:
            raise ValueError("times and values must have equal length")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def to_csv(self, names=None) -> str:
        v = self.values.reshape(len(self), -1)
        names = list(names or self.names or [f"x{i + 1}" for i in range(v.shape[1])])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *names])
        for t, row in zip(self.times, v):
            w.writerow([repr(float(t)), *(repr(float(x)) for x in np.real(row))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TimeSeries":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        arr = np.array([[float(x) for x in r] for r in body])
        return cls(arr[:, 0], arr[:, 1:], tuple(header[1:]))


def rk4_iter(rhs, y0, t0: float, t1: float, steps: int):
    """Yield ``(t, y)`` for the initial state and after every classical RK4 step.

    ``rhs(t, y)`` may return real or complex arrays of ``y0``'s shape.  The
    generator lets callers reduce each state on the fly instead of storing
    the whole trajectory.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    y = np.array(y0, dtype=np.result_type(np.asarray(y0).dtype, float))
    h = (t1 - t0) / steps
    yield t0, y
    for k in range(steps):
        t = t0 + k * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"state became non-finite at t={t + h:.6g}")
        yield (t1 if k == steps - 1 else t0 + (k + 1) * h), y


def rk4_integrate(rhs, y0, t0: float, t1: float, steps: int) -> TimeSeries:
    """Classical fixed-step RK4; every step is recorded (``steps + 1`` samples)."""
    pairs = list(rk4_iter(rhs, y0, t0, t1, steps))
    times = np.array([t for t, _ in pairs])
    return TimeSeries(times, np.array([y for _, y in pairs]))


def trapezoid(series: TimeSeries) -> float:
    if len(series) < 2:
        raise TooFewSamples("trapezoid needs at least two samples")
    out = np.trapezoid(np.asarray(series.values, dtype=float), series.times, axis=0)
    return float(out) if np.ndim(out) == 0 else out


def time_average(series: TimeSeries) -> float:
    return trapezoid(series) / series.duration


def cumulative_trapezoid(times, values) -> np.ndarray:
    """Running integral with a leading zero, same length as ``times``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    inc = 0.5 * (values[1:] + values[:-1]) * np.diff(times)
    return np.concatenate([[0.0], np.cumsum(inc)])


def is_hermitian(A, tol: float = HERMITIAN_TOL) -> bool:
    A = np.asarray(A)
    return A.ndim == 2 and A.shape[0] == A.shape[1] and np.abs(A - A.conj().T).max(initial=0.0) <= tol


def hermitian_eig(A) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and a unitary eigenvector matrix of a Hermitian ``A``."""
    A = np.asarray(A)
    if not is_hermitian(A):
        raise NotHermitian("matrix is not Hermitian within 1e-10")
    w, U = np.linalg.eigh(0.5 * (A + A.conj().T))
    return w, U


def trace_norm(A) -> float:
    """Sum of singular values."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.svd(A, compute_uv=False).sum())


def safe_log(x):
    return np.log(np.maximum(x, LOG_FLOOR))


def log_mean(x, y, rel_tol: float = 1e-9):
    """Logarithmic mean ``(x - y) / ln(x / y)`` for positive arguments.

    Near ``x == y`` the series ``m (1 - u^2/3)`` with ``m = (x + y)/2`` and
    ``u = (x - y)/(x + y)`` is used instead.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = x + y
    close = np.abs(x - y) <= rel_tol * s
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (x - y) / (np.log(x) - np.log(y))
        u = np.where(s > 0, (x - y) / np.where(s > 0, s, 1.0), 0.0)
        series = 0.5 * s * (1.0 - u * u / 3.0)
    out = np.where(close, series, direct)
    out = np.where((x <= 0) | (y <= 0), 0.0, out)
    return out if out.ndim else float(out)


def safe_log_ratio(x, y):
    """``ln(x / y)`` with both arguments floored at 1e-300."""
    return safe_log(x) - safe_log(y)


def relative_gap(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)
