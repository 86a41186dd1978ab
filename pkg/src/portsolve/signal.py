"""Periodic signals on a uniform grid and their discrete Fourier transforms.

A :class:`Signal` holds one period of a sampled periodic waveform.  The inner
product carries the sample spacing ``dt = T/N`` as a weight, so norms
approximate the continuous-time L2 norm over one period and tolerances do not
depend on the number of samples.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from portsolve.errors import LengthMismatch

__all__ = [
    "Signal",
    "Spectrum",
    "inner",
    "norm",
    "dft",
    "idft",
    "angular_frequencies",
    "read_csv",
    "write_csv",
]


@dataclass(frozen=True, eq=False)
class Signal:
    """One period of a discrete-time periodic signal.

    Parameters
    ----------
    samples : array_like
        Real sample values, length ``N >= 2``.
    period_T : float
        Duration of one period in seconds.
    """

    samples: np.ndarray
    period_T: float

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ValueError(f"a signal needs a 1-d array of at least 2 samples, got shape {x.shape}")
        if not np.isfinite(x.sum()) and not np.all(np.isfinite(x)):
            raise ValueError("signal samples must be finite")
        T = float(self.period_T)
        if not (T > 0 and np.isfinite(T)):
            raise ValueError(f"period_T must be positive and finite, got {self.period_T!r}")
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "period_T", T)

    # constructors

    @classmethod
    def zeros(cls, n: int, period_T: float) -> Signal:
        return cls(np.zeros(n), period_T)

    @classmethod
    def constant(cls, value: float, n: int, period_T: float) -> Signal:
        return cls(np.full(n, float(value)), period_T)

    @classmethod
    def sinusoid(cls, amplitude: float, n: int, period_T: float, harmonic: int = 1,
                 phase: float = 0.0) -> Signal:
        t = np.arange(n) * (period_T / n)
        return cls(amplitude * np.sin(2 * np.pi * harmonic * t / period_T + phase), period_T)

    @classmethod
    def from_function(cls, f, n: int, period_T: float) -> Signal:
        t = np.arange(n) * (period_T / n)
        return cls(np.asarray(f(t), dtype=float), period_T)

    # grid

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def dt(self) -> float:
        return self.period_T / self.samples.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    def like(self, samples) -> Signal:
        """Return a new signal with the same period and the given samples."""
        return Signal(samples, self.period_T)

    def _derived(self, samples: np.ndarray) -> Signal:
        # Internal fast path for arithmetic results: ``samples`` is a fresh
        # float array of the right length, so only the read-only flag is set.
        # Finiteness is not re-checked here; iteration drivers test the norm
        # of every step and report overflow there.
        samples.flags.writeable = False
        out = object.__new__(Signal)
        object.__setattr__(out, "samples", samples)
        object.__setattr__(out, "period_T", self.period_T)
        return out

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def shifted(self, k: int) -> Signal:
        """Cyclic shift by ``k`` samples."""
        return self.like(np.roll(self.samples, k))

    def same_grid(self, other: Signal) -> bool:
        return self.n == other.n and self.period_T == other.period_T

    def check_grid(self, other: Signal) -> None:
        if not self.same_grid(other):
            raise LengthMismatch(
                f"signals live on different grids: (N={self.n}, T={self.period_T}) "
                f"vs (N={other.n}, T={other.period_T})"
            )

    # arithmetic

    def _operand(self, other):
        if isinstance(other, Signal):
            self.check_grid(other)
            return other.samples
        return other

    def __add__(self, other):
        return self._derived(self.samples + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._derived(self.samples - self._operand(other))

    def __rsub__(self, other):
        return self._derived(self._operand(other) - self.samples)

    def __mul__(self, scalar):
        if isinstance(scalar, Signal):
            return NotImplemented
        return self._derived(self.samples * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self._derived(self.samples / float(scalar))

    def __neg__(self):
        return self._derived(-self.samples)

    def __eq__(self, other):
        if not isinstance(other, Signal):
            return NotImplemented
        return self.same_grid(other) and np.array_equal(self.samples, other.samples)

    def __hash__(self):
        return hash((self.period_T, self.samples.tobytes()))

    def __repr__(self):
        return f"Signal(N={self.n}, T={self.period_T!r})"


@dataclass(frozen=True, eq=False)
class Spectrum:
    """DFT coefficients of a signal, unnormalized (``X[k] = sum x[n] e^{-2 pi i k n / N}``)."""

    coefficients: np.ndarray
    period_T: float

    @property
    def n(self) -> int:
        return self.coefficients.size

    def frequencies(self) -> np.ndarray:
        return angular_frequencies(self.n, self.period_T)


def angular_frequencies(n: int, period_T: float) -> np.ndarray:
    """Signed angular frequency of every DFT bin.

    Bin ``k`` maps to ``2*pi*k/T`` for ``k <= N/2`` and ``2*pi*(k-N)/T`` above.
    For even ``N`` the Nyquist bin is taken as positive.
    """
    k = np.arange(n)
    signed = np.where(k <= n // 2, k, k - n)
    return 2 * np.pi * signed / period_T


def inner(x: Signal, y: Signal) -> float:
    """Inner product ``dt * sum(x[k] * y[k])`` over one period."""
    x.check_grid(y)
    return x.dt * float(np.dot(x.samples, y.samples))


def norm(x: Signal) -> float:
    return float(np.sqrt(max(inner(x, x), 0.0)))


def dft(x: Signal) -> Spectrum:
    return Spectrum(np.fft.fft(x.samples), x.period_T)


def idft(s: Spectrum) -> Signal:
    return Signal(np.fft.ifft(s.coefficients).real, s.period_T)


def write_csv(path, x: Signal) -> None:
    """Write ``x`` as a two-column ``t,v`` CSV file."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "v"])
        for t, v in zip(x.times, x.samples):
            w.writerow([repr(float(t)), repr(float(v))])


def read_csv(path) -> Signal:
    """Read a ``t,v`` CSV file written by :func:`write_csv`.

    The period is recovered as ``N * dt`` from the first two time stamps.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["t", "v"]:
        raise ValueError(f"{path}: expected header 't,v'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    if data.shape[0] < 2:
        raise ValueError(f"{path}: need at least 2 samples")
    t, v = data[:, 0], data[:, 1]
    dt = t[1] - t[0]
    if dt <= 0 or not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
        raise ValueError(f"{path}: time column must ascend with a uniform step")
    if abs(t[0]) > 1e-12 * max(1.0, dt):
        raise ValueError(f"{path}: time column must start at 0")
    return Signal(v, dt * len(v))
