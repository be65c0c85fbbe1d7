"""Grünwald–Letnikov differintegration on uniform grids.

The Caputo derivative of order ``0 < q < 1`` is realized by applying the GL
convolution to ``f - f(t0)``; for that operand class the two definitions
coincide, and constants are annihilated exactly. Fractional integrals use the
same convolution with a negative order and no initial-value subtraction.

All operators live on the sampling grid of their operand; nothing is
interpolated. A finite ``memory_len`` truncates the convolution (short-memory
principle) so that long runs have bounded per-sample cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

DEFAULT_MEMORY = 4000


class GridError(ValueError):
    """Operand does not sit on the evaluator's grid."""


def gl_weights(q: float, n: int) -> np.ndarray:
    """Return the first ``n`` Grünwald–Letnikov weights for order ``q``.

    ``w_0 = 1`` and ``w_k = w_{k-1} * (1 - (q + 1) / k)``, i.e. the signed
    binomial coefficients ``(-1)^k C(q, k)``.
    """
    if n < 1:
        raise ValueError(f"need at least one weight, got n={n}")
    w = np.empty(n)
    w[0] = 1.0
    for k in range(1, n):
        w[k] = w[k - 1] * (1.0 - (q + 1.0) / k)
    return w


@lru_cache(maxsize=64)
def _reversed_weights(q: float, n: int) -> np.ndarray:
    wr = gl_weights(q, n)[::-1].copy()
    wr.setflags(write=False)
    return wr


def _check_order(q: float) -> None:
    if not abs(q) < 2:
        raise ValueError(f"order must satisfy |q| < 2, got {q}")


@dataclass(frozen=True)
class GLKernel:
    """Order, grid step and memory length of one GL convolution."""

    q: float
    h: float
    memory_len: int = DEFAULT_MEMORY

    def __post_init__(self):
        _check_order(self.q)
        if self.h <= 0:
            raise ValueError(f"grid step must be positive, got {self.h}")
        if self.memory_len < 1:
            raise ValueError(f"memory_len must be positive, got {self.memory_len}")

    @property
    def weights(self) -> np.ndarray:
        return _reversed_weights(float(self.q), int(self.memory_len))[::-1]

    @property
    def scale(self) -> float:
        return self.h ** (-self.q)


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled scalar or vector series.

    ``values`` has shape ``(n,)`` or ``(n, d)``; sample ``j`` sits at
    ``t0 + j * h``.
    """

    values: np.ndarray
    h: float
    t0: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim not in (1, 2):
            raise ValueError("values must be 1-D or 2-D")
        if self.h <= 0:
            raise ValueError(f"grid step must be positive, got {self.h}")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(len(self))

    @classmethod
    def from_function(cls, fn, t0: float, t1: float, h: float) -> "SampledSignal":
        n = int(round((t1 - t0) / h)) + 1
        t = t0 + h * np.arange(n)
        return cls(np.asarray(fn(t), dtype=float), h, t0)


def _gl_point(wr: np.ndarray, window: np.ndarray, scale: float):
    # Shared by batch and streaming paths so both round identically.
    m = window.shape[0]
    return scale * (wr[wr.shape[0] - m:] @ window)


def _gl_batch(x: np.ndarray, q: float, h: float, memory_len: int) -> np.ndarray:
    wr = _reversed_weights(float(q), int(memory_len))
    scale = h ** (-q)
    out = np.empty_like(x)
    for j in range(x.shape[0]):
        lo = max(0, j + 1 - memory_len)
        out[j] = _gl_point(wr, x[lo:j + 1], scale)
    return out


def caputo_gl(f: SampledSignal, q: float, memory_len: int = DEFAULT_MEMORY) -> SampledSignal:
    """Caputo derivative of order ``q`` in (0, 1), GL-discretized.

    Computes ``h**-q * sum_k w_k * (f[j-k] - f[0])`` over at most
    ``memory_len`` terms.
    """
    if not 0 < q < 1:
        raise ValueError(f"Caputo path needs 0 < q < 1, got {q}")
    if len(f) == 0:
        raise ValueError("empty signal")
    x = f.values - f.values[0]
    return SampledSignal(_gl_batch(x, q, f.h, memory_len), f.h, f.t0)


def frac_integral(f: SampledSignal, q: float, memory_len: int = DEFAULT_MEMORY) -> SampledSignal:
    """Fractional integral of order ``q > 0`` (GL with order ``-q``)."""
    if q <= 0:
        raise ValueError(f"integral order must be positive, got {q}")
    _check_order(-q)
    if len(f) == 0:
        raise ValueError("empty signal")
    return SampledSignal(_gl_batch(f.values, -q, f.h, memory_len), f.h, f.t0)


@dataclass
class GLStream:
    """Online GL evaluator: one sample in, one differintegral value out.

    With ``caputo=True`` the first sample is taken as the initial value and
    subtracted from everything that follows. Feeding the samples of a signal
    one by one reproduces :func:`caputo_gl` (or the plain GL sum) bit for bit
    when ``memory_len`` matches.
    """

    kernel: GLKernel
    caputo: bool = True
    _buf: np.ndarray | None = field(default=None, repr=False)
    _count: int = 0
    _origin: np.ndarray | float | None = None
    _t_last: float | None = None

    def push(self, x, t: float | None = None):
        k = self.kernel
        if t is not None:
            if self._t_last is not None:
                step = t - self._t_last
                if step <= 0:
                    raise GridError(f"time went backwards: {self._t_last} -> {t}")
                if abs(step - k.h) > 1e-9 * max(1.0, abs(t)):
                    raise GridError(f"sample at t={t} is off the grid of step {k.h}")
            self._t_last = t
        x = np.asarray(x, dtype=float)
        n = k.memory_len
        if self._buf is None:
            self._buf = np.zeros((2 * n,) + x.shape)
            self._origin = x.copy() if self.caputo else np.zeros_like(x)
        v = x - self._origin
        i = self._count % n
        self._buf[i] = v
        self._buf[i + n] = v
        self._count += 1
        if self._count <= n:
            window = self._buf[:self._count]
        else:
            start = self._count % n
            window = self._buf[start:start + n]
        return _gl_point(_reversed_weights(float(k.q), n), window, k.scale)

    @property
    def count(self) -> int:
        return self._count

    def reset(self) -> None:
        self._buf = None
        self._count = 0
        self._origin = None
        self._t_last = None


def gl_streaming_state(kernel: GLKernel, caputo: bool = True) -> GLStream:
    """Fresh incremental evaluator for ``kernel``."""
    if caputo and not 0 < kernel.q < 1:
        raise ValueError(f"Caputo streaming needs 0 < q < 1, got {kernel.q}")
    return GLStream(kernel, caputo=caputo)
