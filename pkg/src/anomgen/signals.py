"""Variable value evaluation.

A variable's value at a timestamp is a pure function of
``(variable, t, class, seed, attempt)``.  Three kinds are supported:

* stochastic -- uniform draw from the class's range;
* composite  -- sum of waveform primitives (constant, linear, sine,
  square, sawtooth, noise), summed left to right so results are
  bit-stable;
* callback   -- a user-supplied pair of functions, one per class,
  invoked with the timestamp and a deterministic unit-draw accessor.

All numeric evaluation goes through the vectorized numpy path, even
for single timestamps, so retry candidates are bit-identical to the
values produced during chunked generation.
"""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np

from . import prng
from .config import (
    CallbackVariable,
    CompositeVariable,
    SignalPrimitive,
    StochasticVariable,
    VariableSpec,
)

log = logging.getLogger(__name__)

_TWO_PI = 2.0 * np.pi

CallbackFn = Callable[[int, "DrawAccessor"], float]


class UnresolvedCallbackError(Exception):
    """A callback variable's registry key has no registered functions."""

    def __init__(self, key: str):
        super().__init__(f"no callback registered under key {key!r}")
        self.key = key


class DrawAccessor:
    """Unit-interval draws bound to one (variable, timestamp, attempt).

    Calling the accessor with ordinal ``k`` yields the k-th independent
    uniform draw in [0, 1) for this address.  Keeping user callbacks on
    this accessor (instead of handing them a seed) preserves seeded
    repeatability and order-independence across workers.
    """

    __slots__ = ("_seed", "_stream", "_t", "_attempt")

    def __init__(self, seed: int, stream: int, t: int, attempt: int):
        self._seed = seed
        self._stream = stream
        self._t = t
        self._attempt = attempt

    def __call__(self, k: int = 0) -> float:
        return prng.draw_unit(self._seed, self._stream, self._t,
                              prng.sub_attempt(self._attempt, k))


class CallbackRegistry:
    """Maps registry keys to (normal_fn, anomalous_fn) pairs.

    Callbacks may be invoked concurrently from multiple workers; any
    synchronization they need is their own.  The registry must not be
    mutated while generation is running.
    """

    def __init__(self) -> None:
        self._entries: dict[str, tuple[CallbackFn, CallbackFn]] = {}

    def register(self, key: str, normal_fn: CallbackFn, anomalous_fn: CallbackFn) -> None:
        if not key:
            raise ValueError("registry key must be non-empty")
        if key in self._entries:
            log.warning("callback key %r re-registered; replacing previous functions", key)
        self._entries[key] = (normal_fn, anomalous_fn)

    def lookup(self, key: str) -> tuple[CallbackFn, CallbackFn]:
        try:
            return self._entries[key]
        except KeyError:
            raise UnresolvedCallbackError(key) from None

    def __contains__(self, key: str) -> bool:
        return key in self._entries


def eval_primitive_array(prim: SignalPrimitive, ts: np.ndarray,
                         noise_draws: np.ndarray | None = None) -> np.ndarray:
    """Evaluate one primitive over float64 timestamps.

    The square wave is +amplitude on the first half of each cycle and
    -amplitude on the second (half-open at the midpoint), which keeps
    integer-timestamp duty cycles exact instead of depending on the
    rounding of sin at multiples of pi.
    """
    if prim.shape == "constant":
        return np.full_like(ts, prim.offset)
    if prim.shape == "linear":
        return prim.offset + prim.amplitude * ts
    if prim.shape == "sine":
        return prim.offset + prim.amplitude * np.sin(_TWO_PI * (ts / prim.period + prim.phase))
    if prim.shape == "square":
        cycle = ts / prim.period + prim.phase
        frac = cycle - np.floor(cycle)
        return prim.offset + prim.amplitude * np.where(frac < 0.5, 1.0, -1.0)
    if prim.shape == "sawtooth":
        cycle = ts / prim.period + prim.phase
        frac = cycle - np.floor(cycle)
        return prim.offset + prim.amplitude * (2.0 * frac - 1.0)
    if prim.shape == "noise":
        if noise_draws is None:
            raise ValueError("noise primitive requires draws")
        return prim.offset + prim.amplitude * (2.0 * noise_draws - 1.0) * prim.noise_sigma
    raise ValueError(f"unknown primitive shape {prim.shape!r}")


def eval_primitive(prim: SignalPrimitive, t: int, noise_draw: float = 0.0) -> float:
    ts = np.array([t], dtype=np.float64)
    draws = np.array([noise_draw], dtype=np.float64)
    return float(eval_primitive_array(prim, ts, draws)[0])


def _composite_block(var: CompositeVariable, var_index: int, ts: np.ndarray,
                     cls: int, seed: int, attempt: int) -> np.ndarray:
    prims = var.normal if cls == prng.NORMAL else var.anomalous
    stream = prng.pack_stream(prng.PURPOSE_VALUE, cls, var_index)
    tf = ts.astype(np.float64)
    total = np.zeros(len(ts), dtype=np.float64)
    noise_ordinal = 0
    for prim in prims:
        if prim.shape == "noise":
            draws = prng.draw_unit_array(seed, stream, ts,
                                         prng.sub_attempt(attempt, noise_ordinal))
            noise_ordinal += 1
            total += eval_primitive_array(prim, tf, draws)
        else:
            total += eval_primitive_array(prim, tf)
    return total


def _callback_block(var: CallbackVariable, var_index: int, ts: np.ndarray,
                    cls: int, seed: int, attempt: int,
                    registry: CallbackRegistry | None) -> np.ndarray:
    if registry is None:
        raise UnresolvedCallbackError(var.registry_key)
    pair = registry.lookup(var.registry_key)
    fn = pair[0] if cls == prng.NORMAL else pair[1]
    stream = prng.pack_stream(prng.PURPOSE_VALUE, cls, var_index)
    out = np.empty(len(ts), dtype=np.float64)
    for i, t in enumerate(ts):
        t_int = int(t)
        out[i] = float(fn(t_int, DrawAccessor(seed, stream, t_int, attempt)))
    return out


def eval_variable_block(var: VariableSpec, var_index: int, ts: np.ndarray, cls: int,
                        seed: int, registry: CallbackRegistry | None = None,
                        attempt: int = 0) -> np.ndarray:
    """Values for one variable over an array of timestamps, one class.

    Returns int64 for discrete stochastic variables, float64 otherwise.
    """
    ts = np.asarray(ts, dtype=np.uint64)
    if isinstance(var, StochasticVariable):
        lo, hi = var.normal_range if cls == prng.NORMAL else var.anomalous_range
        stream = prng.pack_stream(prng.PURPOSE_VALUE, cls, var_index)
        return prng.draw_range_array(seed, stream, ts, lo, hi, var.discrete, attempt)
    if isinstance(var, CompositeVariable):
        return _composite_block(var, var_index, ts, cls, seed, attempt)
    if isinstance(var, CallbackVariable):
        return _callback_block(var, var_index, ts, cls, seed, attempt, registry)
    raise TypeError(f"unknown variable kind: {var!r}")


def eval_variable(var: VariableSpec, var_index: int, t: int, cls: int, seed: int,
                  registry: CallbackRegistry | None = None,
                  attempt: int = 0) -> float | int:
    """Scalar form of eval_variable_block (same bits, one timestamp)."""
    block = eval_variable_block(var, var_index, np.array([t], dtype=np.uint64),
                                cls, seed, registry, attempt)
    value = block[0]
    return int(value) if block.dtype.kind == "i" else float(value)
