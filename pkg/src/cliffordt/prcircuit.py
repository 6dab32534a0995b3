"""Clifford+T pseudo-random circuits on an open line of qubits.

One time step applies HT (coin 0) or PHT (coin 1) to every qubit and then CZ
between every nearest-neighbour pair (q, q+1). Coins are independent fair
bits drawn step-major, qubit-ascending from a per-instance generator.

RNG discipline: instance ``i`` of an ensemble with master seed ``s`` draws
from ``numpy.random.default_rng(SeedSequence(s, spawn_key=(i,)))``. A single
circuit built from a :class:`CircuitConfig` uses instance index 0, so it is
identical to instance 0 of an ensemble with the same seed.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .qcore import apply_cz_layer, apply_single_qubit_gate, identity
from .singleq import SequenceStep

SOFT_MAX_QUBITS = 12
HARD_MAX_QUBITS = 14

_STEP_GATES = np.stack([SequenceStep.HT.matrix, SequenceStep.PHT.matrix])


@dataclass(frozen=True)
class CircuitConfig:
    n: int
    t: int
    seed: int
    topology: str = "open-line"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need n >= 2 qubits, got {self.n}")
        if self.t < 0:
            raise ValueError(f"t must be non-negative, got {self.t}")
        if self.topology != "open-line":
            raise ValueError(f"unsupported topology {self.topology!r}")


@dataclass(frozen=True)
class EnsembleSpec:
    n: int
    t_max: int
    r: int
    seed: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need n >= 2 qubits, got {self.n}")
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if self.r < 1:
            raise ValueError(f"sample count r must be >= 1, got {self.r}")


def check_qubit_count(n: int) -> None:
    if n < 2:
        raise ValueError(f"need n >= 2 qubits, got {n}")
    if n > HARD_MAX_QUBITS:
        raise MemoryError(
            f"n={n} exceeds the hard cap of {HARD_MAX_QUBITS} qubits for dense unitaries"
        )
    if n > SOFT_MAX_QUBITS:
        gb = (1 << (2 * n)) * 16 / 1e9
        warnings.warn(f"n={n}: each dense unitary needs {gb:.1f} GB", ResourceWarning, stacklevel=3)


def instance_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def draw_coins(rng: np.random.Generator, t: int, n: int) -> np.ndarray:
    """Boolean coins of shape (t, n); True selects PHT."""
    return rng.integers(0, 2, size=(t, n)).astype(bool)


def step_unitary_apply(u: np.ndarray, n: int, coins) -> np.ndarray:
    """Left-apply one circuit step to ``u``.

    ``coins`` has shape (n,) for a single matrix, or (batch, n) for a stack
    ``u`` of shape (batch, 2^n, 2^n).
    """
    coins = np.asarray(coins, dtype=bool)
    if coins.shape[-1] != n:
        raise ValueError(f"expected {n} coins per step, got shape {coins.shape}")
    for q in range(n):
        u = apply_single_qubit_gate(u, q, _STEP_GATES[coins[..., q].astype(np.intp)])
    return apply_cz_layer(u, n)


def replay(n: int, coins: np.ndarray) -> np.ndarray:
    """Rebuild a circuit unitary from its coin transcript, shape (t, n)."""
    u = identity(1 << n)
    for step_coins in np.asarray(coins, dtype=bool):
        u = step_unitary_apply(u, n, step_coins)
    return u


def build_unitary(cfg: CircuitConfig) -> tuple[np.ndarray, np.ndarray]:
    """Build the circuit unitary and return it with its (t, n) coin transcript."""
    check_qubit_count(cfg.n)
    coins = draw_coins(instance_rng(cfg.seed, 0), cfg.t, cfg.n)
    return replay(cfg.n, coins), coins


def l_values(u: np.ndarray) -> np.ndarray:
    """``ln(N |U_ij|^2)`` elementwise; exact zeros map to ``-inf``."""
    dim = u.shape[-1]
    with np.errstate(divide="ignore"):
        return np.log(dim * (u.real**2 + u.imag**2))


def default_batch_size(n: int, budget_bytes: int = 1 << 26) -> int:
    return max(1, budget_bytes // ((1 << (2 * n)) * 16))


def sample_ensemble(
    spec: EnsembleSpec,
    sink: Callable[[int, np.ndarray], None],
    batch_size: int | None = None,
) -> int:
    """Build ``spec.r`` circuits and stream their l-values after every step.

    ``sink(t, l)`` is called for t = 1..t_max and each batch of instances, with
    ``l`` of shape (batch, N*N) holding row-major ``ln(N |U_ij|^2)`` values.
    Instances are processed in index order; results do not depend on
    ``batch_size``. Returns ``spec.r``.
    """
    n = spec.n
    check_qubit_count(n)
    dim = 1 << n
    if batch_size is None:
        batch_size = default_batch_size(n)
    for start in range(0, spec.r, batch_size):
        idx = range(start, min(start + batch_size, spec.r))
        coins = np.stack([draw_coins(instance_rng(spec.seed, i), spec.t_max, n) for i in idx])
        u = np.broadcast_to(identity(dim), (len(idx), dim, dim)).copy()
        for t in range(1, spec.t_max + 1):
            u = step_unitary_apply(u, n, coins[:, t - 1])
            sink(t, l_values(u).reshape(len(idx), dim * dim))
    return spec.r
