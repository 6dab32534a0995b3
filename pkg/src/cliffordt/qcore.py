"""Dense unitary algebra for Clifford+T circuits.

Convention: qubit 0 is the most significant bit of a basis-state index, so
for n qubits the full operator acting as ``g`` on qubit ``q`` is
``I_{2^q} (x) g (x) I_{2^(n-q-1)}``.

All functions accept stacks of matrices with leading batch axes
(``(..., dim, dim)``) and never modify their inputs.
"""
from __future__ import annotations

import numpy as np

UNITARY_TOL = 1e-10

_S2 = 1.0 / np.sqrt(2.0)

H = np.array([[_S2, _S2], [_S2, -_S2]], dtype=np.complex128)
P = np.array([[1, 0], [0, 1j]], dtype=np.complex128)
T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=np.complex128)
CZ = np.diag([1, 1, 1, -1]).astype(np.complex128)

GATES = {"H": H, "P": P, "T": T, "CZ": CZ}

for _g in GATES.values():
    _g.setflags(write=False)


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128)


def num_qubits(dim: int) -> int:
    """Return n with ``dim == 2**n``; raise if dim is not a power of two."""
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of 2")
    return n


def _check_square(a: np.ndarray, name: str = "matrix") -> int:
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a.shape[-1]


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product ``a @ b`` of equal-dimension square matrices."""
    a = np.asarray(a)
    b = np.asarray(b)
    if _check_square(a, "a") != _check_square(b, "b"):
        raise ValueError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    return np.matmul(a, b)


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(np.asarray(a), -1, -2))


def unitarity_defect(u: np.ndarray) -> float:
    """Return ``max_ij |(U^dagger U - I)_ij|`` (maximised over any batch axes)."""
    u = np.asarray(u)
    dim = _check_square(u)
    return float(np.max(np.abs(np.matmul(dagger(u), u) - np.eye(dim))))


def apply_single_qubit_gate(u: np.ndarray, qubit: int, g: np.ndarray) -> np.ndarray:
    """Left-multiply ``u`` by ``g`` acting on ``qubit``.

    The Kronecker-expanded operator is never formed: rows of ``u`` are viewed
    as ``(2^q, 2, 2^(n-q-1))`` blocks and ``g`` mixes the middle axis, which
    costs O(dim^2) multiply-adds per matrix.

    ``g`` may be a single 2x2 gate or a stack ``(..., 2, 2)`` broadcasting
    against the batch axes of ``u`` (one gate per matrix).
    """
    u = np.asarray(u)
    g = np.asarray(g)
    dim = _check_square(u, "u")
    n = num_qubits(dim)
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n} qubits")
    if g.shape[-2:] != (2, 2):
        raise ValueError(f"gate must be 2x2, got shape {g.shape}")
    batch = u.shape[:-2]
    blocks = u.reshape(*batch, 1 << qubit, 2, (dim >> (qubit + 1)) * dim)
    # insert the block axis so a stacked g broadcasts per matrix
    out = np.matmul(g[..., None, :, :], blocks)
    return out.reshape(out.shape[:-3] + (dim, dim))


def cz_layer_diagonal(n: int) -> np.ndarray:
    """Diagonal (+-1) of the product of CZ on pairs (q, q+1), q = 0..n-2."""
    if n < 2:
        raise ValueError(f"CZ layer needs at least 2 qubits, got {n}")
    idx = np.arange(1 << n)
    sign = np.zeros(idx.shape, dtype=np.int64)
    for q in range(n - 1):
        hi = (idx >> (n - 1 - q)) & 1
        lo = (idx >> (n - 2 - q)) & 1
        sign ^= hi & lo
    return np.where(sign == 1, -1.0, 1.0)


def apply_cz_layer(u: np.ndarray, n: int) -> np.ndarray:
    """Left-multiply ``u`` by the open-line nearest-neighbour CZ layer."""
    u = np.asarray(u)
    diag = cz_layer_diagonal(n)
    if _check_square(u, "u") != diag.size:
        raise ValueError(f"matrix dimension {u.shape[-1]} does not match {n} qubits")
    return u * diag[:, None]


def haar_cue_sample(dim: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw Haar-random unitaries (CUE) of dimension ``dim``.

    QR-decomposes a complex Ginibre matrix and rescales the columns of Q so
    that the diagonal of R becomes positive real, which makes the result
    exactly Haar distributed. ``size`` returns a stack of that many samples.
    """
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    shape = (dim, dim) if size is None else (size, dim, dim)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    absd = np.abs(d)
    phase = np.where(absd > 0, d / np.where(absd > 0, absd, 1.0), 1.0)
    return q * phase[..., None, :]
