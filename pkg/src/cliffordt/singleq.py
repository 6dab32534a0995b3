"""Single-qubit rotations built from HT / PHT sequences.

A length-t sequence ``(S_1, ..., S_t)`` with ``S_i`` in {HT, PHT} denotes
the operator product ``S_t ... S_2 S_1`` (``S_1`` acts first). Unitaries are
mapped to SU(2) by dividing out the principal square root of the
determinant, then described by the Euler form

    U = [[ e^{i psi} cos(phi),   e^{i chi} sin(phi)],
         [-e^{-i chi} sin(phi),  e^{-i psi} cos(phi)]],   xi = sin(phi)^2.
"""
from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .qcore import H, P, T, unitarity_defect

TWO_PI = 2.0 * np.pi
MAX_STEPS = 25
DEGENERATE_TOL = 1e-12


class SequenceStep(enum.Enum):
    HT = "HT"
    PHT = "PHT"

    @property
    def matrix(self) -> np.ndarray:
        return _STEP_MATRICES[self]


_HT = H @ T
_PHT = P @ _HT
_STEP_MATRICES = {SequenceStep.HT: _HT, SequenceStep.PHT: _PHT}
# stack index 0 -> HT, 1 -> PHT; enumeration order follows this
_STEP_STACK = np.stack([_HT, _PHT])


@dataclass(frozen=True)
class EulerParams:
    """Euler parameters of an SU(2) matrix.

    Fields are floats for a single matrix, or equal-length arrays when the
    triple describes a block of matrices (as emitted by
    :func:`enumerate_parameters`).
    """

    psi: float | np.ndarray
    chi: float | np.ndarray
    xi: float | np.ndarray

    @property
    def phi(self):
        return np.arcsin(np.sqrt(self.xi))

    def __len__(self) -> int:
        return int(np.size(self.xi))


def _wrap_angle(theta: np.ndarray) -> np.ndarray:
    out = np.mod(theta, TWO_PI)
    # mod of a tiny negative number rounds up to exactly 2*pi
    return np.where(out >= TWO_PI, 0.0, out)


def sequence_unitary(steps: Sequence[SequenceStep]) -> np.ndarray:
    """Return ``S_t ... S_1`` for ``steps = [S_1, ..., S_t]``."""
    if len(steps) == 0:
        raise ValueError("sequence must contain at least one step")
    u = np.eye(2, dtype=np.complex128)
    for s in steps:
        u = SequenceStep(s).matrix @ u
    return u


def project_su2(u: np.ndarray) -> np.ndarray:
    """Divide out the principal square root of ``det u`` (stacks allowed)."""
    u = np.asarray(u, dtype=np.complex128)
    if u.shape[-2:] != (2, 2):
        raise ValueError(f"expected 2x2 matrices, got shape {u.shape}")
    defect = unitarity_defect(u)
    if defect > 1e-8:
        raise ValueError(f"input is not unitary (defect {defect:.3g})")
    det = u[..., 0, 0] * u[..., 1, 1] - u[..., 0, 1] * u[..., 1, 0]
    # np.sqrt uses the principal branch: arg(det) in (-pi, pi]
    return u / np.sqrt(det)[..., None, None]


def euler_unitary(psi, chi, xi) -> np.ndarray:
    """Build the SU(2) matrix with the given Euler parameters."""
    psi, chi, xi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (psi, chi, xi)))
    c = np.sqrt(1.0 - xi)
    s = np.sqrt(xi)
    u = np.empty(psi.shape + (2, 2), dtype=np.complex128)
    u[..., 0, 0] = np.exp(1j * psi) * c
    u[..., 0, 1] = np.exp(1j * chi) * s
    u[..., 1, 0] = -np.exp(-1j * chi) * s
    u[..., 1, 1] = np.exp(-1j * psi) * c
    return u


def _extract(v: np.ndarray) -> EulerParams:
    a = v[..., 0, 0]
    b = v[..., 0, 1]
    xi = np.clip(np.abs(b) ** 2, 0.0, 1.0)
    psi = np.where(np.abs(a) < DEGENERATE_TOL, 0.0, _wrap_angle(np.angle(a)))
    chi = np.where(np.abs(b) < DEGENERATE_TOL, 0.0, _wrap_angle(np.angle(b)))
    if v.ndim == 2:
        return EulerParams(float(psi), float(chi), float(xi))
    return EulerParams(psi, chi, xi)


def extract_euler(v: np.ndarray) -> EulerParams:
    """Euler parameters of an SU(2) matrix (or a stack of them).

    Degenerate cases use fixed conventions: chi = 0 when |v01| < 1e-12 and
    psi = 0 when |v00| < 1e-12.
    """
    v = np.asarray(v, dtype=np.complex128)
    if v.shape[-2:] != (2, 2):
        raise ValueError(f"expected 2x2 matrices, got shape {v.shape}")
    det = v[..., 0, 0] * v[..., 1, 1] - v[..., 0, 1] * v[..., 1, 0]
    if np.max(np.abs(det - 1.0)) > 1e-10:
        raise ValueError("matrix is not in SU(2): det != 1")
    if unitarity_defect(v) > 1e-8:
        raise ValueError("matrix is not unitary")
    return _extract(v)


def branch_partner(params: EulerParams) -> EulerParams:
    """Parameters of ``-V`` given those of ``V``: (psi + pi, chi + pi, xi).

    A U(2) matrix determines its SU(2) representative only up to sign, so
    the two triples describe the same rotation.
    """
    return EulerParams(
        _wrap_angle(np.asarray(params.psi) + np.pi),
        _wrap_angle(np.asarray(params.chi) + np.pi),
        params.xi,
    )


def count_degenerate(params: EulerParams) -> int:
    """Number of triples that hit a degenerate-angle convention."""
    xi = np.asarray(params.xi)
    tol2 = DEGENERATE_TOL**2
    return int(np.count_nonzero((xi < tol2) | (xi > 1.0 - tol2)))


def _suffix_table(depth: int) -> np.ndarray:
    """All ``2^depth`` products ``S_depth ... S_1``, built one level at a time.

    Row index bits list the steps with S_1 as the most significant bit, so
    rows follow lexicographic sequence order.
    """
    table = np.eye(2, dtype=np.complex128)[None]
    for _ in range(depth):
        # new step acts last (leftmost); becomes the least significant bit
        table = np.matmul(_STEP_STACK[None, :], table[:, None]).reshape(-1, 2, 2)
    return table


def enumerate_parameters(
    t: int,
    sink: Callable[[EulerParams], None],
    block_depth: int = 12,
) -> int:
    """Visit every length-t HT/PHT sequence once and emit its Euler parameters.

    The first ``t - block_depth`` steps are walked depth first with an
    incrementally updated prefix product; each prefix is then extended by a
    precomputed table of all ``2^block_depth`` suffix products in one
    vectorised multiply. ``sink`` receives one :class:`EulerParams` block
    (array fields) per prefix, in lexicographic sequence order (HT < PHT).
    Returns the number of sequences, ``2^t``.
    """
    if not 1 <= t <= MAX_STEPS:
        if t > MAX_STEPS:
            warnings.warn(
                f"t={t} would enumerate 2^{t} sequences; the limit is {MAX_STEPS}",
                ResourceWarning,
                stacklevel=2,
            )
        raise ValueError(f"t must be in [1, {MAX_STEPS}], got {t}")
    depth = min(t, block_depth)
    suffixes = _suffix_table(depth)
    prefix_len = t - depth
    count = 0

    def walk(level: int, prefix: np.ndarray) -> None:
        nonlocal count
        if level == prefix_len:
            block = np.matmul(suffixes, prefix)
            sink(_extract(project_su2(block)))
            count += block.shape[0]
            return
        for step in _STEP_STACK:
            walk(level + 1, step @ prefix)

    walk(0, np.eye(2, dtype=np.complex128))
    return count


def all_sequences(t: int) -> Iterable[tuple[SequenceStep, ...]]:
    """Every length-t sequence in lexicographic order (HT < PHT)."""
    return itertools.product((SequenceStep.HT, SequenceStep.PHT), repeat=t)
