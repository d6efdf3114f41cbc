"""Unfoldings and single-mode contractions of dense tensors.

Functions accept either a :class:`~mixrec.model.JointTensor` or a plain
ndarray. Within an unfolding the earlier modes of each ordered list vary
slowest (C order).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LengthMismatch, ModePartitionError
from .model import JointTensor


def _values(t) -> np.ndarray:
    return t.values if isinstance(t, JointTensor) else np.asarray(t, dtype=float)


@dataclass(frozen=True)
class Unfolding:
    row_modes: tuple
    col_modes: tuple
    matrix: np.ndarray


def unfold(t, row_modes: Sequence[int], col_modes: Sequence[int]) -> Unfolding:
    values = _values(t)
    row_modes = tuple(int(j) for j in row_modes)
    col_modes = tuple(int(j) for j in col_modes)
    modes = row_modes + col_modes
    if sorted(modes) != list(range(values.ndim)):
        raise ModePartitionError(
            f"rows {row_modes} and columns {col_modes} do not partition modes 0..{values.ndim - 1}"
        )
    n_rows = int(np.prod([values.shape[j] for j in row_modes], dtype=np.int64))
    matrix = np.transpose(values, modes).reshape(n_rows, -1)
    return Unfolding(row_modes, col_modes, matrix)


def mode_contract(t, mode: int, w) -> np.ndarray:
    """Contract mode ``mode`` against weights ``w``; the result has one fewer mode."""
    values = _values(t)
    w = np.asarray(w, dtype=float)
    if not 0 <= mode < values.ndim:
        raise ModePartitionError(f"mode {mode} out of range for order {values.ndim}")
    if w.shape != (values.shape[mode],):
        raise LengthMismatch(f"weights of shape {w.shape} do not match mode size {values.shape[mode]}")
    return np.tensordot(values, w, axes=([mode], [0]))
