"""Anisotropic Helmholtz operator ``I - alpha^2 d1^2`` and its inverse.

Acting only in the periodic direction, the operator is diagonal over the
Fourier modes with multiplier ``1 + alpha^2 kappa^2 >= 1``, so the inverse
(the horizontal filter) is a plain modal division: smoothing in ``x1``,
``x2`` structure untouched, no boundary conditions needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .strip_grid import Field, Grid

__all__ = ["FilterSpec", "apply_Ah", "invert_Ah", "helmholtz_multiplier"]


@dataclass(frozen=True)
class FilterSpec:
    """Filter length scale; ``alpha = 0`` is the identity."""

    alpha: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")


def helmholtz_multiplier(grid: Grid, spec: FilterSpec) -> np.ndarray:
    """Per-mode symbol ``1 + alpha^2 kappa_k^2``."""
    return 1.0 + (spec.alpha * grid.wavenumbers) ** 2


def _modal_scale(f: Field, scale: np.ndarray) -> Field:
    coeffs = np.fft.rfft(f.values, axis=0)
    coeffs *= scale[:, None]
    return Field(f.grid, np.fft.irfft(coeffs, n=f.grid.nx, axis=0), clamped=f.clamped)


def apply_Ah(f: Field, spec: FilterSpec) -> Field:
    """Multiply each mode by ``1 + alpha^2 kappa^2``."""
    return _modal_scale(f, helmholtz_multiplier(f.grid, spec))


def invert_Ah(f: Field, spec: FilterSpec) -> Field:
    """Divide each mode by ``1 + alpha^2 kappa^2`` (never singular)."""
    return _modal_scale(f, 1.0 / helmholtz_multiplier(f.grid, spec))
