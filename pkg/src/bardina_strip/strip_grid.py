"""Strip geometry, discretization and transforms.

The domain is a channel of half-width ``M`` that is periodic in the
horizontal direction: ``x1 in [0, Lx)`` with ``x1``-periodicity standing in
for the unbounded axis, and ``x2 in [-M, M]`` between two flat walls.

Fields are stored as real ``(nx, ny)`` arrays (``x1`` index first).  The
horizontal direction is handled spectrally via a real FFT, so a field has a
second, equivalent representation as ``(nx // 2 + 1, ny)`` complex Fourier
coefficient columns with the unnormalized numpy convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StripDomain",
    "Grid",
    "Field",
    "ModalField",
    "make_grid",
    "to_modal",
    "to_physical",
    "inner_product",
    "l2_norm",
]


@dataclass(frozen=True)
class StripDomain:
    """Flat strip: ``x1``-periodic with period ``lx``, walls at ``x2 = -m, +m``."""

    lx: float
    m: float

    def __post_init__(self):
        if not (np.isfinite(self.lx) and self.lx > 0):
            raise ValueError(f"lx must be positive and finite, got {self.lx}")
        if not (np.isfinite(self.m) and self.m > 0):
            raise ValueError(f"m must be positive and finite, got {self.m}")

    @property
    def b_lo(self) -> float:
        return -self.m

    @property
    def b_hi(self) -> float:
        return self.m


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform discretization of a :class:`StripDomain`.

    ``x1`` nodes are periodic (no duplicate of the seam node); ``x2`` nodes
    include both walls.  ``quad_weights`` are trapezoidal weights in ``x2``
    and sum to ``2 m`` exactly up to rounding.
    """

    domain: StripDomain
    nx: int
    ny: int
    dx: float
    dy: float
    x1: np.ndarray = field(repr=False)
    x2: np.ndarray = field(repr=False)
    quad_weights: np.ndarray = field(repr=False)
    wavenumbers: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def n_modes(self) -> int:
        return self.nx // 2 + 1

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable node coordinates ``(X1, X2)`` of shapes (nx,1), (1,ny)."""
        return self.x1[:, None], self.x2[None, :]


def make_grid(domain: StripDomain, nx: int, ny: int) -> Grid:
    """Build the uniform grid; ``nx`` must be even and >= 8, ``ny`` >= 9.

    The lower bounds guard the biharmonic stencil (five ``x2`` points plus
    four boundary rows need at least nine nodes) and the 2/3-rule dealiasing
    band (at least a couple of resolved modes).
    """
    if nx % 2 != 0:
        raise ValueError(f"nx must be even, got {nx}")
    if nx < 8:
        raise ValueError(f"nx must be >= 8, got {nx}")
    if ny < 9:
        raise ValueError(f"ny must be >= 9, got {ny}")
    dx = domain.lx / nx
    dy = 2.0 * domain.m / (ny - 1)
    x1 = dx * np.arange(nx)
    x2 = -domain.m + dy * np.arange(ny)
    qw = np.full(ny, dy)
    qw[0] = qw[-1] = 0.5 * dy
    kappa = 2.0 * np.pi * np.arange(nx // 2 + 1) / domain.lx
    return Grid(domain=domain, nx=nx, ny=ny, dx=dx, dy=dy,
                x1=x1, x2=x2, quad_weights=qw, wavenumbers=kappa)


@dataclass(eq=False)
class Field:
    """Real scalar sample on the grid nodes (stream function, vorticity, forcing).

    ``clamped=True`` marks a field expected to vanish on both walls.
    """

    grid: Grid
    values: np.ndarray
    clamped: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite entries")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), clamped=self.clamped)

    def wall_values(self) -> np.ndarray:
        return np.concatenate([self.values[:, 0], self.values[:, -1]])


@dataclass(eq=False)
class ModalField:
    """Fourier-in-``x1`` coefficient columns over the ``x2`` nodes.

    Only the nonnegative wavenumbers are stored (numpy ``rfft`` layout,
    unnormalized); the ``k = 0`` column of a real field is real.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        expected = (self.grid.n_modes, self.grid.ny)
        if self.coeffs.shape != expected:
            raise ValueError(
                f"modal shape {self.coeffs.shape} does not match grid {expected}")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("modal field contains non-finite entries")

    def copy(self) -> "ModalField":
        return ModalField(self.grid, self.coeffs.copy())


def to_modal(f: Field) -> ModalField:
    """Real FFT along ``x1`` for every ``x2`` row (unnormalized convention)."""
    return ModalField(f.grid, np.fft.rfft(f.values, axis=0))


def to_physical(m: ModalField) -> Field:
    """Inverse of :func:`to_modal`; discards the rounding-level imaginary residue."""
    return Field(m.grid, np.fft.irfft(m.coeffs, n=m.grid.nx, axis=0))


def _check_same_grid(f, h):
    ga, gb = f.grid, h.grid
    if ga is not gb and (ga.domain != gb.domain or ga.nx != gb.nx or ga.ny != gb.ny):
        raise ValueError("fields live on different grids")


def inner_product(f: Field, h: Field, w: Field | None = None) -> float:
    """L2 pairing: rectangle rule in ``x1``, trapezoid in ``x2``.

    ``w``, if given, is a positive weight field on the same grid (the square
    of the Sobolev weight), multiplied pointwise into the integrand.
    """
    _check_same_grid(f, h)
    integrand = f.values * h.values
    if w is not None:
        _check_same_grid(f, w)
        integrand = integrand * w.values
    return float(f.grid.dx * (integrand @ f.grid.quad_weights).sum())


def l2_norm(f: Field, w: Field | None = None) -> float:
    return float(np.sqrt(max(inner_product(f, f, w), 0.0)))
