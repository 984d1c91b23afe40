"""Quantities mirroring the model's estimate chains.

Per-record scalars: the energy ``E = |grad v|^2 + alpha^2 |d1 grad v|^2``
and dissipation ``D = nu (|lap v|^2 + alpha^2 |d1 lap v|^2)``, their
weighted counterparts, the anisotropic space norms, discrete budget
residuals and the advective CFL number.  Post-processing turns a recorded
trajectory into budget reports, a time-translation compactness modulus, a
grid-refinement Cauchy table and weighted Poincare audits.

Testing the evolution equation against ``v`` gives the exact balance
``dE/dt + 2 D = -2 (g, v)``, so the budget residual is formed with the
forcing power ``P = -(g, v)``; the inequality form replaces the power by
the bound ``|g|^2 / (nu lambda1^2)``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .operators import OperatorSet, d1_wavenumber_factor, d2_values
from .strip_grid import Field, Grid, inner_product, l2_norm
from .weights import WeightField, WeightSpec, make_weight_field

__all__ = [
    "CSV_COLUMNS",
    "DiagnosticsRecord",
    "DiagnosticsSeries",
    "DiagnosticsCollector",
    "Lambda1Estimate",
    "lambda1_estimate",
    "BudgetReport",
    "energy_budget",
    "WeightedBudgetReport",
    "weighted_energy_budget",
    "FieldTrajectory",
    "TranslationModulus",
    "translation_modulus",
    "StreamingTranslationModulus",
    "RefinementStudy",
    "galerkin_refinement_study",
    "prolong",
    "trajectory_h2h_distance",
    "PoincareReport",
    "poincare_check",
    "random_clamped_field",
    "weak_residual",
]

CSV_COLUMNS = (
    "t", "E", "D", "E_w", "D_w", "norm_l2", "norm_h1h", "norm_h2h_gamma",
    "norm_h3h_gamma", "budget_residual", "weighted_budget_residual", "cfl",
)


@dataclass
class DiagnosticsRecord:
    t: float
    energy: float
    dissipation: float
    energy_w: float
    dissipation_w: float
    norm_l2: float
    norm_h1h: float
    norm_h2h_gamma: float
    norm_h3h_gamma: float
    budget_residual: float
    weighted_budget_residual: float
    cfl: float
    norm_vt: float = 0.0
    forcing_power: float = 0.0
    forcing_power_w: float = 0.0

    def csv_values(self) -> tuple[float, ...]:
        return (self.t, self.energy, self.dissipation, self.energy_w,
                self.dissipation_w, self.norm_l2, self.norm_h1h,
                self.norm_h2h_gamma, self.norm_h3h_gamma,
                self.budget_residual, self.weighted_budget_residual, self.cfl)


@dataclass
class DiagnosticsSeries:
    records: list[DiagnosticsRecord] = dc_field(default_factory=list)
    meta: dict = dc_field(default_factory=dict)

    @classmethod
    def for_run(cls, **meta) -> "DiagnosticsSeries":
        return cls(records=[], meta=meta)

    def append(self, rec: DiagnosticsRecord):
        self.records.append(rec)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class Lambda1Estimate:
    """First Dirichlet eigenvalue of ``-d2^2`` on ``[-m, m]`` (k = 0 mode)."""

    value: float
    analytic: float

    @property
    def relative_error(self) -> float:
        return abs(self.value - self.analytic) / self.analytic


def lambda1_estimate(grid: Grid) -> Lambda1Estimate:
    ny, dy, m = grid.ny, grid.dy, grid.domain.m
    n = ny - 2
    diag_main = np.full(n, 2.0 / dy ** 2)
    diag_off = np.full(n - 1, -1.0 / dy ** 2)
    lam = eigvalsh_tridiagonal(diag_main, diag_off, select="i", select_range=(0, 0))
    return Lambda1Estimate(value=float(lam[0]), analytic=(np.pi / (2.0 * m)) ** 2)


class DiagnosticsCollector:
    """Computes one :class:`DiagnosticsRecord` per call, with budget memory.

    Derivatives are evaluated from a single forward transform of the state
    (the same stencils as :class:`OperatorSet`); quadratures run on the raw
    arrays since this sits on the per-step hot path.  The forcing-power
    term uses the forcing sampled at the start of the run, so the budget
    columns are meaningful for the model's time-independent forcing only.
    """

    def __init__(self, grid: Grid, ops: OperatorSet, nu: float, alpha: float,
                 weight: WeightField, g: Field, dt: float):
        self.grid = grid
        self.ops = ops
        self.nu = nu
        self.alpha = alpha
        self.weight = weight
        self.g = g
        self.dt = dt
        self.g_norm = l2_norm(g)
        self.lambda1 = lambda1_estimate(grid).value
        self._qw = grid.dx * grid.quad_weights
        self._qw_phi = self._qw * weight.phi
        self._ik = None
        self._prev: tuple[float, float, float, np.ndarray] | None = None

    def _q(self, arr: np.ndarray, weighted: bool) -> float:
        w = self._qw_phi if weighted else self._qw
        if w.ndim == 1:
            return float(((arr * arr) @ w).sum())
        return float((arr * arr * w).sum())

    def _pair(self, a: np.ndarray, b: np.ndarray, weighted: bool) -> float:
        w = self._qw_phi if weighted else self._qw
        if w.ndim == 1:
            return float(((a * b) @ w).sum())
        return float((a * b * w).sum())

    def record(self, t: float, v: Field, cfl: float) -> DiagnosticsRecord:
        if self._ik is None:
            self._ik = d1_wavenumber_factor(self.grid)[:, None]
        with np.errstate(over="ignore", invalid="ignore"):
            return self._record(t, v, cfl)

    def _record(self, t: float, v: Field, cfl: float) -> DiagnosticsRecord:
        grid, nx = self.grid, self.grid.nx
        a2 = self.alpha ** 2
        c = np.fft.rfft(v.values, axis=0)
        d1v = np.fft.irfft(self._ik * c, n=nx, axis=0)
        d1d1 = np.fft.irfft(self._ik ** 2 * c, n=nx, axis=0)
        lap_modal = self.ops.laplacian_modal(c)
        lap = np.fft.irfft(lap_modal, n=nx, axis=0)
        d1lap = np.fft.irfft(self._ik * lap_modal, n=nx, axis=0)
        d2v = d2_values(v.values, grid.dy)
        d1d2 = d2_values(d1v, grid.dy)

        grad_sq = self._q(d1v, False) + self._q(d2v, False)
        d1grad_sq = self._q(d1d1, False) + self._q(d1d2, False)
        energy = grad_sq + a2 * d1grad_sq
        dissipation = self.nu * (self._q(lap, False) + a2 * self._q(d1lap, False))

        grad_sq_w = self._q(d1v, True) + self._q(d2v, True)
        d1grad_sq_w = self._q(d1d1, True) + self._q(d1d2, True)
        energy_w = grad_sq_w + a2 * d1grad_sq_w
        dissipation_w = self.nu * (self._q(lap, True) + a2 * self._q(d1lap, True))

        v_sq = self._q(v.values, False)
        v_sq_w = self._q(v.values, True)
        h2h_w_sq = v_sq_w + grad_sq_w + d1grad_sq_w
        norm_h3h = math.sqrt(h2h_w_sq + self._q(d1lap, True))

        power = -self._pair(self.g.values, v.values, False)
        power_w = -self._pair(self.g.values, v.values, True)

        residual = 0.0
        residual_w = 0.0
        norm_vt = 0.0
        if self._prev is not None:
            t0, e0, ew0, v0 = self._prev
            dtr = t - t0
            if dtr > 0:
                residual = (energy - e0) / dtr + 2.0 * dissipation - 2.0 * power
                residual_w = (energy_w - ew0) / dtr + 2.0 * dissipation_w - 2.0 * power_w
                norm_vt = math.sqrt(self._q(v.values - v0, False)) / dtr
        self._prev = (t, energy, energy_w, v.values.copy())

        return DiagnosticsRecord(
            t=t, energy=energy, dissipation=dissipation,
            energy_w=energy_w, dissipation_w=dissipation_w,
            norm_l2=math.sqrt(v_sq),
            norm_h1h=math.sqrt(v_sq + self._q(d1v, False)),
            norm_h2h_gamma=math.sqrt(h2h_w_sq),
            norm_h3h_gamma=norm_h3h,
            budget_residual=residual, weighted_budget_residual=residual_w,
            cfl=cfl, norm_vt=norm_vt,
            forcing_power=power, forcing_power_w=power_w)


# ---------------------------------------------------------------------------
# Budgets
# ---------------------------------------------------------------------------

@dataclass
class BudgetReport:
    """Discrete energy balance along a recorded trajectory.

    ``residuals[n] = (E_n - E_{n-1}) / dt + 2 D_n - 2 P_n`` should be
    nonpositive up to discretization error for the dissipative schemes;
    ``excess_over_bound`` measures violation of the closed inequality
    ``dE/dt + D <= |g|^2 / (nu lambda1^2)``.
    """

    times: np.ndarray
    residuals: np.ndarray
    excess_over_bound: np.ndarray
    bound: float
    energy_increases: np.ndarray

    @property
    def max_positive_residual(self) -> float:
        return float(max(self.residuals.max(initial=0.0), 0.0))

    @property
    def max_excess(self) -> float:
        return float(max(self.excess_over_bound.max(initial=0.0), 0.0))

    @property
    def max_energy_increase(self) -> float:
        return float(max(self.energy_increases.max(initial=0.0), 0.0))


def energy_budget(series: DiagnosticsSeries) -> BudgetReport:
    t = series.column("t")
    e = series.column("energy")
    d = series.column("dissipation")
    p = series.column("forcing_power")
    nu = series.meta["nu"]
    lam = series.meta["lambda1"]
    g_norm = series.meta["g_norm"]
    bound = g_norm ** 2 / (nu * lam ** 2)
    dts = np.diff(t)
    dedt = np.diff(e) / dts
    residuals = dedt + 2.0 * d[1:] - 2.0 * p[1:]
    excess = np.maximum(dedt + d[1:] - bound, 0.0)
    return BudgetReport(times=t[1:], residuals=residuals,
                        excess_over_bound=excess, bound=bound,
                        energy_increases=np.maximum(np.diff(e), 0.0))


@dataclass
class WeightedBudgetReport:
    """Boundedness summary of the weighted energy along a trajectory."""

    times: np.ndarray
    energy_w: np.ndarray
    dissipation_w: np.ndarray
    residuals_w: np.ndarray

    @property
    def sup_energy(self) -> float:
        return float(self.energy_w.max())

    @property
    def initial_energy(self) -> float:
        return float(self.energy_w[0])

    @property
    def dissipation_integral(self) -> float:
        return float(np.trapezoid(self.dissipation_w, self.times))


def weighted_energy_budget(series: DiagnosticsSeries) -> WeightedBudgetReport:
    return WeightedBudgetReport(
        times=series.column("t"),
        energy_w=series.column("energy_w"),
        dissipation_w=series.column("dissipation_w"),
        residuals_w=series.column("weighted_budget_residual")[1:])


# ---------------------------------------------------------------------------
# Field trajectories, norms and the translation modulus
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FieldTrajectory:
    """Uniformly spaced field records ``(times[i], fields[i])``."""

    times: list[float] = dc_field(default_factory=list)
    fields: list[Field] = dc_field(default_factory=list)

    def append(self, t: float, f: Field):
        self.times.append(t)
        self.fields.append(f.copy())

    @property
    def dt_record(self) -> float:
        if len(self.times) < 2:
            raise ValueError("trajectory needs at least two records")
        return self.times[1] - self.times[0]

    def __len__(self) -> int:
        return len(self.times)


_NORM_CHANNELS = {"l2": 1, "h1h": 2, "h2h": 5}


def norm_channels(v: Field, ops: OperatorSet, psi_sqrt_quad: np.ndarray,
                  norm: str = "h2h") -> np.ndarray:
    """Stacked integrand channels whose squared sum is the space norm squared.

    ``l2``: the field; ``h1h`` adds ``d1 f``; ``h2h`` adds the gradient and
    ``d1`` of the gradient.  Each channel is premultiplied by
    ``psi * sqrt(dx * quad_weights)`` so that a Euclidean inner product of
    two channel stacks equals the weighted quadrature pairing.
    """
    if norm not in _NORM_CHANNELS:
        raise ValueError(f"norm must be one of {sorted(_NORM_CHANNELS)}, got {norm!r}")
    chans = [v.values]
    if norm in ("h1h", "h2h"):
        d1v = ops.d1(v)
        chans.append(d1v.values)
        if norm == "h2h":
            d2v = ops.d2(v)
            chans.extend([d2v.values, ops.d1(d1v).values, ops.d1(d2v).values])
    return np.stack([c * psi_sqrt_quad for c in chans])


def _psi_sqrt_quad(grid: Grid, weight: WeightField | None) -> np.ndarray:
    q = np.sqrt(grid.dx * grid.quad_weights)[None, :]
    if weight is None:
        return np.broadcast_to(q, grid.shape).copy()
    return weight.psi * q


@dataclass
class TranslationModulus:
    """``M(k)`` table with its log-log slope and square-root envelope."""

    k_values: np.ndarray
    modulus: np.ndarray

    @property
    def slope(self) -> float:
        keep = self.modulus > 0
        if keep.sum() < 2:
            return float("nan")
        coef = np.polyfit(np.log(self.k_values[keep]), np.log(self.modulus[keep]), 1)
        return float(coef[0])

    def envelope_dominates(self) -> bool:
        """Largest-k calibrated ``C k^(1/2)`` envelope bounds every entry."""
        kmax = self.k_values[-1]
        env = self.modulus[-1] * np.sqrt(self.k_values / kmax)
        return bool(np.all(self.modulus <= env * (1.0 + 1e-12)))


class StreamingTranslationModulus:
    """Accumulates ``M(k)^2 = sum_n dt |v(t_n + k) - v(t_n)|^2`` on the fly.

    Records must arrive at a fixed cadence; ``k_lags`` are lags in record
    units.  Channel stacks are cached so each pair costs one dot product.
    """

    def __init__(self, grid: Grid, ops: OperatorSet, k_lags: list[int],
                 dt_record: float, norm: str = "h2h",
                 weight: WeightField | None = None, tau: float = 0.0):
        if any(l <= 0 for l in k_lags):
            raise ValueError("lags must be positive")
        self.k_lags = sorted(k_lags)
        self.dt_record = dt_record
        self.norm = norm
        self.tau = tau
        self.ops = ops
        self._psi_q = _psi_sqrt_quad(grid, weight)
        self._buffer: deque[tuple[float, np.ndarray]] = deque(
            maxlen=self.k_lags[-1] + 1)
        self._sums = {lag: 0.0 for lag in self.k_lags}

    def add(self, t: float, v: Field):
        feats = norm_channels(v, self.ops, self._psi_q, self.norm)
        self._buffer.append((t, feats))
        n = len(self._buffer)
        for lag in self.k_lags:
            if n > lag:
                t0, f0 = self._buffer[n - 1 - lag]
                if t0 >= self.tau - 1e-12:
                    diff = feats - f0
                    self._sums[lag] += self.dt_record * float(np.vdot(diff, diff).real)

    def result(self) -> TranslationModulus:
        k = np.array([lag * self.dt_record for lag in self.k_lags])
        m = np.array([math.sqrt(self._sums[lag]) for lag in self.k_lags])
        return TranslationModulus(k_values=k, modulus=m)


def translation_modulus(traj: FieldTrajectory, k_list, norm: str = "h2h",
                        spec: WeightSpec | None = None,
                        tau: float = 0.0) -> TranslationModulus:
    """Post-hoc modulus of a stored trajectory; ``k_list`` in time units.

    Every ``k`` must be a multiple of the record spacing and smaller than
    the trajectory span.
    """
    dt_rec = traj.dt_record
    span = traj.times[-1] - traj.times[0]
    lags = []
    for k in k_list:
        lag = round(k / dt_rec)
        if abs(lag * dt_rec - k) > 1e-9 * max(k, dt_rec):
            raise ValueError(f"k = {k} is not a multiple of the record spacing {dt_rec}")
        if k >= span:
            raise ValueError(f"k = {k} exceeds the trajectory span {span}")
        lags.append(lag)
    grid = traj.fields[0].grid
    ops = OperatorSet(grid, dealias=False)
    weight = make_weight_field(grid, spec) if spec is not None else None
    acc = StreamingTranslationModulus(grid, ops, lags, dt_rec, norm=norm,
                                      weight=weight, tau=tau)
    for t, f in zip(traj.times, traj.fields):
        acc.add(t, f)
    return acc.result()


# ---------------------------------------------------------------------------
# Refinement Cauchy study
# ---------------------------------------------------------------------------

def prolong(f: Field, fine: Grid) -> Field:
    """Embed a coarse field: spectral padding in ``x1``, linear in ``x2``.

    Requires the nesting ``nx_f = 2 nx_c`` and ``ny_f = 2 ny_c - 1``.
    """
    coarse = f.grid
    if fine.nx != 2 * coarse.nx or fine.ny != 2 * coarse.ny - 1:
        raise ValueError(
            f"grids are not nested: {coarse.shape} -> {fine.shape}")
    c = np.fft.rfft(f.values, axis=0) * (fine.nx / coarse.nx)
    cf = np.zeros((fine.n_modes, coarse.ny), dtype=np.complex128)
    cf[:coarse.n_modes] = c
    cf[coarse.n_modes - 1] *= 0.5  # split the coarse Nyquist cosine
    vals_x = np.fft.irfft(cf, n=fine.nx, axis=0)
    out = np.empty((fine.nx, fine.ny))
    out[:, ::2] = vals_x
    out[:, 1::2] = 0.5 * (vals_x[:, :-1] + vals_x[:, 1:])
    return Field(fine, out, clamped=f.clamped)


def trajectory_h2h_distance(a: FieldTrajectory, b: FieldTrajectory,
                            tau: float = 0.0) -> float:
    """``L^2(tau, T; H^{2,h})`` distance of two same-grid trajectories."""
    if len(a) != len(b):
        raise ValueError("trajectories have different lengths")
    grid = a.fields[0].grid
    ops = OperatorSet(grid, dealias=False)
    psi_q = _psi_sqrt_quad(grid, None)
    dt_rec = a.dt_record
    total = 0.0
    for t, fa, fb in zip(a.times, a.fields, b.fields):
        if t < tau - 1e-12:
            continue
        diff = Field(grid, fa.values - fb.values)
        ch = norm_channels(diff, ops, psi_q, "h2h")
        total += dt_rec * float(np.vdot(ch, ch).real)
    return math.sqrt(total)


@dataclass
class RefinementStudy:
    resolutions: list[tuple[int, int]]
    deltas: list[float]

    @property
    def monotone(self) -> bool:
        return all(b < a for a, b in zip(self.deltas, self.deltas[1:]))


def galerkin_refinement_study(make_config, resolutions, record_every: int,
                              tau: float = 0.0) -> RefinementStudy:
    """Run nested resolutions and measure consecutive trajectory distances.

    ``make_config(nx, ny)`` must return a solver config; consecutive
    resolutions must nest (``2 nx``, ``2 ny - 1``).  The coarse trajectory
    is prolonged onto the finer grid before the distance is taken.
    """
    from .solver import run  # local import to avoid a cycle

    resolutions = list(resolutions)
    if len(resolutions) < 2:
        raise ValueError("need at least two resolutions")
    for (nxa, nya), (nxb, nyb) in zip(resolutions, resolutions[1:]):
        if nxb != 2 * nxa or nyb != 2 * nya - 1:
            raise ValueError(f"resolutions not nested: {(nxa, nya)} -> {(nxb, nyb)}")

    trajectories = []
    for nx, ny in resolutions:
        traj = FieldTrajectory()
        run(make_config(nx, ny),
            on_record=lambda state, rec, _tr=traj: _tr.append(state.t, state.v))
        trajectories.append(traj)

    deltas = []
    for coarse_traj, fine_traj in zip(trajectories, trajectories[1:]):
        fine_grid = fine_traj.fields[0].grid
        lifted = FieldTrajectory()
        for t, f in zip(coarse_traj.times, coarse_traj.fields):
            lifted.append(t, prolong(f, fine_grid))
        deltas.append(trajectory_h2h_distance(lifted, fine_traj, tau=tau))
    return RefinementStudy(resolutions=resolutions, deltas=deltas)


# ---------------------------------------------------------------------------
# Poincare audit
# ---------------------------------------------------------------------------

def random_clamped_field(grid: Grid, rng: np.random.Generator,
                         max_k: int = 3, amplitude: float = 1.0) -> Field:
    """Random trig combination under a wall-flattening envelope."""
    x1, x2 = grid.mesh()
    z = x2 / grid.domain.m
    envelope = (1.0 - z ** 2) ** 2
    vals = np.zeros(grid.shape)
    for k in range(max_k + 1):
        phase = 2.0 * np.pi * k * x1 / grid.domain.lx
        for j in range(3):
            a, b = rng.standard_normal(2)
            vals += (a * np.sin(phase) + b * np.cos(phase)) * z ** j * envelope
    return Field(grid, amplitude * vals, clamped=True)


@dataclass
class PoincareReport:
    lambda1: Lambda1Estimate
    worst_zero_order: float   # max |psi v| / |psi grad v|
    worst_first_order: float  # max |psi grad v| / |psi lap v|
    bound_zero_order: float
    bound_first_order: float
    samples: int

    @property
    def passed(self) -> bool:
        return (self.worst_zero_order <= self.bound_zero_order
                and self.worst_first_order <= self.bound_first_order)


def poincare_check(sample_count: int, spec: WeightSpec, grid: Grid,
                   seed: int = 0) -> PoincareReport:
    """Audit both weighted Poincare inequalities over random clamped fields."""
    lam = lambda1_estimate(grid)
    weight = make_weight_field(grid, spec)
    w = weight.phi_field()
    ops = OperatorSet(grid, dealias=False)
    rng = np.random.default_rng(seed)
    worst0 = worst1 = 0.0
    n = 0
    while n < sample_count:
        v = random_clamped_field(grid, rng)
        nv = l2_norm(v, w)
        if nv < 1e-12:
            continue  # rejected degenerate sample
        d1v, d2v = ops.d1(v), ops.d2(v)
        grad = math.sqrt(l2_norm(d1v, w) ** 2 + l2_norm(d2v, w) ** 2)
        lap = l2_norm(ops.laplacian(v), w)
        worst0 = max(worst0, nv / grad)
        worst1 = max(worst1, grad / lap)
        n += 1
    return PoincareReport(
        lambda1=lam, worst_zero_order=worst0, worst_first_order=worst1,
        bound_zero_order=2.0 / lam.value,
        bound_first_order=2.0 / math.sqrt(lam.value),
        samples=sample_count)


# ---------------------------------------------------------------------------
# Weak-form residual
# ---------------------------------------------------------------------------

def weak_residual(v_prev: Field, v_next: Field, dt: float, h: Field,
                  nu: float, alpha: float, g: Field,
                  ops: OperatorSet) -> tuple[float, float]:
    """Defect of the weak-form pairing over one step against a test field.

    Time derivative by backward difference, viscous terms at the new state,
    advective term at the old one (matching the first-order splitting).
    Returns ``(residual, scale)`` where ``scale`` sums the magnitudes of the
    individual pairings.
    """
    a2 = alpha ** 2
    vt = Field(v_prev.grid, (v_next.values - v_prev.values) / dt)
    d1h, d2h = ops.d1(h), ops.d2(h)
    d1vt, d2vt = ops.d1(vt), ops.d2(vt)
    lap_h = ops.laplacian(h)
    lap_v = ops.laplacian(v_next)
    terms = [
        inner_product(d1vt, d1h) + inner_product(d2vt, d2h),
        a2 * (inner_product(ops.d1(d1vt), ops.d1(d1h))
              + inner_product(ops.d1(d2vt), ops.d1(d2h))),
        nu * inner_product(lap_v, lap_h),
        nu * a2 * inner_product(ops.d1(lap_v), ops.d1(lap_h)),
        -inner_product(ops.bilinear_B_conservative(v_prev, v_prev), h),
        inner_product(g, h),
    ]
    residual = sum(terms)
    scale = sum(abs(x) for x in terms)
    return residual, max(scale, 1e-300)
