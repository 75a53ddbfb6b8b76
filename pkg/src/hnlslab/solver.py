"""Split-step integration of i u_t + (dx^2 - dy^2) u = sign |u|^{2k} u and related diagnostics.

Time here is the physical time of the equation; the linear substep over dt
is ``evolve(F, PDE_TIME_SCALE * dt)``.  The nonlinear substep solves
i u_t = sign |u|^{2k} u exactly, u -> u exp(-i sign dt |u|^{2k}), on a grid
zero-padded by ``dealias_pad`` and is truncated back to the working band.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .lattice import (DomainSpec, PhysicalField, SpectralField, critical_index, l2_norm,
                      sobolev_norm)
from .propagator import PDE_TIME_SCALE, SymbolKind, evolve

log = logging.getLogger(__name__)

__all__ = [
    "SolveConfig",
    "Trajectory",
    "PicardTrace",
    "ScatterTrace",
    "SolverAbort",
    "nonlinear_phase_step",
    "step_strang",
    "integrate",
    "hamiltonian",
    "mass",
    "nonlinearity",
    "linear_flow",
    "picard_iterate",
    "scattering_profile",
]


class SolverAbort(RuntimeError):
    """Non-finite state encountered; ``last_good`` holds the previous state."""

    def __init__(self, msg, last_good, time):
        super().__init__(msg)
        self.last_good = last_good
        self.time = time


@dataclass(frozen=True)
class SolveConfig:
    k: int
    sign: int
    dt: float
    t_end: float
    domain: DomainSpec
    dealias_pad: int | None = None
    nonlinear: bool = True

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if not (self.dt != 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be finite and nonzero")
        if self.t_end * self.dt < 0:
            raise ValueError("t_end and dt must have the same sign")
        if self.dealias_pad is None:
            object.__setattr__(self, "dealias_pad", self.k + 1)
        if self.dealias_pad < self.k + 1:
            raise ValueError(f"dealias_pad must be >= k+1 = {self.k + 1}")
        band = self.domain.n_max
        if abs(self.dt) * 4 * math.pi ** 2 * band ** 2 > 0.5:
            warnings.warn(f"dt={self.dt:g} is coarse for band {band}: "
                          f"dt * 4 pi^2 N^2 = {abs(self.dt) * 4 * math.pi ** 2 * band ** 2:.3g} > 0.5")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def to_dict(self) -> dict:
        return {"k": self.k, "sign": self.sign, "dt": self.dt, "t_end": self.t_end,
                "dealias_pad": self.dealias_pad, "nonlinear": self.nonlinear,
                "domain": self.domain.to_dict()}


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    hamiltonian: list = field(default_factory=list)

    def append(self, t, F, m, h):
        if self.times and not (abs(t) > abs(self.times[-1])):
            raise ValueError("times must be strictly increasing")
        self.times.append(float(t))
        self.states.append(F)
        self.mass.append(float(m))
        self.hamiltonian.append(float(h))

    def drifts(self) -> dict:
        m0, h0 = self.mass[0], self.hamiltonian[0]
        dm = max(abs(m - m0) for m in self.mass) / m0 if m0 else 0.0
        dh = max(abs(h - h0) for h in self.hamiltonian) / abs(h0) if h0 else 0.0
        return {"mass_drift": dm, "hamiltonian_drift": dh}


@dataclass
class PicardTrace:
    iterates: list
    residuals: list
    times: list = field(default_factory=list)
    diverged: bool = False

    def ratios(self) -> list:
        r = self.residuals
        return [r[j + 1] / r[j] if r[j] > 0 else 0.0 for j in range(len(r) - 1)]


@dataclass
class ScatterTrace:
    times: list
    pullback_norm_diffs: np.ndarray
    u_plus: SpectralField | None = None

    def sup_diff(self, t_min: float = -math.inf, t_max: float = math.inf) -> float:
        t = np.asarray(self.times)
        sel = (t >= t_min) & (t <= t_max)
        if not np.any(sel):
            return 0.0
        return float(self.pullback_norm_diffs[np.ix_(sel, sel)].max())


# ---------------------------------------------------------------------------
# padded grids for pointwise products


def _pad_shape(domain: DomainSpec, pad: int):
    return (sfft.next_fast_len(domain.n_x * pad), sfft.next_fast_len(domain.n_y * pad))


def _to_padded(F: SpectralField, pad: int) -> np.ndarray:
    d = F.domain
    nx, ny = _pad_shape(d, pad)
    spec = np.zeros((nx, ny), dtype=complex)
    mi = d.m_index()
    ki = d.k_index()
    sgn = np.where(mi % 2 == 0, 1.0, -1.0)[:, None]
    spec[np.ix_(mi % nx, ki % ny)] = F.coeffs * sgn
    return sfft.ifft2(spec, workers=-1) * (nx * ny / d.x_period)


def _from_padded(u: np.ndarray, F: SpectralField) -> SpectralField:
    d = F.domain
    nx, ny = u.shape
    spec = sfft.fft2(u, workers=-1) * (d.x_period / (nx * ny))
    mi = d.m_index()
    ki = d.k_index()
    sgn = np.where(mi % 2 == 0, 1.0, -1.0)[:, None]
    return F.with_coeffs(spec[np.ix_(mi % nx, ki % ny)] * sgn)


def nonlinear_phase_step(f: PhysicalField, dt: float, k: int, sign: int) -> PhysicalField:
    """Exact flow of i u_t = sign |u|^{2k} u over dt."""
    if dt == 0:
        return f
    v = f.values
    return PhysicalField(f.domain, v * np.exp(-1j * sign * dt * np.abs(v) ** (2 * k)))


def _nl_substep(F: SpectralField, dt: float, cfg: SolveConfig) -> SpectralField:
    if not cfg.nonlinear or dt == 0:
        return F
    u = _to_padded(F, cfg.dealias_pad)
    u = u * np.exp(-1j * cfg.sign * dt * np.abs(u) ** (2 * cfg.k))
    return _from_padded(u, F)


def linear_flow(F: SpectralField, s: float) -> SpectralField:
    """e^{i s (dx^2 - dy^2)} F."""
    return evolve(F, PDE_TIME_SCALE * s, SymbolKind.HYPERBOLIC)


def step_strang(F: SpectralField, dt: float, cfg: SolveConfig) -> SpectralField:
    G = _nl_substep(F, 0.5 * dt, cfg)
    G = linear_flow(G, dt)
    G = _nl_substep(G, 0.5 * dt, cfg)
    if not np.all(np.isfinite(G.coeffs)):
        raise SolverAbort("non-finite state", F, None)
    return G


# ---------------------------------------------------------------------------
# monitors


def mass(F: SpectralField) -> float:
    return l2_norm(F) ** 2


def nonlinearity(F: SpectralField, k: int, pad: int | None = None) -> SpectralField:
    """|u|^{2k} u on a padded grid, truncated to the band of F (alias-free)."""
    u = _to_padded(F, pad or k + 1)
    return _from_padded(np.abs(u) ** (2 * k) * u, F)


def hamiltonian(F: SpectralField, k: int, sign: int, pad: int | None = None) -> float:
    """int |dx u|^2 - |dy u|^2 + sign/(k+1) int |u|^{2k+2}.

    With this H the equation reads i u_t = dH/d(conj u), so H is conserved.
    """
    d = F.domain
    w = (2 * math.pi) ** 2 * (d.xi()[:, None] ** 2 - d.k_index()[None, :].astype(float) ** 2)
    kinetic = float(np.sum(w * np.abs(F.coeffs) ** 2)) * d.dxi
    if not np.any(F.coeffs):
        return 0.0
    u = _to_padded(F, pad or k + 1)
    nx, ny = u.shape
    potential = float(np.sum(np.abs(u) ** (2 * k + 2))) * (d.x_period / nx) * (1.0 / ny)
    return kinetic + sign * potential / (k + 1)


def integrate(u0: SpectralField, cfg: SolveConfig, stride: int = 1, monitors: bool = True) -> Trajectory:
    """Repeated Strang steps from t = 0 to cfg.t_end, recording every ``stride`` steps."""
    if u0.domain != cfg.domain:
        raise ValueError("u0 lives on a different domain than the config")
    traj = Trajectory()

    def record(t, F):
        if monitors:
            traj.append(t, F, mass(F), hamiltonian(F, cfg.k, cfg.sign, cfg.dealias_pad))
        else:
            traj.append(t, F, float("nan"), float("nan"))

    F = u0
    record(0.0, F)
    n = cfg.n_steps
    for j in range(1, n + 1):
        try:
            F = step_strang(F, cfg.dt, cfg)
        except SolverAbort as exc:
            exc.time = (j - 1) * cfg.dt
            raise
        if j % stride == 0 or j == n:
            record(j * cfg.dt, F)
    return traj


# ---------------------------------------------------------------------------
# fixed-point map


def _duhamel_series(sources, dtau: float):
    """I_j = int_0^{t_j} e^{i (t_j - s) box} G(s) ds on the grid t_j = j dtau (trapezoid)."""
    out = [sources[0].with_coeffs(np.zeros_like(sources[0].coeffs))]
    acc = out[0].coeffs
    for j in range(len(sources) - 1):
        prop = linear_flow(out[-1].with_coeffs(acc + 0.5 * dtau * sources[j].coeffs), dtau).coeffs
        acc = prop + 0.5 * dtau * sources[j + 1].coeffs
        out.append(sources[0].with_coeffs(acc))
    return out


def picard_iterate(u0: SpectralField, horizon: float, iters: int, cfg: SolveConfig,
                   dtau: float | None = None) -> PicardTrace:
    """Iterates of u -> e^{it box} u0 - i sign I[|u|^{2k} u] on a uniform t-grid.

    Residuals are sup over grid times of the H^{s} difference between
    consecutive iterates, s = 1 - 1/k.
    """
    if horizon > 1 or horizon <= 0:
        raise ValueError("horizon must lie in (0, 1]")
    if iters < 2:
        raise ValueError("iters must be >= 2")
    dtau = dtau or cfg.dt
    n = int(round(horizon / dtau))
    times = [j * dtau for j in range(n + 1)]
    s = critical_index(cfg.k) if cfg.k > 1 else 0.0
    lin = [linear_flow(u0, t) for t in times]
    cur = lin
    iterates = [cur[-1]]
    residuals = []
    diverged = False
    for _ in range(iters):
        src = [nonlinearity(u, cfg.k, cfg.dealias_pad) for u in cur]
        duh = _duhamel_series(src, dtau)
        nxt = [L.with_coeffs(L.coeffs - 1j * cfg.sign * D.coeffs) for L, D in zip(lin, duh)]
        res = max(sobolev_norm(a - b, s) for a, b in zip(nxt, cur))
        residuals.append(res)
        iterates.append(nxt[-1])
        cur = nxt
        blowup = not math.isfinite(res) or res > 1e6 * (residuals[0] + 1.0)
        rising = len(residuals) >= 4 and all(residuals[-i] > residuals[-i - 1] for i in (1, 2, 3))
        if blowup or rising:
            diverged = True
            log.warning("Picard iteration diverging")
            break
    return PicardTrace(iterates, residuals, times, diverged)


def picard_lipschitz(u0: SpectralField, w0: SpectralField, horizon: float, cfg: SolveConfig,
                     dtau: float | None = None) -> float:
    """sup_t ||G(u) - G(v)||_{H^s} / sup_t ||u - v||_{H^s} for u = e^{it box} u0, v = e^{it box} w0.

    G is the Picard map with data u0.  Unlike ratios of consecutive
    residuals, which sink to roundoff for small data, this quotient is
    resolvable whenever u0 - w0 is.
    """
    if not 0 < horizon <= 1:
        raise ValueError("horizon must lie in (0, 1]")
    dtau = dtau or cfg.dt
    n = int(round(horizon / dtau))
    s = critical_index(cfg.k) if cfg.k > 1 else 0.0
    times = [j * dtau for j in range(n + 1)]
    u = [linear_flow(u0, t) for t in times]
    v = [linear_flow(w0, t) for t in times]
    du = _duhamel_series([nonlinearity(x, cfg.k, cfg.dealias_pad) for x in u], dtau)
    dv = _duhamel_series([nonlinearity(x, cfg.k, cfg.dealias_pad) for x in v], dtau)
    num = max(sobolev_norm(a - b, s) for a, b in zip(du, dv))
    den = max(sobolev_norm(a - b, s) for a, b in zip(u, v))
    if den == 0:
        raise ValueError("u0 and w0 coincide")
    return num / den


# ---------------------------------------------------------------------------
# scattering


def scattering_profile(traj: Trajectory, s: float, times=None) -> ScatterTrace:
    """Pullbacks v(t) = e^{-it box} u(t) and their pairwise H^s distances."""
    sel = list(range(len(traj.times)))
    if times is not None:
        want = np.asarray(times, float)
        tt = np.asarray(traj.times)
        sel = [int(np.argmin(np.abs(tt - w))) for w in want]
        for i, w in zip(sel, want):
            if abs(tt[i] - w) > 1e-9 * max(1.0, abs(w)):
                raise ValueError(f"trajectory has no sample at t={w}")
    ts = [traj.times[i] for i in sel]
    pulled = [linear_flow(traj.states[i], -traj.times[i]) for i in sel]
    m = len(pulled)
    diff = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            diff[i, j] = diff[j, i] = sobolev_norm(pulled[i] - pulled[j], s)
    return ScatterTrace(ts, diff, pulled[-1] if pulled else None)
