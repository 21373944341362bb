"""Time evolution: the quantum Lindblad master equation, the classical
Markov population equation, and stationary-state extraction.

Quantum trajectories are integrated with an adaptive embedded Runge-Kutta
4(5) pair (local error tolerance 1e-9 by default); a fixed-step classical
RK4 mode is kept as a cross check. Every recorded state is re-validated:
|tr - 1| <= 1e-8, Hermiticity defect <= 1e-8, smallest eigenvalue >= -1e-7.
Positivity is monitored, never enforced by projection; a violation means
the integration is untrustworthy, not physics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericFailure
from .qmath import DensityMatrix, LevelSystem, as_matrix, von_neumann_entropy

if TYPE_CHECKING:
    from .rates import RateMatrix

TRAJ_TRACE_TOL = 1e-8
TRAJ_HERM_TOL = 1e-8
TRAJ_EIG_TOL = 1e-7
POP_SUM_TOL = 1e-10
POP_NEG_TOL = 1e-12
ENTROPY_RATE_EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class PopulationVector:
    """Probabilities over the energy eigenstates."""

    P: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.P, dtype=float).ravel()
        if not np.all(np.isfinite(p)):
            raise ValueError("populations must be finite")
        if np.any(p < -POP_NEG_TOL):
            raise ValueError(f"negative population {p.min():.3e}")
        if abs(p.sum() - 1.0) > POP_SUM_TOL:
            raise ValueError(f"populations sum to {p.sum()}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "P", p)

    @property
    def dim(self) -> int:
        return self.P.size


@dataclass(frozen=True)
class Trajectory:
    """Recorded time evolution: states at sample times plus named
    observable series (energy, entropy, heat power, entropy rate,
    ergotropy). A NaN entropy-rate entry flags a near-singular state whose
    logarithm was not trusted."""

    times: np.ndarray
    states: tuple
    observables: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly ascending")
        if len(self.states) != t.size:
            raise ValueError("states and times lengths differ")
        for name, series in self.observables.items():
            arr = np.asarray(series, dtype=float)
            if arr.shape != t.shape:
                raise ValueError(f"observable {name!r} length differs from times")
            arr.setflags(write=False)
            self.observables[name] = arr
        t.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", tuple(self.states))

    def final_state(self):
        return self.states[-1]


def _coerce_channels(channels):
    out = []
    for rate, op in channels:
        g = float(rate)
        if not np.isfinite(g) or g < 0.0:
            raise ValueError(f"channel rates must be finite and >= 0, got {rate}")
        out.append((g, as_matrix(op)))
    return out


def collision_action(channels, rho) -> np.ndarray:
    """Dissipative part sum_k gamma_k D[L_k](rho) of the master equation."""
    r = as_matrix(rho)
    out = np.zeros_like(r)
    for g, l_mat in _coerce_channels(channels):
        if g == 0.0:
            continue
        ldl = l_mat.conj().T @ l_mat
        out += g * (l_mat @ r @ l_mat.conj().T - 0.5 * (ldl @ r + r @ ldl))
    return out


def _validate_t_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float).ravel()
    if t.size < 2:
        raise ValueError("t_grid needs at least two points")
    if t[0] != 0.0:
        raise ValueError("t_grid must start at 0")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly ascending")
    return t


def _check_state(rho: np.ndarray, t: float) -> None:
    tr_dev = abs(np.trace(rho) - 1.0)
    if tr_dev > TRAJ_TRACE_TOL:
        raise NumericFailure(f"trace deviates by {tr_dev:.3e} at t={t:.6g}")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > TRAJ_HERM_TOL:
        raise NumericFailure(f"Hermiticity defect {herm:.3e} at t={t:.6g}")
    lam_min = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if lam_min < -TRAJ_EIG_TOL:
        raise NumericFailure(f"negative eigenvalue {lam_min:.3e} at t={t:.6g}")


def _entropy_rate(rho_h: np.ndarray, c_rho: np.ndarray) -> float:
    """Analytic dS/dt = -tr(C rho ln rho); NaN when rho is near singular."""
    lam, vecs = np.linalg.eigh(rho_h)
    if lam.min() < ENTROPY_RATE_EIG_FLOOR:
        return np.nan
    ln_rho = (vecs * np.log(lam)) @ vecs.conj().T
    return float(-np.real(np.trace(c_rho @ ln_rho)))


def _record(rho: np.ndarray, h_obs: np.ndarray, channels, obs: dict) -> None:
    from .thermo import ergotropy_general

    rho_h = 0.5 * (rho + rho.conj().T)
    c_rho = collision_action(channels, rho_h)
    obs["energy"].append(float(np.real(np.trace(h_obs @ rho_h))))
    obs["entropy"].append(von_neumann_entropy(rho_h))
    obs["heat_power"].append(float(np.real(np.trace(h_obs @ c_rho))))
    obs["entropy_rate"].append(_entropy_rate(rho_h, c_rho))
    obs["ergotropy"].append(ergotropy_general(h_obs, rho_h))


def _rk4_segments(rhs, y0: np.ndarray, t: np.ndarray, steps_per_unit: float):
    ys = [y0]
    y = y0
    for a, b in zip(t[:-1], t[1:]):
        n = max(int(np.ceil((b - a) * steps_per_unit)), 4)
        h = (b - a) / n
        tt = a
        for _ in range(n):
            k1 = rhs(tt, y)
            k2 = rhs(tt + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(tt + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(tt + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            tt += h
        ys.append(y)
    return np.stack(ys, axis=1)


def evolve_lindblad(h, channels, rho0: DensityMatrix, t_grid, *, hbar: float = 1.0,
                    rtol: float = 1e-9, atol: float = 1e-12, energy_operator=None,
                    method: str = "rk45", rk4_steps_per_unit: float = 200.0) -> Trajectory:
    """Integrate d rho/dt = -(i/hbar)[h, rho] + sum_k gamma_k D[L_k] rho.

    Parameters
    ----------
    h : Hamiltonian (Operator or matrix).
    channels : iterable of (rate, operator) pairs with nonnegative rates.
    rho0 : initial density matrix.
    t_grid : strictly ascending sample times starting at 0.
    energy_operator : operator used for the recorded energy/heat series;
        defaults to ``h``. Pass the bare Hamiltonian when ``h`` includes
        the collision-induced correction, so heat excludes that shift.
    method : "rk45" (adaptive, default) or "rk4" (fixed-step cross check).
    """
    h_mat = as_matrix(h)
    chans = _coerce_channels(channels)
    t = _validate_t_grid(t_grid)
    rho_init = as_matrix(rho0)
    if rho_init.shape != h_mat.shape:
        raise ValueError("rho0 dimension does not match h")
    d = h_mat.shape[0]
    h_obs = h_mat if energy_operator is None else as_matrix(energy_operator)

    pre = [(g, L, L.conj().T @ L) for g, L in chans if g > 0.0]

    def rhs(_t, y):
        rho = y.view(complex).reshape(d, d)
        dr = (-1j / hbar) * (h_mat @ rho - rho @ h_mat)
        for g, L, ldl in pre:
            dr += g * (L @ rho @ L.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
        return dr.ravel().view(float)

    y0 = rho_init.ravel().copy().view(float)
    if method == "rk45":
        sol = solve_ivp(rhs, (t[0], t[-1]), y0, t_eval=t, method="RK45",
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise NumericFailure(f"Lindblad integration failed: {sol.message}")
        y_samples = sol.y
    elif method == "rk4":
        y_samples = _rk4_segments(rhs, y0, t, rk4_steps_per_unit)
    else:
        raise ValueError(f"unknown method {method!r}")

    states = []
    obs: dict[str, list] = {k: [] for k in
                            ("energy", "entropy", "heat_power", "entropy_rate", "ergotropy")}
    for idx in range(t.size):
        rho = np.ascontiguousarray(y_samples[:, idx]).view(complex).reshape(d, d)
        _check_state(rho, t[idx])
        states.append(DensityMatrix(rho, herm_tol=TRAJ_HERM_TOL,
                                    trace_tol=TRAJ_TRACE_TOL, psd_tol=TRAJ_EIG_TOL))
        _record(rho, h_obs, chans, obs)
    return Trajectory(times=t, states=tuple(states),
                      observables={k: np.array(v) for k, v in obs.items()})


def evolve_populations(R, P0: PopulationVector, t_grid, *, levels: LevelSystem | None = None,
                       rtol: float = 1e-10, atol: float = 1e-14) -> Trajectory:
    """Integrate the classical rate equation
    dP_i/dt = sum_j (R_ij P_j - R_ji P_i).

    Probability is conserved to 1e-10 and populations may not dip below
    -1e-12; violations raise NumericFailure. Passing ``levels`` adds
    energy/heat/ergotropy observable series.
    """
    gen = R.generator() if hasattr(R, "generator") else _generator_from_array(R)
    t = _validate_t_grid(t_grid)
    p_init = P0.P if isinstance(P0, PopulationVector) else PopulationVector(np.asarray(P0)).P
    if p_init.size != gen.shape[0]:
        raise ValueError("P0 dimension does not match the rate matrix")

    sol = solve_ivp(lambda _t, p: gen @ p, (t[0], t[-1]), p_init.copy(), t_eval=t,
                    method="RK45", rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericFailure(f"population integration failed: {sol.message}")

    states = []
    obs: dict[str, list] = {k: [] for k in ("energy", "entropy", "heat_power", "ergotropy")}
    for idx in range(t.size):
        p = sol.y[:, idx]
        if abs(p.sum() - 1.0) > POP_SUM_TOL:
            raise NumericFailure(f"probability drift {p.sum() - 1.0:.3e} at t={t[idx]:.6g}")
        if p.min() < -POP_NEG_TOL:
            raise NumericFailure(f"negative population {p.min():.3e} at t={t[idx]:.6g}")
        states.append(PopulationVector(p))
        if levels is not None:
            from .thermo import ergotropy_diagonal

            e = levels.energies
            pos = p[p > 1e-300]
            obs["energy"].append(float(e @ p))
            obs["entropy"].append(float(-np.sum(pos * np.log(pos))))
            obs["heat_power"].append(float(e @ (gen @ p)))
            obs["ergotropy"].append(ergotropy_diagonal(levels, np.clip(p, 0.0, None)))
    observables = {k: np.array(v) for k, v in obs.items()} if levels is not None else {}
    return Trajectory(times=t, states=tuple(states), observables=observables)


def _generator_from_array(R) -> np.ndarray:
    r = np.asarray(R, dtype=float)
    g = r.copy()
    np.fill_diagonal(g, 0.0)
    np.fill_diagonal(g, -g.sum(axis=0))
    return g


def steady_state(h, channels, tol: float = 1e-10, *, hbar: float = 1.0,
                 t_horizon: float | None = None, rho0: DensityMatrix | None = None,
                 rtol: float = 1e-9, atol: float = 1e-12) -> DensityMatrix:
    """Integrate until ||d rho/dt||_F < tol and return the final state.

    Starts from the maximally mixed state by default: it has full support
    on every basin, so the unique stationary state of an irreducible
    channel set is reached regardless of rate detail (any valid ``rho0``
    converges to the same state up to ~tol). Default time horizon:
    50 / min(positive rate); exceeding it raises NumericFailure with the
    residual.
    """
    h_mat = as_matrix(h)
    chans = [(g, L) for g, L in _coerce_channels(channels) if g > 0.0]
    if not chans:
        raise ValueError("need at least one channel with a positive rate")
    d = h_mat.shape[0]
    min_rate = min(g for g, _ in chans)
    horizon = 50.0 / min_rate if t_horizon is None else float(t_horizon)
    chunk = horizon / 50.0

    pre = [(g, L, L.conj().T @ L) for g, L in chans]

    def rhs(_t, y):
        rho = y.view(complex).reshape(d, d)
        dr = (-1j / hbar) * (h_mat @ rho - rho @ h_mat)
        for g, L, ldl in pre:
            dr += g * (L @ rho @ L.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
        return dr.ravel().view(float)

    start = np.eye(d, dtype=complex) / d if rho0 is None else as_matrix(rho0)
    if start.shape != h_mat.shape:
        raise ValueError("rho0 dimension does not match h")
    y = start.ravel().copy().view(float)
    elapsed = 0.0
    residual = float(np.linalg.norm(rhs(0.0, y)))
    while residual >= tol and elapsed < horizon:
        sol = solve_ivp(rhs, (0.0, chunk), y, method="RK45", rtol=rtol, atol=atol)
        if not sol.success:
            raise NumericFailure(f"steady-state integration failed: {sol.message}")
        y = sol.y[:, -1].copy()
        elapsed += chunk
        residual = float(np.linalg.norm(rhs(0.0, y)))
    if residual >= tol:
        raise NumericFailure(
            f"no steady state within horizon {horizon:.6g}: residual {residual:.3e} >= {tol:.1e}"
        )
    rho = np.ascontiguousarray(y).view(complex).reshape(d, d)
    _check_state(rho, elapsed)
    return DensityMatrix(rho, herm_tol=TRAJ_HERM_TOL, trace_tol=TRAJ_TRACE_TOL,
                         psd_tol=TRAJ_EIG_TOL)
