"""On-shell kinematics, Born amplitudes for the Gaussian interaction,
micro-reversibility verification, and assembly of collision channels.

A channel is a joint transition (system j -> i, ancilla l -> k) with
transition energy E = eps_i - eps_j. It is open for incoming momentum p
when p^2 - 2m(E + eps_k - eps_l) > 0; the outgoing momentum magnitude is
then fixed by energy conservation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ChannelClosedError
from .gas import GasEnvironment, InteractionSpec, derived_scales
from .qmath import LevelSystem, Operator

ON_SHELL_REL_TOL = 1e-9
ENERGY_MATCH_REL_TOL = 1e-9


@dataclass(frozen=True)
class Channel:
    """One collision channel: system transition energy E and the level
    indices (i, j system out/in; k, l ancilla out/in)."""

    E: float
    i: int
    j: int
    k: int
    l: int

    def delta_e(self, env: GasEnvironment) -> float:
        """Total internal energy change E + eps_k - eps_l paid from kinetic energy."""
        return self.E + env.ancilla_energies[self.k] - env.ancilla_energies[self.l]

    def is_open(self, p_mag: float, env: GasEnvironment) -> bool:
        return p_mag**2 - 2.0 * env.mass * self.delta_e(env) > 0.0


def outgoing_momentum(p_mag: float, E: float, eps_k: float, eps_l: float, m: float) -> float:
    """Magnitude of the outgoing momentum, sqrt(p^2 - 2m(E + eps_k - eps_l)).

    Raises ChannelClosedError when the radicand is not positive, i.e. the
    transition is energetically forbidden at this incoming momentum.
    """
    if p_mag < 0:
        raise ValueError("p_mag must be nonnegative")
    radicand = p_mag**2 - 2.0 * m * (E + eps_k - eps_l)
    if radicand <= 0.0:
        raise ChannelClosedError(
            f"channel closed: p^2 = {p_mag**2:.6g} cannot pay 2m*dE = {p_mag**2 - radicand:.6g}"
        )
    return float(np.sqrt(radicand))


def born_gaussian_amplitude(spec: InteractionSpec, env: GasEnvironment, indices, q, p,
                            levels: LevelSystem | None = None) -> complex:
    """First-order Born amplitude of the Gaussian active region.

    f = -sqrt(pi/2) R (V0/E_R) v[i,j,k,l] exp(-(q - p)^2 / (2 p_R^2)),
    evaluated at outgoing momentum vector q and incoming p. When ``levels``
    is supplied the channel kinematics are known and |q| is required to sit
    on the energy shell within 1e-9 relative (closed channels raise
    ChannelClosedError); without it the caller owns the on-shell promise.
    """
    i, j, k, l = indices
    if levels is not None:
        return AmplitudeModel.born_gaussian(levels, spec, env).value(i, j, k, l, q, p)
    scales = derived_scales(env, spec)
    dq = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
    gauss = np.exp(-float(dq @ dq) / (2.0 * scales.p_R**2))
    return complex(-np.sqrt(np.pi / 2.0) * spec.R * spec.V0 / scales.E_R
                   * spec.coupling[i, j, k, l] * gauss)


class EvalStats:
    """Mutable accumulator for evaluation bookkeeping (table extrapolation)."""

    def __init__(self):
        self.extrapolated = 0


class AmplitudeModel:
    """Scattering amplitudes f_{ij}^{kl}, either the Born-Gaussian closed
    form or a user-supplied table sampled on a (|p|, cos theta) grid.

    Models are immutable after construction; evaluations are pure.
    """

    def __init__(self, kind, levels, env, interaction=None, tables=None, energy_scale=None):
        if kind not in ("born_gaussian", "table"):
            raise ValueError(f"unknown amplitude model kind {kind!r}")
        self.kind = kind
        self.levels = levels
        self.env = env
        self.interaction = interaction
        self._tables = tables
        if kind == "born_gaussian":
            scales = derived_scales(env, interaction)
            self._e_r = scales.E_R
            self._p_r = scales.p_R
            self._prefactor = -np.sqrt(np.pi / 2.0) * interaction.R * interaction.V0 / scales.E_R
            self._support = sorted(
                (int(i), int(j), int(k), int(l))
                for (i, j, k, l) in zip(*np.nonzero(np.abs(interaction.coupling) > 0.0))
            )
            self.energy_scale = scales.E_R
        else:
            self._support = sorted(tables.keys())
            span = float(np.ptp(levels.energies))
            self.energy_scale = float(energy_scale) if energy_scale else max(span, 1.0)
        self._support_set = frozenset(self._support)

    @classmethod
    def born_gaussian(cls, levels: LevelSystem, spec: InteractionSpec, env: GasEnvironment):
        if spec.n_system != levels.dim:
            raise ValueError("coupling system dimension does not match the level system")
        if spec.n_ancilla != env.n_ancilla:
            raise ValueError("coupling ancilla dimension does not match the environment")
        return cls("born_gaussian", levels, env, interaction=spec)

    @classmethod
    def from_table(cls, path, levels: LevelSystem, env: GasEnvironment, energy_scale=None):
        """Load a sampled amplitude table.

        CSV columns: p_mag,cos_theta,i,j,k,l,re,im. Each channel must cover
        a full tensor grid with strictly increasing axes. Evaluation is
        bilinear in (|p|, cos theta) with constant extrapolation beyond the
        grid edges; extrapolated points are counted in report structures.
        """
        rows: dict[tuple[int, int, int, int], list[tuple[float, float, complex]]] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            expected = {"p_mag", "cos_theta", "i", "j", "k", "l", "re", "im"}
            if reader.fieldnames is None or set(reader.fieldnames) != expected:
                raise ValueError(f"amplitude table must have columns {sorted(expected)}")
            for rec in reader:
                key = (int(rec["i"]), int(rec["j"]), int(rec["k"]), int(rec["l"]))
                rows.setdefault(key, []).append(
                    (float(rec["p_mag"]), float(rec["cos_theta"]),
                     complex(float(rec["re"]), float(rec["im"])))
                )
        tables = {}
        for key, entries in rows.items():
            p_axis = np.array(sorted({e[0] for e in entries}))
            ct_axis = np.array(sorted({e[1] for e in entries}))
            if np.any(np.diff(p_axis) <= 0) or np.any(np.diff(ct_axis) <= 0):
                raise ValueError(f"channel {key}: grid axes must be strictly increasing")
            vals = np.full((p_axis.size, ct_axis.size), np.nan + 0j)
            for pm, ct, v in entries:
                vals[np.searchsorted(p_axis, pm), np.searchsorted(ct_axis, ct)] = v
            if np.any(np.isnan(vals)):
                raise ValueError(f"channel {key}: incomplete tensor grid")
            if not np.all(np.isfinite(vals.view(float))):
                raise ValueError(f"channel {key}: non-finite amplitude values")
            tables[key] = (p_axis, ct_axis, vals)
        if not tables:
            raise ValueError("amplitude table is empty")
        return cls("table", levels, env, tables=tables, energy_scale=energy_scale)

    # -- channel structure ------------------------------------------------

    def channel_indices(self) -> list[tuple[int, int, int, int]]:
        """All (i, j, k, l) with nonzero coupling / tabulated support, sorted."""
        return list(self._support)

    def supports(self, i, j, k, l) -> bool:
        return (i, j, k, l) in self._support_set

    def channel_delta_e(self, i, j, k, l) -> float:
        e_sys = self.levels.energies[i] - self.levels.energies[j]
        e_anc = self.env.ancilla_energies[k] - self.env.ancilla_energies[l]
        return float(e_sys + e_anc)

    # -- evaluation --------------------------------------------------------

    def value_polar(self, i, j, k, l, q_mag, p_mag, cos_theta, stats: EvalStats | None = None):
        """Amplitude as a function of (|q|, |p|, cos of the scattering angle).

        Broadcasts over array arguments. No on-shell check is performed
        here; quadrature code supplies consistent magnitudes.
        """
        q = np.asarray(q_mag, dtype=float)
        p = np.asarray(p_mag, dtype=float)
        u = np.asarray(cos_theta, dtype=float)
        if self.kind == "born_gaussian":
            v = self.interaction.coupling[i, j, k, l]
            if v == 0:
                return np.zeros(np.broadcast(q, p, u).shape, dtype=complex)
            mom2 = q**2 + p**2 - 2.0 * q * p * u
            return self._prefactor * v * np.exp(-mom2 / (2.0 * self._p_r**2))
        key = (int(i), int(j), int(k), int(l))
        if key not in self._tables:
            return np.zeros(np.broadcast(q, p, u).shape, dtype=complex)
        p_axis, ct_axis, vals = self._tables[key]
        return _bilinear(p_axis, ct_axis, vals, p, u, stats)

    def value(self, i, j, k, l, q_vec, p_vec, stats: EvalStats | None = None):
        """Amplitude at outgoing/incoming momentum vectors; |q| must be
        on the channel's energy shell within 1e-9 relative."""
        q = np.asarray(q_vec, dtype=float)
        p = np.asarray(p_vec, dtype=float)
        if q.shape[-1] != 3 or p.shape[-1] != 3:
            raise ValueError("momenta must be 3-vectors")
        q_mag = np.sqrt(np.sum(q * q, axis=-1))
        p_mag = np.sqrt(np.sum(p * p, axis=-1))
        de = self.channel_delta_e(i, j, k, l)
        radicand = p_mag**2 - 2.0 * self.env.mass * de
        if np.any(radicand <= 0.0):
            raise ChannelClosedError(f"channel ({i},{j},{k},{l}) closed at the given |p|")
        q_shell = np.sqrt(radicand)
        if np.any(np.abs(q_mag - q_shell) > ON_SHELL_REL_TOL * np.maximum(q_shell, 1e-300)):
            raise ValueError("q is off the energy shell for this channel")
        with np.errstate(invalid="ignore", divide="ignore"):
            denom = q_mag * p_mag
            u = np.where(denom > 0, np.sum(q * p, axis=-1) / np.where(denom > 0, denom, 1.0), 1.0)
        out = self.value_polar(i, j, k, l, q_mag, p_mag, np.clip(u, -1.0, 1.0), stats=stats)
        return complex(out) if np.ndim(out) == 0 else out


def _bilinear(p_axis, ct_axis, vals, p, u, stats: EvalStats | None):
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    outside = (
        (p < p_axis[0]) | (p > p_axis[-1]) | (u < ct_axis[0]) | (u > ct_axis[-1])
    )
    if stats is not None:
        stats.extrapolated += int(np.count_nonzero(outside))
    pc = np.clip(p, p_axis[0], p_axis[-1])
    uc = np.clip(u, ct_axis[0], ct_axis[-1])

    def _cell(axis, x):
        if axis.size == 1:
            idx = np.zeros(np.shape(x), dtype=int)
            return idx, np.zeros(np.shape(x))
        idx = np.clip(np.searchsorted(axis, x, side="right") - 1, 0, axis.size - 2)
        w = (x - axis[idx]) / (axis[idx + 1] - axis[idx])
        return idx, w

    ip, wp = _cell(p_axis, pc)
    iu, wu = _cell(ct_axis, uc)
    ip1 = np.minimum(ip + 1, p_axis.size - 1)
    iu1 = np.minimum(iu + 1, ct_axis.size - 1)
    out = (
        vals[ip, iu] * (1 - wp) * (1 - wu)
        + vals[ip1, iu] * wp * (1 - wu)
        + vals[ip, iu1] * (1 - wp) * wu
        + vals[ip1, iu1] * wp * wu
    )
    return out


def enumerate_channels(levels: LevelSystem, env: GasEnvironment, model: AmplitudeModel) -> list[Channel]:
    """All supported channels as Channel records (sorted index order)."""
    out = []
    for (i, j, k, l) in model.channel_indices():
        out.append(Channel(E=float(levels.energies[i] - levels.energies[j]), i=i, j=j, k=k, l=l))
    return out


@dataclass(frozen=True)
class MicroReversibilityReport:
    max_violation: float
    passed: bool
    tol: float
    n_evaluated: int
    n_closed_skipped: int
    extrapolated: int
    worst_channel: tuple[int, int, int, int] | None = field(default=None)


def check_microreversibility(model: AmplitudeModel, samples: int, tol: float,
                             seed: int = 0) -> MicroReversibilityReport:
    """Sample open-channel on-shell momentum pairs and compare
    f_{ij}^{kl}(q, p) against the time-reversed f_{ji}^{lk}(-p, -q).

    Incoming momenta are drawn from the thermal motional distribution so
    the sampled shell covers the physically weighted region; closed draws
    are skipped and counted.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    channels = model.channel_indices()
    if not channels:
        return MicroReversibilityReport(0.0, True, tol, 0, 0, 0)
    rng = np.random.default_rng(seed)
    env = model.env
    sigma = np.sqrt(env.mass * env.kB * env.T_M)
    stats = EvalStats()
    max_violation = 0.0
    worst: tuple[int, int, int, int] | None = None
    n_eval = 0
    n_closed = 0

    choice = rng.integers(0, len(channels), size=samples)
    p_draw = sigma * rng.standard_normal((samples, 3))
    z = rng.uniform(-1.0, 1.0, size=samples)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=samples)
    s = np.sqrt(1.0 - z**2)
    omega = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)

    for c_idx, (i, j, k, l) in enumerate(channels):
        mask = choice == c_idx
        if not np.any(mask):
            continue
        p = p_draw[mask]
        de = model.channel_delta_e(i, j, k, l)
        radicand = np.sum(p * p, axis=-1) - 2.0 * env.mass * de
        open_mask = radicand > 0.0
        n_closed += int(np.count_nonzero(~open_mask))
        if not np.any(open_mask):
            continue
        p = p[open_mask]
        q = np.sqrt(radicand[open_mask])[:, None] * omega[mask][open_mask]
        f_fwd = np.atleast_1d(model.value(i, j, k, l, q, p, stats=stats))
        f_rev = np.atleast_1d(model.value(j, i, l, k, -p, -q, stats=stats))
        viol = np.abs(f_fwd - f_rev)
        n_eval += viol.size
        local = float(viol.max())
        if local > max_violation:
            max_violation = local
            worst = (i, j, k, l)
    return MicroReversibilityReport(
        max_violation=max_violation,
        passed=max_violation <= tol,
        tol=tol,
        n_evaluated=n_eval,
        n_closed_skipped=n_closed,
        extrapolated=stats.extrapolated,
        worst_channel=worst,
    )


def lindblad_channel_operator(levels: LevelSystem, model: AmplitudeModel, E: float,
                              k: int, l: int, omega, p) -> Operator:
    """Collision Lindblad operator for transition energy E and ancilla
    transition l -> k, at outgoing direction omega and incoming momentum p.

    Sums sqrt(|q|/|p|) f_{ij}^{kl}(q(omega), p) |eps_i><eps_j| over level
    pairs whose gap matches E; closed pairs contribute zero, and the
    all-closed case returns the zero operator.
    """
    omega_v = np.asarray(omega, dtype=float).ravel()
    p_v = np.asarray(p, dtype=float).ravel()
    if omega_v.size != 3 or p_v.size != 3:
        raise ValueError("omega and p must be 3-vectors")
    norm = np.linalg.norm(omega_v)
    if norm == 0:
        raise ValueError("omega must be a unit vector")
    omega_v = omega_v / norm
    p_mag = float(np.linalg.norm(p_v))
    if p_mag == 0:
        raise ValueError("incoming momentum must be nonzero")

    env = model.env
    tol = ENERGY_MATCH_REL_TOL * model.energy_scale
    d = levels.dim
    out = np.zeros((d, d), dtype=complex)
    gaps = levels.energies[:, None] - levels.energies[None, :]
    for i, j in zip(*np.nonzero(np.abs(gaps - E) <= tol)):
        if not model.supports(int(i), int(j), k, l):
            continue
        try:
            q_mag = outgoing_momentum(
                p_mag, float(gaps[i, j]),
                env.ancilla_energies[k], env.ancilla_energies[l], env.mass,
            )
        except ChannelClosedError:
            continue
        f = model.value(int(i), int(j), k, l, q_mag * omega_v, p_v)
        out[i, j] += np.sqrt(q_mag / p_mag) * f
    return Operator(out)


def effective_hamiltonian(levels: LevelSystem, model: AmplitudeModel, env: GasEnvironment,
                          quad) -> Operator:
    """Collision-induced Hamiltonian correction from elastic forward scattering.

    -(pi hbar^2 n / m) sum_k integral d^3p mu_k(p) L_0^{kk}(0, p)  + h.c.,
    with the momentum integral done by the adaptive radial quadrature of the
    rates module. Hermitian by construction; commutes with the bare
    Hamiltonian for nondegenerate ladders.
    """
    from .gas import ancilla_populations
    from .rates import radial_expectation

    pops = ancilla_populations(env)
    tol = ENERGY_MATCH_REL_TOL * model.energy_scale
    d = levels.dim
    m_block = np.zeros((d, d), dtype=complex)
    gaps = levels.energies[:, None] - levels.energies[None, :]
    for i, j in zip(*np.nonzero(np.abs(gaps) <= tol)):
        for k in range(env.n_ancilla):
            if not model.supports(int(i), int(j), k, k):
                continue
            fwd = radial_expectation(
                env,
                lambda pm, ii=int(i), jj=int(j), kk=k: model.value_polar(ii, jj, kk, kk, pm, pm, np.ones_like(pm)),
                quad,
            )
            m_block[i, j] += pops[k] * fwd
    pref = -np.pi * env.hbar**2 * env.density / env.mass
    h = pref * (m_block + m_block.conj().T)
    return Operator(h)
