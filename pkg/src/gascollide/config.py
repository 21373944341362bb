"""Scenario configuration: flat key = value files and assembly of the
spin-ladder case study in internal units.

Config files use one ``key = value`` pair per line with ``#`` comments.
The physical scenario is parametrized by dimensionless ratios, matching
how results are reported:

    J               total spin (half-integer; system has 2J+1 levels)
    D               hbar*Delta / kB T_M       (detuning ratio)
    A               hbar*omega_A / kB T_A     (ancilla temperature ratio)
    alpha           E_R / kB T_M              (interaction vs motional scale)
    omega_S_over_ER hbar*omega_S / E_R
    gamma_tilde     overall collision rate scale -- or give the raw set
                    n, V0, R, m instead and it is derived
    t_max           trajectory span in units of 1/gamma_tilde
    n_samples       number of recorded samples
    initial_state   ground | gibbs:<kB T / E_R> | custom:p0,p1,...

The builder works in hbar = kB = 1 units. When gamma_tilde is given the
interaction scale is normalized to E_R = 1 and m = n = 1; a raw
(n, V0, R, m) set fixes the scales itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .gas import GasEnvironment, InteractionSpec, derived_scales, spin_exchange_coupling
from .qmath import DensityMatrix, LevelSystem, Operator, SpinQuantum, gibbs_state, spin_operators
from .rates import SpinRates, effective_temperature, spin_rates
from .scattering import AmplitudeModel

_SCALAR_KEYS = ("J", "D", "A", "alpha", "omega_S_over_ER", "gamma_tilde",
                "n", "V0", "R", "m", "t_max")
_DEFAULTS = {
    "alpha_grid": "0.1:10:40",
    "s_grid": "-10:10:40",
}


@dataclass(frozen=True)
class ScenarioConfig:
    J: float
    D: float
    A: float
    alpha: float
    omega_S_over_ER: float
    t_max: float
    n_samples: int
    initial_state: str = "ground"
    gamma_tilde: float | None = None
    n: float | None = None
    V0: float | None = None
    R: float | None = None
    m: float | None = None
    alpha_grid: str = _DEFAULTS["alpha_grid"]
    s_grid: str = _DEFAULTS["s_grid"]

    def __post_init__(self):
        SpinQuantum(self.J)  # validates half-integer
        for name in ("D", "A", "alpha", "omega_S_over_ER", "t_max"):
            if not math.isfinite(float(getattr(self, name))):
                raise ConfigError(f"{name} must be finite")
        if self.alpha <= 0:
            raise ConfigError("alpha = E_R/kB T_M must be positive")
        if self.A <= 0:
            raise ConfigError("A = hbar omega_A/kB T_A must be positive")
        if self.omega_S_over_ER <= 0:
            raise ConfigError("omega_S_over_ER must be positive")
        if self.t_max <= 0:
            raise ConfigError("t_max must be positive")
        if self.n_samples < 2:
            raise ConfigError("n_samples must be at least 2")
        raw = [self.n, self.V0, self.R, self.m]
        if self.gamma_tilde is None:
            if any(v is None for v in raw):
                raise ConfigError("give gamma_tilde or the full raw set n, V0, R, m")
            if self.R <= 0 or self.m <= 0 or self.n <= 0:
                raise ConfigError("raw scales n, R, m must be positive")
        else:
            if self.gamma_tilde <= 0:
                raise ConfigError("gamma_tilde must be positive")

    def to_dict(self) -> dict:
        out = {}
        for key in (*_SCALAR_KEYS, "n_samples", "initial_state", "alpha_grid", "s_grid"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out


def parse_config_text(text: str) -> dict[str, str]:
    """Flat key = value parser; '#' starts a comment, blank lines ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path, overrides: dict[str, str] | None = None) -> ScenarioConfig:
    raw = parse_config_text(Path(path).read_text())
    if overrides:
        raw.update({str(k): str(v) for k, v in overrides.items()})
    return config_from_mapping(raw)


def config_from_mapping(raw: dict[str, str]) -> ScenarioConfig:
    known = set(_SCALAR_KEYS) | {"n_samples", "initial_state", "alpha_grid", "s_grid"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    kwargs = {}
    try:
        for key in _SCALAR_KEYS:
            if key in raw:
                kwargs[key] = float(raw[key])
        if "n_samples" in raw:
            kwargs["n_samples"] = int(raw["n_samples"])
    except ValueError as exc:
        raise ConfigError(f"non-numeric value: {exc}") from exc
    for key in ("initial_state", "alpha_grid", "s_grid"):
        if key in raw:
            kwargs[key] = raw[key]
    missing = [k for k in ("J", "D", "A", "alpha", "omega_S_over_ER", "t_max", "n_samples")
               if k not in kwargs]
    if missing:
        raise ConfigError(f"missing required config keys: {missing}")
    try:
        return ScenarioConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_grid(spec: str) -> np.ndarray:
    """Grid spec: either 'start:stop:count' (linear) or 'v1,v2,...'."""
    spec = spec.strip()
    try:
        if ":" in spec:
            start, stop, count = spec.split(":")
            grid = np.linspace(float(start), float(stop), int(count))
        else:
            grid = np.array([float(v) for v in spec.split(",") if v.strip()])
    except ValueError as exc:
        raise ConfigError(f"bad grid spec {spec!r}: {exc}") from exc
    if grid.size == 0:
        raise ConfigError(f"grid spec {spec!r} is empty")
    return grid


@dataclass(frozen=True)
class SpinScenario:
    """Fully assembled spin case study in internal hbar = kB = 1 units."""

    config: ScenarioConfig
    levels: LevelSystem
    env: GasEnvironment
    interaction: InteractionSpec
    model: AmplitudeModel
    h_S: Operator
    jz: Operator
    jplus: Operator
    jminus: Operator
    rates: SpinRates
    gamma_tilde: float
    E_R: float
    omega_S: float
    omega_A: float
    Delta: float
    T_eff: float

    @property
    def beta_gas(self) -> float:
        """Inverse motional temperature; the equilibrium reference beta."""
        return self.env.beta_M

    @property
    def beta_eff(self) -> float:
        """Inverse effective temperature (0 when T_eff is infinite)."""
        return 0.0 if math.isinf(self.T_eff) else 1.0 / (self.env.kB * self.T_eff)

    @property
    def channels(self) -> list:
        return [(self.rates.gamma_plus, self.jplus),
                (self.rates.gamma_minus, self.jminus)]

    def is_equilibrium(self) -> bool:
        return self.env.is_equilibrium(rel_tol=1e-12)


def build_scenario(cfg: ScenarioConfig) -> SpinScenario:
    """Instantiate levels, gas, interaction, amplitudes, and rates.

    With gamma_tilde given, the units are fixed as E_R = 1, m = n = 1 and
    V0 chosen to realize the requested rate scale; with a raw parameter
    set, the scales follow from (n, V0, R, m) directly.
    """
    hbar = kB = 1.0
    if cfg.gamma_tilde is not None:
        mass, density = 1.0, 1.0
        radius = 1.0 / math.sqrt(2.0)            # E_R = hbar^2/(2 m R^2) = 1
        e_r = hbar**2 / (2.0 * mass * radius**2)
        t_m = e_r / (kB * cfg.alpha)
        lam = math.sqrt(2.0 * math.pi * hbar**2 / (mass * kB * t_m))
        v0 = math.sqrt(2.0 * hbar * e_r * cfg.gamma_tilde / (density * lam**3))
    else:
        mass, density, radius, v0 = cfg.m, cfg.n, cfg.R, cfg.V0
        e_r = hbar**2 / (2.0 * mass * radius**2)
        t_m = e_r / (kB * cfg.alpha)

    omega_s = cfg.omega_S_over_ER * e_r / hbar
    delta = cfg.D * kB * t_m / hbar
    omega_a = omega_s + delta
    if omega_a <= 0:
        raise ConfigError(
            f"omega_A = omega_S + Delta = {omega_a:.6g} must be positive "
            f"(D too negative for this omega_S)"
        )
    t_a = hbar * omega_a / (kB * cfg.A)

    j = SpinQuantum(cfg.J)
    levels = LevelSystem.spin_ladder(j, hbar * omega_s)
    env = GasEnvironment(
        ancilla_energies=np.array([0.0, hbar * omega_a]),
        T_A=t_a, T_M=t_m, density=density, mass=mass, hbar=hbar, kB=kB,
    )
    interaction = InteractionSpec(V0=v0, R=radius, coupling=spin_exchange_coupling(cfg.J))
    model = AmplitudeModel.born_gaussian(levels, interaction, env)
    scales = derived_scales(env, interaction)
    jz, jp, jm = spin_operators(j)
    return SpinScenario(
        config=cfg,
        levels=levels,
        env=env,
        interaction=interaction,
        model=model,
        h_S=Operator(hbar * omega_s * jz.entries),
        jz=jz, jplus=jp, jminus=jm,
        rates=spin_rates(env, interaction, omega_s, delta),
        gamma_tilde=scales.gamma_tilde,
        E_R=scales.E_R,
        omega_S=omega_s,
        omega_A=omega_a,
        Delta=delta,
        T_eff=effective_temperature(omega_s, delta, t_a, t_m),
    )


def initial_density_matrix(scenario: SpinScenario) -> DensityMatrix:
    """Initial state per the config: ground | gibbs:<kB T/E_R> | custom:p,..."""
    spec = scenario.config.initial_state.strip()
    dim = scenario.levels.dim
    if spec == "ground":
        return DensityMatrix.pure(dim, 0)
    if spec.startswith("gibbs:"):
        try:
            kbt_over_er = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad gibbs temperature in {spec!r}") from exc
        if kbt_over_er <= 0:
            raise ConfigError("gibbs:<kB T/E_R> needs a positive temperature")
        beta = 1.0 / (kbt_over_er * scenario.E_R)
        return gibbs_state(scenario.h_S, beta)
    if spec.startswith("custom:"):
        try:
            p = np.array([float(v) for v in spec.split(":", 1)[1].split(",")])
        except ValueError as exc:
            raise ConfigError(f"bad custom populations in {spec!r}") from exc
        if p.size != dim:
            raise ConfigError(f"custom populations need {dim} entries, got {p.size}")
        try:
            return DensityMatrix.from_populations(p)
        except ValueError as exc:
            raise ConfigError(f"invalid custom populations: {exc}") from exc
    raise ConfigError(f"unknown initial_state {spec!r}")


def smoothed_ground(dim: int, admixture: float = 1e-6) -> DensityMatrix:
    """Ground state with a small maximally-mixed admixture, keeping every
    eigenvalue strictly positive so entropy rates stay finite."""
    p = np.full(dim, admixture / dim)
    p[0] += 1.0 - admixture
    return DensityMatrix.from_populations(p)
