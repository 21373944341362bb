"""Thermal environment model: ancilla level populations, Maxwell-Boltzmann
motional sector, and the derived interaction scales.

The library works in whatever consistent unit system the caller provides;
hbar, kB and the gas mass are explicit fields of :class:`GasEnvironment`.
The CLI builds everything in the dimensionless system hbar = kB = m = 1
with the interaction energy scale as the reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .qmath import spin_operators


@dataclass(frozen=True)
class GasEnvironment:
    """A dilute gas with internal (ancilla) structure and thermal motion.

    The internal sector is thermal at temperature ``T_A``, the motional
    sector Maxwell-Boltzmann at ``T_M``; the two may differ, in which case
    the gas is a structured non-equilibrium reservoir.
    """

    ancilla_energies: np.ndarray
    T_A: float
    T_M: float
    density: float
    mass: float
    hbar: float = 1.0
    kB: float = 1.0

    def __post_init__(self):
        e = np.asarray(self.ancilla_energies, dtype=float).ravel()
        if e.size < 1 or not np.all(np.isfinite(e)):
            raise ValueError("ancilla_energies must be a nonempty finite vector")
        e.setflags(write=False)
        object.__setattr__(self, "ancilla_energies", e)
        for name in ("T_A", "T_M", "density", "mass", "hbar", "kB"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0.0:
                raise ValueError(f"{name} must be strictly positive, got {v}")
            object.__setattr__(self, name, v)

    @property
    def n_ancilla(self) -> int:
        return self.ancilla_energies.size

    @property
    def beta_M(self) -> float:
        """Inverse motional temperature 1/(kB T_M)."""
        return 1.0 / (self.kB * self.T_M)

    @property
    def beta_A(self) -> float:
        """Inverse internal temperature 1/(kB T_A)."""
        return 1.0 / (self.kB * self.T_A)

    def is_equilibrium(self, rel_tol: float = 1e-12) -> bool:
        return abs(self.T_A - self.T_M) <= rel_tol * max(self.T_A, self.T_M)


@dataclass(frozen=True)
class InteractionSpec:
    """Gaussian active region of size R, strength V0, and the dimensionless
    system-ancilla coupling v[i, j, k, l] (system out/in, ancilla out/in).

    The coupling must be Hermitian on the joint space,
    v[i, j, k, l] = conj(v[j, i, l, k]).
    """

    V0: float
    R: float
    coupling: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.V0):
            raise ValueError("V0 must be finite")
        if not np.isfinite(self.R) or self.R <= 0:
            raise ValueError("R must be strictly positive")
        v = np.asarray(self.coupling, dtype=complex)
        if v.ndim != 4 or v.shape[0] != v.shape[1] or v.shape[2] != v.shape[3]:
            raise ValueError(f"coupling must have shape (dS, dS, dA, dA), got {v.shape}")
        defect = float(np.max(np.abs(v - v.transpose(1, 0, 3, 2).conj())))
        if defect > 1e-12:
            raise ValueError(f"coupling is not Hermitian on the joint space: defect {defect:.3e}")
        v.setflags(write=False)
        object.__setattr__(self, "coupling", v)

    @property
    def n_system(self) -> int:
        return self.coupling.shape[0]

    @property
    def n_ancilla(self) -> int:
        return self.coupling.shape[2]


class DerivedScales(NamedTuple):
    E_R: float          # hbar^2 / (2 m R^2)
    p_R: float          # hbar / R
    lambda_th: float    # sqrt(2 pi hbar^2 / (m kB T_M))
    gamma_tilde: float  # n lambda_th^3 V0^2 / (2 hbar E_R)


def maxwell_boltzmann(env: GasEnvironment, p) -> float | np.ndarray:
    """Maxwell-Boltzmann momentum density at momentum vector(s) ``p``.

    ``p`` has shape (3,) or (..., 3); normalized so the integral over all
    of momentum space is 1. Isotropic: depends on |p| only.
    """
    pv = np.asarray(p, dtype=float)
    if pv.shape[-1] != 3:
        raise ValueError("p must be a 3-vector or an array of 3-vectors")
    beta = env.beta_M
    p2 = np.sum(pv * pv, axis=-1)
    norm = (beta / (2.0 * np.pi * env.mass)) ** 1.5
    out = norm * np.exp(-beta * p2 / (2.0 * env.mass))
    return float(out) if out.ndim == 0 else out


def ancilla_populations(env: GasEnvironment) -> np.ndarray:
    """Gibbs weights of the ancilla levels at T_A; sum to 1.

    Invariant under a uniform shift of the level energies.
    """
    x = -env.beta_A * env.ancilla_energies
    w = np.exp(x - x.max())
    return w / w.sum()


def derived_scales(env: GasEnvironment, spec: InteractionSpec) -> DerivedScales:
    """Momentum/energy scale of the active region, thermal wavelength,
    and the overall collision rate scale."""
    p_r = env.hbar / spec.R
    e_r = p_r**2 / (2.0 * env.mass)
    lam = np.sqrt(2.0 * np.pi * env.hbar**2 / (env.mass * env.kB * env.T_M))
    gamma = env.density * lam**3 * spec.V0**2 / (2.0 * env.hbar * e_r)
    return DerivedScales(E_R=e_r, p_R=p_r, lambda_th=lam, gamma_tilde=gamma)


def spin_exchange_coupling(J: float) -> np.ndarray:
    """Excitation-exchange coupling J+ sigma- + J- sigma+ as a 4-index array.

    System indices run over the spin ladder m = -J..+J, ancilla indices over
    the two-level basis (0 = ground, 1 = excited).
    """
    _, jp, jm = spin_operators(J)
    sm = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # sigma-: |0><1|
    sp = sm.conj().T
    return np.einsum("ij,kl->ijkl", jp.entries, sm) + np.einsum("ij,kl->ijkl", jm.entries, sp)
