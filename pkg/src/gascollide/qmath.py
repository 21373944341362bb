"""Dense complex-matrix primitives for quantum states and operators.

Conventions used throughout the package:

- system eigenbases are ordered by ascending energy,
- spin bases are ordered m = -J .. +J (so index 0 is the ground state of
  a ladder with positive level spacing),
- entropies are reported in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
ENTROPY_EIGENVALUE_CUTOFF = 1e-14


def as_matrix(obj) -> np.ndarray:
    """Coerce an Operator/DensityMatrix/array-like to a complex square ndarray."""
    a = np.asarray(getattr(obj, "entries", obj), dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Operator:
    """A complex d x d matrix; units depend on context (energy for
    Hamiltonians, dimensionless for ladder operators)."""

    entries: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.entries)
        if not np.all(np.isfinite(a)):
            raise ValueError("operator entries must be finite")
        object.__setattr__(self, "entries", _readonly(a))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def dag(self) -> np.ndarray:
        return self.entries.conj().T

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))


@dataclass(frozen=True)
class DensityMatrix:
    """A Hermitian, unit-trace, positive-semidefinite complex matrix.

    Tolerances can be relaxed per instance; the defaults implement the
    strict invariants (Hermiticity defect <= 1e-12 elementwise,
    |tr - 1| <= 1e-10, smallest eigenvalue >= -1e-10). Time-evolution code
    constructs recorded states with looser integrator-level tolerances.
    """

    entries: np.ndarray
    herm_tol: float = field(default=HERMITICITY_TOL, repr=False)
    trace_tol: float = field(default=TRACE_TOL, repr=False)
    psd_tol: float = field(default=POSITIVITY_TOL, repr=False)

    def __post_init__(self):
        a = as_matrix(self.entries)
        defect = float(np.max(np.abs(a - a.conj().T)))
        if defect > self.herm_tol:
            raise ValueError(f"not Hermitian: defect {defect:.3e} > {self.herm_tol:.1e}")
        tr = complex(np.trace(a))
        if abs(tr - 1.0) > self.trace_tol:
            raise ValueError(f"trace {tr} deviates from 1 beyond {self.trace_tol:.1e}")
        lam_min = float(np.linalg.eigvalsh(0.5 * (a + a.conj().T)).min())
        if lam_min < -self.psd_tol:
            raise ValueError(f"not positive semidefinite: min eigenvalue {lam_min:.3e}")
        object.__setattr__(self, "entries", _readonly(a))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def populations(self) -> np.ndarray:
        """Diagonal of the matrix as a real vector."""
        return np.real(np.diag(self.entries)).copy()

    @classmethod
    def pure(cls, dim: int, index: int = 0) -> "DensityMatrix":
        a = np.zeros((dim, dim), dtype=complex)
        a[index, index] = 1.0
        return cls(a)

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        v = np.asarray(psi, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def from_populations(cls, p) -> "DensityMatrix":
        return cls(np.diag(np.asarray(p, dtype=float)).astype(complex))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True)
class SpinQuantum:
    """Total spin quantum number J; 2J must be a positive integer."""

    J: float

    def __post_init__(self):
        two_j = 2.0 * self.J
        if not np.isfinite(two_j) or abs(two_j - round(two_j)) > 1e-12 or round(two_j) < 1:
            raise ValueError(f"J must be a positive half-integer, got {self.J}")

    @property
    def dim(self) -> int:
        return int(round(2 * self.J + 1))


@dataclass(frozen=True)
class LevelSystem:
    """Internal energy ladder of the system: energies ascending, optional labels."""

    energies: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float).ravel()
        if e.size < 1 or not np.all(np.isfinite(e)):
            raise ValueError("energies must be a nonempty finite vector")
        if np.any(np.diff(e) < 0):
            raise ValueError("energies must be ascending")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != e.size:
                raise ValueError("labels length must match energies")
            object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.energies.size

    def hamiltonian(self) -> Operator:
        return Operator(np.diag(self.energies).astype(complex))

    @classmethod
    def spin_ladder(cls, J: float | SpinQuantum, level_spacing: float) -> "LevelSystem":
        """Equidistant ladder eps_m = spacing * m for m = -J .. +J."""
        j = J if isinstance(J, SpinQuantum) else SpinQuantum(float(J))
        m = np.arange(-j.J, j.J + 0.5)
        return cls(level_spacing * m)


def spin_operators(J: float | SpinQuantum) -> tuple[Operator, Operator, Operator]:
    """Spin matrices (Jz, J+, J-) in the Jz eigenbasis ordered m = -J..+J.

    <m+1|J+|m> = sqrt(J(J+1) - m(m+1)), Jz diagonal with entries m,
    J- = (J+)^dagger.
    """
    j = J if isinstance(J, SpinQuantum) else SpinQuantum(float(J))
    m = np.arange(-j.J, j.J + 0.5)
    jz = np.diag(m).astype(complex)
    jp = np.zeros((j.dim, j.dim), dtype=complex)
    c = np.sqrt(j.J * (j.J + 1.0) - m[:-1] * (m[:-1] + 1.0))
    jp[np.arange(1, j.dim), np.arange(0, j.dim - 1)] = c
    return Operator(jz), Operator(jp), Operator(jp.conj().T)


def dissipator(L, rho) -> np.ndarray:
    """Lindblad dissipator D[L](rho) = L rho L^+ - 1/2 {L^+ L, rho}.

    Returns a plain matrix; the result is Hermitian and traceless for any
    L and Hermitian rho.
    """
    l_mat = as_matrix(L)
    r = as_matrix(rho)
    if l_mat.shape != r.shape:
        raise ValueError(f"dimension mismatch: L {l_mat.shape} vs rho {r.shape}")
    ldl = l_mat.conj().T @ l_mat
    return l_mat @ r @ l_mat.conj().T - 0.5 * (ldl @ r + r @ ldl)


def eigh(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian operator.

    Re-symmetrizes (A + A^+)/2 when the Hermiticity defect is below 1e-10
    and raises otherwise. Eigenvalues come back ascending; columns of the
    second return value are the orthonormal eigenvectors.
    """
    a = as_matrix(A)
    defect = float(np.max(np.abs(a - a.conj().T)))
    scale = max(float(np.max(np.abs(a))), 1.0)
    if defect > 1e-10 * scale:
        raise ValueError(f"matrix is not Hermitian: defect {defect:.3e}")
    vals, vecs = np.linalg.eigh(0.5 * (a + a.conj().T))
    return vals, vecs


def von_neumann_entropy(rho) -> float:
    """S = -sum lambda ln lambda over eigenvalues above 1e-14, in nats."""
    r = as_matrix(rho)
    lam = np.linalg.eigvalsh(0.5 * (r + r.conj().T))
    lam = lam[lam > ENTROPY_EIGENVALUE_CUTOFF]
    if lam.size == 0:
        return 0.0
    return float(max(-np.sum(lam * np.log(lam)), 0.0) + 0.0)


def gibbs_state(h, beta: float) -> DensityMatrix:
    """Gibbs state exp(-beta h)/Z of a Hermitian Hamiltonian.

    beta may be negative (population-inverted Gibbs state) or zero
    (maximally mixed). Weights are computed from the spectrum with the
    largest exponent factored out, so large |beta| does not overflow.
    """
    vals, vecs = eigh(h)
    expo = -beta * vals
    w = np.exp(expo - expo.max())
    w /= w.sum()
    return DensityMatrix(vecs @ np.diag(w).astype(complex) @ vecs.conj().T)


def trace_distance(a, b) -> float:
    """Trace distance (1/2) ||a - b||_1 between two Hermitian matrices."""
    d = as_matrix(a) - as_matrix(b)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))
