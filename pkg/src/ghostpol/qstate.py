"""Two-qubit polarization states and entanglement metrics.

Basis order for the pair is (HH, HV, VH, VV) with the signal photon
first and the idler photon second.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-10
EIGENVALUE_TOL = 1e-9

# Pauli y in the (H, V) basis, used by the spin-flip construction.
_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])


class StateValidationError(ValueError):
    pass


def _validated(matrix: np.ndarray) -> np.ndarray:
    rho = np.asarray(matrix, dtype=complex)
    if rho.shape != (4, 4):
        raise StateValidationError("density matrix must be 4x4")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
        raise StateValidationError("density matrix is not Hermitian")
    rho = 0.5 * (rho + rho.conj().T)
    eigvals, eigvecs = np.linalg.eigh(rho)
    if eigvals[0] < -EIGENVALUE_TOL:
        raise StateValidationError(
            f"density matrix has negative eigenvalue {eigvals[0]}"
        )
    if eigvals[0] < 0.0:
        # Tiny negative dust from round-off: clip and renormalize.
        warnings.warn(
            "clipping negative eigenvalues of a density matrix",
            stacklevel=3,
        )
        eigvals = np.clip(eigvals, 0.0, None)
        rho = eigvecs @ np.diag(eigvals) @ eigvecs.conj().T
    tr = np.real(np.trace(rho))
    if tr <= 0.0:
        raise StateValidationError("density matrix has non-positive trace")
    if abs(tr - 1.0) > 1e-8:
        raise StateValidationError(f"density matrix trace {tr} != 1")
    return rho / tr


@dataclass(frozen=True)
class TwoQubitDensity:
    """Validated 4x4 density matrix in the (HH, HV, VH, VV) basis."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", _validated(self.matrix))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class StateMetrics:
    concurrence: float
    linear_entropy: float
    fidelity: float
    purity: float


def bell_psi_plus() -> TwoQubitDensity:
    """|Psi+> = (|HV> + |VH>)/sqrt(2) as a density matrix."""
    vec = psi_plus_vector()
    return TwoQubitDensity(np.outer(vec, vec.conj()))


def psi_plus_vector() -> np.ndarray:
    vec = np.zeros(4, dtype=complex)
    vec[1] = vec[2] = 1.0 / np.sqrt(2.0)
    return vec


def werner(p: float) -> TwoQubitDensity:
    """Werner-like mixture p |Psi+><Psi+| + (1 - p) I/4."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("mixing parameter must lie in [0, 1]")
    pure = bell_psi_plus().matrix
    return TwoQubitDensity(p * pure + (1.0 - p) * np.eye(4) / 4.0)


def concurrence(rho: TwoQubitDensity) -> float:
    """Wootters concurrence via the spin-flip eigenvalue formula."""
    m = rho.matrix
    flip = np.kron(_SIGMA_Y, _SIGMA_Y)
    rho_tilde = flip @ m.conj() @ flip
    eigvals = np.linalg.eigvals(m @ rho_tilde)
    lam = np.sqrt(np.clip(np.real(eigvals), 0.0, None))
    lam = np.sort(lam)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def linear_entropy(rho: TwoQubitDensity) -> float:
    """Normalized linear entropy (4/3)(1 - tr rho^2), in [0, 1]."""
    return float((4.0 / 3.0) * (1.0 - rho.purity()))


def fidelity(rho: TwoQubitDensity, reference: np.ndarray | None = None) -> float:
    """Overlap <psi|rho|psi> with a pure reference state vector.

    The default reference is |Psi+>.
    """
    vec = psi_plus_vector() if reference is None else np.asarray(reference, dtype=complex)
    vec = vec.reshape(4)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ValueError("reference state vector is zero")
    vec = vec / norm
    return float(np.real(vec.conj() @ rho.matrix @ vec))


def metrics(rho: TwoQubitDensity, reference: np.ndarray | None = None) -> StateMetrics:
    return StateMetrics(
        concurrence=concurrence(rho),
        linear_entropy=linear_entropy(rho),
        fidelity=fidelity(rho, reference),
        purity=rho.purity(),
    )


def partial_trace(rho: TwoQubitDensity, over: str) -> np.ndarray:
    """Reduced 2x2 state after tracing out one photon.

    Parameters
    ----------
    over : str
        ``"signal"`` traces out the first factor, ``"idler"`` the
        second.
    """
    m = rho.matrix.reshape(2, 2, 2, 2)
    if over == "signal":
        return np.trace(m, axis1=0, axis2=2)
    if over == "idler":
        return np.trace(m, axis1=1, axis2=3)
    raise ValueError("over must be 'signal' or 'idler'")


def save_density_csv(rho: TwoQubitDensity, path: str) -> None:
    """Write a density matrix as CSV rows of interleaved re, im pairs."""
    header = ",".join(f"re{c},im{c}" for c in range(4))
    lines = [header]
    for row in rho.matrix:
        cells: list[str] = []
        for z in row:
            cells.append(f"{z.real:.12g}")
            cells.append(f"{z.imag:.12g}")
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_density_csv(path: str) -> TwoQubitDensity:
    """Read a density matrix written by :func:`save_density_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip()]
    if len(rows) != 5:
        raise StateValidationError("density CSV must have a header and 4 rows")
    m = np.zeros((4, 4), dtype=complex)
    for i, line in enumerate(rows[1:]):
        cells = [float(x) for x in line.split(",")]
        if len(cells) != 8:
            raise StateValidationError("density CSV rows need 8 numbers")
        for j in range(4):
            m[i, j] = cells[2 * j] + 1.0j * cells[2 * j + 1]
    return TwoQubitDensity(m)
