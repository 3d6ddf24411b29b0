"""Jones and Mueller calculus for linear polarization optics.

Conventions used throughout the package:

* Jones vectors live in the (H, V) basis, in that order.
* Element orientations are angles of the transmission / fast axis,
  measured from the global vertical, in degrees, periodic in 180.
* Stokes components are referenced to the vertical as well:
  S0 = I, S1 = I_V - I_H, S2 = I_+45 - I_-45 (45 deg from vertical),
  S3 = I_R - I_L with |R> = (|H> + i|V>)/sqrt(2).

The Stokes axis orientation is a one-time calibration pinned by the
reference probe matrix fixtures in the test suite; do not change one
sign without re-running those.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Tolerances for physicality checks.
PASSIVITY_TOL = 1e-9
CHOI_PSD_TOL = 1e-9

# Operators sigma_i with S_i = tr(sigma_i C) for a coherency matrix C,
# in the vertical-referenced Stokes frame described in the module
# docstring.  Order: S0, S1, S2, S3.
STOKES_OPS = (
    np.eye(2, dtype=complex),
    np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex),
    np.array([[0.0, -1.0], [-1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
)

ELEMENT_KINDS = ("ideal_polarizer", "partial_polarizer", "retarder")


@dataclass(frozen=True)
class PolElement:
    """One polarization element: kind, orientation and kind parameters.

    Parameters
    ----------
    kind : str
        One of ``ideal_polarizer``, ``partial_polarizer``, ``retarder``.
    theta_deg : float
        Axis orientation from the global vertical, reduced modulo 180.
    extinction : float, optional
        Intensity extinction ratio of a partial polarizer, >= 1.
    retardance_rad : float, optional
        Retardance of a retarder in radians (pi/2 for a quarter-wave
        plate).
    """

    kind: str
    theta_deg: float
    extinction: float | None = None
    retardance_rad: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ELEMENT_KINDS:
            raise ValueError(f"unknown element kind {self.kind!r}")
        if self.kind == "partial_polarizer":
            if self.extinction is None or self.extinction < 1.0:
                raise ValueError("partial_polarizer needs extinction >= 1")
        if self.kind == "retarder" and self.retardance_rad is None:
            raise ValueError("retarder needs retardance_rad")
        object.__setattr__(self, "theta_deg", float(self.theta_deg) % 180.0)

    def jones(self) -> np.ndarray:
        return element_jones(self)


def rotation_jones(theta_deg: float) -> np.ndarray:
    """Jones rotation matrix for a frame rotation by ``theta_deg``."""
    t = np.deg2rad(theta_deg)
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s], [s, c]], dtype=complex)


def element_jones(element: PolElement) -> np.ndarray:
    """Jones matrix of ``element`` at its orientation.

    At theta = 0 the element axis is vertical: an ideal polarizer is
    diag(0, 1), a partial polarizer with extinction k is
    diag(1/sqrt(k), 1) and a retarder with retardance d is
    diag(exp(i d), 1), i.e. the fast (vertical) axis carries zero
    extra phase.  Oriented elements are R(theta) J0 R(-theta).
    """
    if element.kind == "ideal_polarizer":
        j0 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    elif element.kind == "partial_polarizer":
        j0 = np.array(
            [[1.0 / np.sqrt(element.extinction), 0.0], [0.0, 1.0]],
            dtype=complex,
        )
    else:
        j0 = np.array(
            [[np.exp(1.0j * element.retardance_rad), 0.0], [0.0, 1.0]],
            dtype=complex,
        )
    r = rotation_jones(element.theta_deg)
    return r @ j0 @ r.conj().T


def compose(elements: list[PolElement] | tuple[PolElement, ...]) -> np.ndarray:
    """Jones matrix of a chain of elements.

    ``elements`` is given in the traversal order of the photon; the
    returned matrix is the product in reverse order (last element
    leftmost), so it applies to a Jones vector by left multiplication.
    """
    if len(elements) == 0:
        raise ValueError("compose() needs at least one element")
    total = np.eye(2, dtype=complex)
    for el in elements:
        total = element_jones(el) @ total
    return total


def check_passive(jones: np.ndarray, tol: float = PASSIVITY_TOL) -> None:
    """Raise if ``jones`` amplifies light (singular value > 1 + tol)."""
    smax = np.linalg.svd(np.asarray(jones, dtype=complex), compute_uv=False)[0]
    if smax > 1.0 + tol:
        raise ValueError(f"non-passive Jones matrix, max singular value {smax}")


def jones_to_mueller(jones: np.ndarray) -> np.ndarray:
    """Mueller matrix of the deterministic map C -> J C J^dagger.

    Parameters
    ----------
    jones : (2, 2) complex array

    Returns
    -------
    (4, 4) real array in the package Stokes convention.
    """
    j = np.asarray(jones, dtype=complex)
    if j.shape != (2, 2):
        raise ValueError("jones_to_mueller expects a 2x2 matrix")
    m = np.empty((4, 4))
    jd = j.conj().T
    for i, si in enumerate(STOKES_OPS):
        for k, sk in enumerate(STOKES_OPS):
            m[i, k] = 0.5 * np.real(np.trace(si @ j @ sk @ jd))
    return m


def stokes_from_jones_vector(vec: np.ndarray) -> np.ndarray:
    """Stokes vector of a (possibly unnormalized) Jones vector."""
    v = np.asarray(vec, dtype=complex).reshape(2)
    coh = np.outer(v, v.conj())
    return np.array([np.real(np.trace(op @ coh)) for op in STOKES_OPS])


def coherency_from_stokes(stokes: np.ndarray) -> np.ndarray:
    """Coherency matrix C with tr(sigma_i C) = S_i."""
    s = np.asarray(stokes, dtype=float).reshape(4)
    c = np.zeros((2, 2), dtype=complex)
    for si, op in zip(s, STOKES_OPS):
        c += 0.5 * si * op
    return c


def validate_mueller(m: np.ndarray, tol: float = 1e-9) -> None:
    """Check the gross passivity structure of a Mueller matrix."""
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise ValueError("Mueller matrix must be 4x4")
    if m[0, 0] < -tol:
        raise ValueError("Mueller matrix has negative total transmission")
    if np.any(np.abs(m) > m[0, 0] + tol):
        raise ValueError("Mueller matrix entry exceeds M[0][0]")


def mueller_to_choi(m: np.ndarray) -> tuple[np.ndarray, bool]:
    """Choi matrix of the map encoded by a Mueller matrix.

    Returns
    -------
    choi : (4, 4) complex Hermitian array
        Choi matrix sum_kl E_kl (x) Phi(E_kl); for a Jones matrix J it
        is the rank-1 projector onto (I (x) J)|Omega> with |Omega> the
        unnormalized maximally entangled vector, trace tr(J^dagger J).
    physical : bool
        True when the Choi matrix is positive semidefinite within
        ``CHOI_PSD_TOL``, i.e. the map is completely positive.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise ValueError("Mueller matrix must be 4x4")
    choi = np.zeros((4, 4), dtype=complex)
    for i, si in enumerate(STOKES_OPS):
        for k, sk in enumerate(STOKES_OPS):
            choi += 0.5 * m[i, k] * np.kron(sk.T, si)
    choi = 0.5 * (choi + choi.conj().T)
    eigvals = np.linalg.eigvalsh(choi)
    physical = bool(eigvals[0] >= -CHOI_PSD_TOL)
    return choi, physical


def kraus_from_mueller(m: np.ndarray, tol: float = CHOI_PSD_TOL) -> list[np.ndarray]:
    """Kraus operators of a physical Mueller matrix.

    Raises ``ValueError`` when the map is not completely positive.
    """
    choi, physical = mueller_to_choi(m)
    if not physical:
        raise ValueError("Mueller matrix is not completely positive")
    eigvals, eigvecs = np.linalg.eigh(choi)
    kraus = []
    for lam, vec in zip(eigvals, eigvecs.T):
        if lam <= tol:
            continue
        # Column index pairs are (input k, output i); unvec accordingly.
        kraus.append(np.sqrt(lam) * vec.reshape(2, 2).T)
    return kraus
