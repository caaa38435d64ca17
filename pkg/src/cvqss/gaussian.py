"""Gaussian-state covariance toolbox for continuous-variable optics.

Conventions (used everywhere in this package):

* hbar = 2, so the vacuum covariance matrix is the identity.
* Quadratures are interleaved per mode: r = (x1, p1, x2, p2, ...) ("XPXP").
* The symplectic form is Omega = direct sum of [[0, 1], [-1, 0]] blocks.
* A covariance matrix is Gamma_ij = <{Dr_i, Dr_j}>/2 with Dr = r - <r>.

All operations take and return plain ``numpy.ndarray`` objects; a covariance
matrix for N modes is a (2N, 2N) symmetric array, a mean vector has length 2N,
and a symplectic operation is a (2N, 2N) array S acting as Gamma -> S Gamma S^T.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "omega",
    "vacuum_cm",
    "thermal_cm",
    "squeezer",
    "beamsplitter",
    "cz_gate",
    "embed",
    "evolve",
    "evolve_mean",
    "partial_trace",
    "reorder",
    "xpxp_to_xxpp",
    "xxpp_to_xpxp",
    "quad_index",
    "condition_homodyne",
    "condition_heterodyne",
    "conditional_variance",
    "symplectic_eigenvalues",
    "entropy_g",
    "von_neumann_entropy",
    "assert_symplectic",
    "assert_physical",
    "two_mode_squeezed_cm",
]

#: tolerance used when checking S Omega S^T = Omega
SYMPLECTIC_TOL = 1e-12
#: eigenvalue floor when checking Gamma + i*Omega >= 0
PHYSICALITY_TOL = -1e-9
#: relative cutoff for Moore-Penrose inversion of singular homodyne blocks
PINV_RCOND = 1e-12
#: symplectic eigenvalues below 1 + this are treated as pure-mode values
ENTROPY_NU_TOL = 1e-12


def omega(n_modes: int) -> np.ndarray:
    """Symplectic form for ``n_modes`` modes in XPXP ordering.

    Parameters
    ----------
    n_modes : int
        Number of bosonic modes.

    Returns
    -------
    numpy.ndarray
        (2n, 2n) block-diagonal matrix of [[0, 1], [-1, 0]] blocks.
    """
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        out[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = block
    return out


def vacuum_cm(n_modes: int) -> np.ndarray:
    """Covariance matrix of ``n_modes`` vacuum modes (identity)."""
    return np.eye(2 * n_modes)


def thermal_cm(variance: float, n_modes: int = 1) -> np.ndarray:
    """Covariance matrix of identical thermal modes with quadrature ``variance``.

    ``variance`` must be >= 1 (vacuum) up to rounding.
    """
    if variance < 1.0 - 1e-12:
        raise ValueError(f"thermal variance must be >= 1, got {variance}")
    return float(variance) * np.eye(2 * n_modes)


def squeezer(r: float) -> np.ndarray:
    """Single-mode squeezer S(r) = diag(e^-r, e^r).

    Positive ``r`` squeezes x and anti-squeezes p; the p-squeezed input used
    by graph-state sources is ``squeezer(-r)``.
    """
    return np.diag([np.exp(-r), np.exp(r)])


def beamsplitter(transmission: float) -> np.ndarray:
    """Two-mode beamsplitter with intensity ``transmission`` T.

    Acts on (x1, p1, x2, p2) as
    [[sqrt(T) I, sqrt(1-T) I], [-sqrt(1-T) I, sqrt(T) I]].
    """
    if not 0.0 <= transmission <= 1.0:
        raise ValueError(f"transmission must be in [0, 1], got {transmission}")
    t = np.sqrt(transmission)
    rfl = np.sqrt(1.0 - transmission)
    eye2 = np.eye(2)
    return np.block([[t * eye2, rfl * eye2], [-rfl * eye2, t * eye2]])


def cz_gate(gain: float) -> np.ndarray:
    """Two-mode controlled-phase gate: p_i -> p_i + g x_j for both orderings."""
    out = np.eye(4)
    out[1, 2] = gain
    out[3, 0] = gain
    return out


def embed(op: np.ndarray, modes: list[int], n_modes: int) -> np.ndarray:
    """Embed a small symplectic ``op`` acting on ``modes`` into an N-mode identity.

    Parameters
    ----------
    op : numpy.ndarray
        (2k, 2k) symplectic acting on k modes in XPXP order.
    modes : list of int
        The target mode indices, in the order the small operation expects them.
    n_modes : int
        Total number of modes of the embedding space.
    """
    k = op.shape[0] // 2
    if len(modes) != k:
        raise ValueError(f"op acts on {k} modes but {len(modes)} targets given")
    if len(set(modes)) != len(modes):
        raise ValueError(f"target modes must be distinct, got {modes}")
    if any(m < 0 or m >= n_modes for m in modes):
        raise ValueError(f"target modes {modes} out of range for {n_modes} modes")
    out = np.eye(2 * n_modes)
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
    out[np.ix_(idx, idx)] = op
    return out


def evolve(cm: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Apply a symplectic operation to a covariance matrix: S Gamma S^T."""
    return op @ cm @ op.T


def evolve_mean(mean: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Apply a symplectic operation to a mean vector."""
    return op @ mean


def partial_trace(cm: np.ndarray, keep: list[int]) -> np.ndarray:
    """Reduced covariance matrix on the modes in ``keep`` (principal submatrix)."""
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in keep])
    return cm[np.ix_(idx, idx)].copy()


def reorder(cm: np.ndarray, perm: list[int]) -> np.ndarray:
    """Permute modes so that new mode i is old mode ``perm[i]``."""
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in perm])
    return cm[np.ix_(idx, idx)].copy()


def _xxpp_permutation(n_modes: int) -> np.ndarray:
    # positions of (x1..xN, p1..pN) inside the XPXP vector
    return np.concatenate([2 * np.arange(n_modes), 2 * np.arange(n_modes) + 1])


def xpxp_to_xxpp(mat: np.ndarray) -> np.ndarray:
    """Convert a matrix from interleaved (XPXP) to block (XXPP) quadrature order."""
    n = mat.shape[0] // 2
    idx = _xxpp_permutation(n)
    return mat[np.ix_(idx, idx)].copy()


def xxpp_to_xpxp(mat: np.ndarray) -> np.ndarray:
    """Convert a matrix from block (XXPP) back to interleaved (XPXP) order."""
    n = mat.shape[0] // 2
    idx = np.argsort(_xxpp_permutation(n))
    return mat[np.ix_(idx, idx)].copy()


def quad_index(mode: int, quad: str) -> int:
    """Row index of quadrature ``quad`` ('x' or 'p') of ``mode`` in XPXP order."""
    if quad == "x":
        return 2 * mode
    if quad == "p":
        return 2 * mode + 1
    raise ValueError(f"quadrature must be 'x' or 'p', got {quad!r}")


def condition_homodyne(
    cm: np.ndarray,
    mode: int,
    quad: str,
    outcome: float = 0.0,
    mean: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Condition a Gaussian state on a homodyne outcome of one mode.

    The measured mode is removed from the returned state.

    Parameters
    ----------
    cm : numpy.ndarray
        Covariance matrix of the full state (2N x 2N, XPXP).
    mode : int
        Index of the measured mode.
    quad : str
        Measured quadrature, 'x' or 'p'.
    outcome : float
        Measured value.
    mean : numpy.ndarray, optional
        Mean vector of the full state (zeros if omitted).

    Returns
    -------
    (numpy.ndarray, numpy.ndarray)
        Covariance matrix and mean vector of the remaining N-1 modes.
    """
    n = cm.shape[0] // 2
    if mean is None:
        mean = np.zeros(2 * n)
    others = [m for m in range(n) if m != mode]
    rest_idx = np.concatenate([[2 * m, 2 * m + 1] for m in others])
    meas_idx = np.array([2 * mode, 2 * mode + 1])

    gamma_rest = cm[np.ix_(rest_idx, rest_idx)]
    cross = cm[np.ix_(rest_idx, meas_idx)]
    gamma_meas = cm[np.ix_(meas_idx, meas_idx)]

    proj = np.diag([1.0, 0.0]) if quad == "x" else np.diag([0.0, 1.0])
    pinned = proj @ gamma_meas @ proj
    inv = np.linalg.pinv(pinned, rcond=PINV_RCOND)

    cm_out = gamma_rest - cross @ inv @ cross.T
    target = np.array([outcome, 0.0]) if quad == "x" else np.array([0.0, outcome])
    mean_out = mean[rest_idx] + cross @ inv @ (target - mean[meas_idx])
    return cm_out, mean_out


def condition_heterodyne(
    cm: np.ndarray,
    mode: int,
    outcome: tuple[float, float] = (0.0, 0.0),
    mean: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Condition a Gaussian state on a heterodyne outcome of one mode.

    Heterodyning mixes the measured mode with vacuum, so the Schur complement
    is taken against the measured block plus one shot-noise unit; the outcome
    is a point in phase space.  The measured mode is removed from the returned
    state and, as for any rank-one Gaussian measurement, the conditional
    covariance is outcome-independent.

    Returns the covariance matrix and mean vector of the remaining modes.
    """
    n = cm.shape[0] // 2
    if mean is None:
        mean = np.zeros(2 * n)
    others = [m for m in range(n) if m != mode]
    rest_idx = np.concatenate([[2 * m, 2 * m + 1] for m in others])
    meas_idx = np.array([2 * mode, 2 * mode + 1])

    gamma_rest = cm[np.ix_(rest_idx, rest_idx)]
    cross = cm[np.ix_(rest_idx, meas_idx)]
    gamma_meas = cm[np.ix_(meas_idx, meas_idx)] + np.eye(2)

    inv = np.linalg.inv(gamma_meas)
    cm_out = gamma_rest - cross @ inv @ cross.T
    mean_out = mean[rest_idx] + cross @ inv @ (np.asarray(outcome) - mean[meas_idx])
    return cm_out, mean_out


def conditional_variance(
    cm: np.ndarray, target: tuple[int, str], given: list[tuple[int, str]]
) -> float:
    """Residual variance of one quadrature after optimal estimation from others.

    ``target`` and each element of ``given`` are (mode, 'x'|'p') pairs; every
    measured quadrature must live on a distinct mode so the measurements
    commute.  Equivalent to iterating :func:`condition_homodyne` over ``given``
    and reading off the target variance.
    """
    modes = [m for m, _ in given]
    if len(set(modes)) != len(modes) or target[0] in modes:
        raise ValueError("measured quadratures must be on distinct, unmeasured modes")
    t = quad_index(*target)
    g = [quad_index(m, q) for m, q in given]
    var_t = cm[t, t]
    if not g:
        return float(var_t)
    cross = cm[np.ix_([t], g)][0]
    block = cm[np.ix_(g, g)]
    return float(var_t - cross @ np.linalg.solve(block, cross))


def symplectic_eigenvalues(cm: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a covariance matrix, one value per mode.

    The eigenvalues of i Omega Gamma come in +/- pairs; the returned array
    holds each pair once, sorted in descending order.
    """
    n = cm.shape[0] // 2
    eig = np.linalg.eigvals(1j * omega(n) @ cm)
    nus = np.sort(np.abs(eig))[::-1]
    # pairs are adjacent after sorting absolute values
    picked = nus[::2]
    partner = nus[1::2]
    if not np.allclose(picked, partner, rtol=1e-9, atol=1e-9):
        raise np.linalg.LinAlgError("symplectic spectrum did not pair up")
    if picked.min() < 1.0 - 1e-9:
        raise ValueError(
            f"covariance is unphysical (symplectic eigenvalue {picked.min():.12g} < 1)"
        )
    return picked


def entropy_g(nu: float) -> float:
    """Bosonic entropy weight g(x) in bits; g(1) = 0, g(3) = 2."""
    if nu <= 1.0 + ENTROPY_NU_TOL:
        return 0.0
    up = (nu + 1.0) / 2.0
    dn = (nu - 1.0) / 2.0
    return float(up * np.log2(up) - dn * np.log2(dn))


def von_neumann_entropy(cm: np.ndarray) -> float:
    """Von Neumann entropy of a Gaussian state in bits."""
    return float(sum(entropy_g(nu) for nu in symplectic_eigenvalues(cm)))


def assert_symplectic(op: np.ndarray, tol: float = SYMPLECTIC_TOL) -> None:
    """Raise ValueError when S Omega S^T deviates from Omega beyond ``tol``."""
    n = op.shape[0] // 2
    w = omega(n)
    err = np.max(np.abs(op @ w @ op.T - w))
    if err > tol:
        raise ValueError(f"operation is not symplectic (max deviation {err:.3e})")


def assert_physical(cm: np.ndarray, tol: float = PHYSICALITY_TOL) -> None:
    """Raise ValueError when Gamma + i Omega has eigenvalues below ``tol``."""
    n = cm.shape[0] // 2
    eig = np.linalg.eigvalsh(cm + 1j * omega(n))
    if eig.min() < tol:
        raise ValueError(
            f"covariance is unphysical (min eigenvalue {eig.min():.3e})"
        )


def two_mode_squeezed_cm(r: float) -> np.ndarray:
    """Two-mode squeezed vacuum covariance, cosh(2r) on the diagonal blocks.

    Off-diagonal blocks are sinh(2r) * diag(1, -1): x quadratures correlated,
    p quadratures anti-correlated.
    """
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    eye2 = np.eye(2)
    zmat = np.diag([1.0, -1.0])
    return np.block([[c * eye2, s * zmat], [s * zmat, c * eye2]])
