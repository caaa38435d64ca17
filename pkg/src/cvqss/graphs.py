"""Gaussian graph-state sources and their offline-squeezing decomposition.

A graph state on N modes is produced by p-squeezing every mode (``squeezer(-r)``)
and applying a controlled-phase gate of gain ``A[i, j]`` across every edge of a
weighted adjacency matrix A.  Its nullifiers n_i = p_i - sum_j A[i, j] x_j all
have variance e^{-2r}.

Any such circuit can be rearranged (Bloch-Messiah) into a set of single-mode
squeezers followed by a passive interferometer; the largest squeezer in that
arrangement is what a hardware budget bounds.  :func:`bloch_messiah` computes
the arrangement numerically for any symplectic, :func:`line_bloch_squeezings`
gives the closed form for the three-mode line graph, and :func:`budget_solve`
inverts it: the largest gate gain g compatible with a cap on the offline
squeezing.
"""

from __future__ import annotations

import numpy as np

from .gaussian import (
    assert_symplectic,
    cz_gate,
    embed,
    omega,
    squeezer,
    xxpp_to_xpxp,
)

__all__ = [
    "line_adjacency",
    "triangle_adjacency",
    "canonical_graph",
    "canonical_line_graph",
    "nullifier_variances",
    "adjacency_graph_symplectic",
    "bloch_messiah",
    "line_bloch_squeezings",
    "max_offline_squeezing",
    "budget_solve",
    "squeezing_to_db",
    "db_to_squeezing",
]

#: eigenvalue clustering tolerance in the Bloch-Messiah pairing
_CLUSTER_RTOL = 1e-8


def line_adjacency(gain: float, n_modes: int = 3) -> np.ndarray:
    """Adjacency matrix of a line (path) graph with uniform edge gain."""
    adj = np.zeros((n_modes, n_modes))
    for i in range(n_modes - 1):
        adj[i, i + 1] = adj[i + 1, i] = gain
    return adj


def triangle_adjacency(gain: float) -> np.ndarray:
    """Adjacency matrix of the 3-cycle with uniform edge gain."""
    return gain * (np.ones((3, 3)) - np.eye(3))


def canonical_graph(adjacency: np.ndarray, r: float) -> np.ndarray:
    """Symplectic of the canonical graph-state circuit for ``adjacency``.

    p-squeezes every mode by ``r`` and applies one controlled-phase gate per
    edge (upper triangle of the adjacency matrix).
    """
    n = adjacency.shape[0]
    total = np.kron(np.eye(n), squeezer(-r))
    for i in range(n):
        for j in range(i + 1, n):
            if adjacency[i, j] != 0.0:
                total = embed(cz_gate(adjacency[i, j]), [i, j], n) @ total
    return total


def canonical_line_graph(r: float, gain: float) -> np.ndarray:
    """Symplectic of the three-mode line-graph source (modes A-B-C)."""
    return canonical_graph(line_adjacency(gain), r)


def adjacency_graph_symplectic(adjacency: np.ndarray, r: float) -> np.ndarray:
    """Graph symplectic in closed form: x-shear by the adjacency after squeezing.

    In XXPP block order this is [[I, 0], [A, I]] . diag(e^r I, e^-r I); the
    result is returned in the package's interleaved ordering and equals
    :func:`canonical_graph` exactly.
    """
    n = adjacency.shape[0]
    eye = np.eye(n)
    zero = np.zeros((n, n))
    shear = np.block([[eye, zero], [adjacency, eye]])
    scale = np.diag(np.concatenate([np.full(n, np.e**r), np.full(n, np.e**-r)]))
    return xxpp_to_xpxp(shear @ scale)


def nullifier_variances(cm: np.ndarray, adjacency: np.ndarray) -> np.ndarray:
    """Variances of the graph nullifiers n_i = p_i - sum_j A[i, j] x_j."""
    n = adjacency.shape[0]
    coeff = np.zeros((n, 2 * n))
    for i in range(n):
        coeff[i, 2 * i + 1] = 1.0
        for j in range(n):
            coeff[i, 2 * j] -= adjacency[i, j]
    return np.einsum("ik,kl,il->i", coeff, cm, coeff)


def _symplectic_pairs(mmat: np.ndarray) -> list[tuple[float, np.ndarray, np.ndarray]]:
    """Pair the eigenspaces of a symmetric positive-definite symplectic matrix.

    Returns one (eigenvalue >= 1, x-column, p-column) triple per mode such
    that the x/p columns are orthonormal and symplectically conjugate.
    """
    n = mmat.shape[0] // 2
    w = omega(n)
    vals, vecs = np.linalg.eigh(mmat)
    pairs: list[tuple[float, np.ndarray, np.ndarray]] = []

    # cluster the spectrum (eigenvalues come in lam, 1/lam pairs)
    order = np.argsort(vals)[::-1]
    consumed = np.zeros(len(vals), dtype=bool)
    i = 0
    while i < len(order):
        k = order[i]
        if consumed[k]:
            i += 1
            continue
        lam = vals[k]
        cluster = [
            idx
            for idx in order
            if not consumed[idx] and abs(vals[idx] - lam) <= _CLUSTER_RTOL * max(1.0, lam)
        ]
        if lam > 1.0 + _CLUSTER_RTOL:
            # partners -Omega v span the 1/lam eigenspace
            for idx in cluster:
                v = vecs[:, idx]
                partner = -w @ v
                pairs.append((lam, v, partner))
                consumed[idx] = True
            inv = 1.0 / lam
            for idx in order:
                if not consumed[idx] and abs(vals[idx] - inv) <= _CLUSTER_RTOL * max(1.0, inv):
                    consumed[idx] = True
        elif lam >= 1.0 - _CLUSTER_RTOL:
            # unit eigenspace is Omega-invariant; peel conjugate pairs off it
            basis = vecs[:, cluster]
            for idx in cluster:
                consumed[idx] = True
            while basis.shape[1] > 0:
                v = basis[:, 0]
                v = v / np.linalg.norm(v)
                partner = -w @ v
                pairs.append((1.0, v, partner))
                proj = basis - np.outer(v, v @ basis) - np.outer(partner, partner @ basis)
                # SVD, not plain QR: unpivoted QR misreads the rank of the
                # projected basis and can drop a conjugate pair.
                u, sing, _ = np.linalg.svd(proj, full_matrices=False)
                basis = u[:, sing > 1e-10]
        else:
            # member of a 1/lam pair handled when its partner is reached
            i += 1
            continue
        i += 1
    if len(pairs) != n:
        raise np.linalg.LinAlgError(
            f"symplectic pairing produced {len(pairs)} modes, expected {n}"
        )
    # largest squeezing first; deterministic order
    pairs.sort(key=lambda t: -t[0])
    return pairs


def bloch_messiah(op: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a symplectic into passive . single-mode squeezers, up to a passive.

    Returns ``(passive, r_values)`` such that with D the direct sum of
    ``squeezer(-r_i)`` blocks, ``passive @ D`` reproduces the moment matrix of
    ``op``: (passive D)(passive D)^T = op op^T.  ``passive`` is orthogonal and
    symplectic; ``r_values`` are non-negative and sorted descending.  The
    discarded right-hand passive factor acts trivially on vacuum inputs.
    """
    mmat = op @ op.T
    pairs = _symplectic_pairs(mmat)
    n = len(pairs)
    passive = np.zeros((2 * n, 2 * n))
    rs = np.zeros(n)
    for mode, (lam, xcol, pcol) in enumerate(pairs):
        passive[:, 2 * mode] = xcol
        passive[:, 2 * mode + 1] = pcol
        rs[mode] = 0.5 * np.log(lam)
    assert_symplectic(passive, tol=1e-9)
    return passive, rs


def line_bloch_squeezings(r: float, gain: float) -> tuple[float, float]:
    """Offline squeezers of the line-graph source, in closed form.

    Returns (r_first, r_pair): one squeezer keeps the input value r, the other
    two share the value r_pair >= r determined by the invariant
    s = (2 g^2 + 1) e^{2r} + e^{-2r} = 2 cosh(2 r_pair).
    """
    # s -/+ 2 in cancellation-free form so r_pair stays accurate as r, g -> 0
    bump = 2.0 * gain**2 * np.exp(2.0 * r)
    s_minus = bump + 4.0 * np.sinh(r) ** 2
    s_plus = bump + 4.0 * np.cosh(r) ** 2
    r_pair = np.log(0.5 * (np.sqrt(s_minus) + np.sqrt(s_plus)))
    return float(r), float(r_pair)


def max_offline_squeezing(r: float, gain: float) -> float:
    """Largest offline squeezer needed by the line-graph source (numeric)."""
    _, rs = bloch_messiah(canonical_line_graph(r, gain))
    return float(rs.max()) if len(rs) else 0.0


def budget_solve(r: float, r_max: float) -> float:
    """Largest line-graph gate gain spending a squeezing budget exactly.

    Given the cap ``r_max`` on any offline squeezer and the effective graph
    squeezing ``r`` <= r_max, returns the g >= 0 with
    g^2 = (cosh 2 r_max - cosh 2 r) e^{-2 r}; the pair squeezers then sit
    exactly at the cap.
    """
    if r < 0 or r_max < 0:
        raise ValueError("squeezing parameters must be non-negative")
    if r > r_max + 1e-12:
        raise ValueError(f"r={r} exceeds the budget r_max={r_max}")
    gain_sq = (np.cosh(2.0 * r_max) - np.cosh(2.0 * r)) * np.exp(-2.0 * r)
    return float(np.sqrt(max(gain_sq, 0.0)))


def squeezing_to_db(r: float) -> float:
    """Quadrature noise suppression of ``squeezer(r)`` in decibels."""
    return 20.0 * r / np.log(10.0)


def db_to_squeezing(db: float) -> float:
    """Squeezing parameter giving ``db`` decibels of noise suppression."""
    return np.log(10.0) * db / 20.0
