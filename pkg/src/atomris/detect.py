"""Magnitude-only front end and the three symbol detectors.

The photodetectors report only z = |H_eq s + b + n|.  With the RIS phases
aligned to the LO and a strong LO, z is approximately |b| + H_opt s plus
residual noise, so re-attaching the LO phase and subtracting b yields a
linear system the least-squares detector inverts directly.  The exhaustive
detector searches all Q^K symbol vectors against the exact magnitude
model; the genie ZF detector consumes the complex observation (known
phase) and lower-bounds both.

The scalar operations wrap batched kernels (columns = symbol vectors), so
per-vector and campaign results agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import BudgetExceededError, SingularMatrixError
from .modem import Constellation, NoiseSpec, slice_to_indices

__all__ = [
    "DetectorOutput",
    "received_magnitude",
    "front_end",
    "ls_estimate",
    "detect_proposed",
    "detect_exhaustive",
    "detect_zf_known_phase",
    "detect_proposed_batch",
    "detect_exhaustive_batch",
    "detect_zf_batch",
    "enumerate_symbol_vectors",
]


@dataclass(frozen=True)
class DetectorOutput:
    """Detected symbols (constellation points, one per user) and their
    concatenated bit labels."""

    symbols: np.ndarray
    bits: str


def received_magnitude(
    h_eq: np.ndarray, s: np.ndarray, b: np.ndarray, noise: np.ndarray | None = None
) -> np.ndarray:
    """Deterministic front-end core: z = |H_eq s + b (+ n)|."""
    h_eq = np.asarray(h_eq, dtype=complex)
    s = np.asarray(s, dtype=float)
    b = np.asarray(b, dtype=complex)
    m, k = h_eq.shape
    if s.shape != (k,):
        raise ValueError(f"s has shape {s.shape}, expected ({k},)")
    if b.shape != (m,):
        raise ValueError(f"b has shape {b.shape}, expected ({m},)")
    y = h_eq @ s + b
    if noise is not None:
        y = y + np.asarray(noise, dtype=complex)
    return np.abs(y)


def front_end(
    h_eq: np.ndarray,
    s: np.ndarray,
    b: np.ndarray,
    noise: NoiseSpec,
    rng: np.random.Generator,
) -> np.ndarray:
    """Photodetector observation with circularly-symmetric Gaussian noise
    of total variance ``noise.sigma2`` per cell."""
    m = np.asarray(h_eq).shape[0]
    scale = np.sqrt(noise.sigma2 / 2.0)
    n = scale * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    return received_magnitude(h_eq, s, b, n)


def _gram_solve(h_eq: np.ndarray, rhs: np.ndarray, cond_threshold: float = 1e12) -> np.ndarray:
    """Solve the normal equations (H^H H) x = H^H rhs with a condition check."""
    m, k = h_eq.shape
    if k > m:
        raise ValueError(f"more users ({k}) than cells ({m}); least squares undefined")
    gram = h_eq.conj().T @ h_eq
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > cond_threshold:
        raise SingularMatrixError(
            f"H^H H is numerically singular (condition number {cond:.3e})"
        )
    return np.linalg.solve(gram, h_eq.conj().T @ rhs)


def ls_estimate(h_eq: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Pre-slicing least-squares estimate (H^H H)^-1 H^H rhs."""
    rhs = np.asarray(rhs, dtype=complex)
    return _gram_solve(np.asarray(h_eq, dtype=complex), rhs)


def _indices_to_output(idx: np.ndarray, c: Constellation) -> DetectorOutput:
    return DetectorOutput(
        symbols=c.points[idx], bits="".join(c.labels[i] for i in idx)
    )


def detect_proposed_batch(
    z: np.ndarray, h_eq: np.ndarray, b: np.ndarray, c: Constellation
) -> np.ndarray:
    """Least-squares detection of a batch of magnitude observations.

    ``z`` has shape (M, n); returns constellation indices (K, n).  The LO
    phase is re-attached to z, the complex LO subtracted, and the real
    part of the LS estimate sliced per user.
    """
    z = np.asarray(z, dtype=float)
    h_eq = np.asarray(h_eq, dtype=complex)
    b = np.asarray(b, dtype=complex)
    rhs = z * np.exp(1j * np.angle(b))[:, None] - b[:, None]
    s_hat = _gram_solve(h_eq, rhs).real
    return slice_to_indices(s_hat, c)


def detect_proposed(
    z: np.ndarray, h_eq: np.ndarray, b: np.ndarray, c: Constellation
) -> DetectorOutput:
    """Detect one magnitude observation with the least-squares detector."""
    idx = detect_proposed_batch(np.asarray(z, dtype=float)[:, None], h_eq, b, c)[:, 0]
    return _indices_to_output(idx, c)


def enumerate_symbol_vectors(c: Constellation, num_users: int) -> np.ndarray:
    """All Q^K candidate symbol vectors as an index matrix (K, Q^K), in
    lexicographic symbol order (first user most significant)."""
    combos = np.array(list(product(range(c.order), repeat=num_users)), dtype=np.intp)
    return combos.T.reshape(num_users, -1)


def detect_exhaustive_batch(
    z: np.ndarray,
    h_eq: np.ndarray,
    b: np.ndarray,
    c: Constellation,
    budget: int = 2**20,
) -> np.ndarray:
    """Exhaustive-search detection of a batch of magnitude observations.

    Minimizes ||z - |H_eq s + b|||_2^2 over all Q^K candidates; ties break
    toward the lexicographically smallest candidate.  Refuses Q^K beyond
    ``budget`` with a cost estimate.
    """
    z = np.asarray(z, dtype=float)
    h_eq = np.asarray(h_eq, dtype=complex)
    b = np.asarray(b, dtype=complex)
    m, k = h_eq.shape
    if z.shape[0] != m or b.shape != (m,):
        raise ValueError(
            f"shape mismatch: z {z.shape}, b {b.shape}, channel ({m}, {k})"
        )
    n_cand = c.order**k
    if n_cand > budget:
        raise BudgetExceededError(
            f"exhaustive search needs Q^K = {c.order}^{k} = {n_cand} candidates "
            f"(budget {budget})"
        )
    cand_idx = enumerate_symbol_vectors(c, k)
    cand_mag = np.abs(h_eq @ c.points[cand_idx] + b[:, None])
    # ||z - m_j||^2 = ||m_j||^2 - 2 m_j.z + ||z||^2; the ||z||^2 term is
    # constant per observation and dropped.
    scores = np.sum(cand_mag**2, axis=0)[:, None] - 2.0 * (cand_mag.T @ z)
    best = np.argmin(scores, axis=0)
    return cand_idx[:, best]


def detect_exhaustive(
    z: np.ndarray,
    h_eq: np.ndarray,
    b: np.ndarray,
    c: Constellation,
    budget: int = 2**20,
) -> DetectorOutput:
    """Detect one magnitude observation by exhaustive search."""
    idx = detect_exhaustive_batch(
        np.asarray(z, dtype=float)[:, None], h_eq, b, c, budget
    )[:, 0]
    return _indices_to_output(idx, c)


def detect_zf_batch(
    y: np.ndarray, h_eq: np.ndarray, b: np.ndarray, c: Constellation
) -> np.ndarray:
    """Genie zero-forcing on complex observations y = H_eq s + b + n."""
    y = np.asarray(y, dtype=complex)
    b = np.asarray(b, dtype=complex)
    s_hat = _gram_solve(np.asarray(h_eq, dtype=complex), y - b[:, None]).real
    return slice_to_indices(s_hat, c)


def detect_zf_known_phase(
    y: np.ndarray, h_eq: np.ndarray, b: np.ndarray, c: Constellation
) -> DetectorOutput:
    """Detect one complex (known-phase) observation by zero forcing."""
    idx = detect_zf_batch(np.asarray(y, dtype=complex)[:, None], h_eq, b, c)[:, 0]
    return _indices_to_output(idx, c)
