"""Channel and local-oscillator generation for the RIS-assisted atomic receiver.

Three matrices describe the link from K single-antenna users to M vapor
cells through an N-element RIS:

* ``h_ur`` (N x K): user-to-RIS, i.i.d. circularly-symmetric CN(0, 1),
* ``h_rv`` (M x N): RIS-to-vapor-cell, multipath dipole-coupling model,
* ``h_uv`` (M x K): direct user-to-vapor-cell, same multipath model.

The multipath model sums, over ``num_paths`` propagation paths, a coupling
term (dipole moment dotted with the wave polarization, divided by hbar),
a path loss and a phase rotation.  Polarization directions are drawn
uniformly from the unit circle perpendicular to a configurable incidence
axis.  By default the coupling products are folded into a single gain
scalar and the output is normalized to unit per-entry variance, which
keeps desk-scale experiments on the same footing as the CN(0,1) user-RIS
links; supplying an explicit ``dipole_moment`` switches to the fully
physical form.

All randomness flows through an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PhysicalPathParams",
    "LOParams",
    "ChannelSet",
    "gen_user_ris_channel",
    "gen_physical_channel",
    "gen_lo_vector",
    "effective_channel",
    "save_channel_set",
    "load_channel_set",
]


@dataclass(frozen=True)
class PhysicalPathParams:
    """Generative parameters of the multipath dipole-coupling channel.

    Attributes
    ----------
    num_paths : int
        Number of propagation paths summed per matrix entry (L >= 1).
    coupling_gain : float
        Folded coupling scalar replacing |dipole| / hbar when no explicit
        dipole moment is given.
    dipole_moment : tuple of 3 floats, optional
        Explicit dipole moment vector.  When set, the per-path coupling is
        dot(dipole_moment, polarization) / hbar.
    hbar : float
        Reduced Planck constant (kept configurable so desk-scale runs can
        use 1.0 instead of meaningless absolute units).
    incidence_axis : tuple of 3 floats
        Axis perpendicular to the circle from which polarization vectors
        are drawn.
    path_loss_span : (float, float)
        Path losses are drawn log-uniformly from this closed interval.
    normalize : bool
        Scale entries so their variance is exactly 1 under the random
        draws.  Must be False when explicit per-path overrides are used.
    """

    num_paths: int = 4
    coupling_gain: float = 1.0
    dipole_moment: tuple[float, float, float] | None = None
    hbar: float = 1.0
    incidence_axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    path_loss_span: tuple[float, float] = (0.1, 1.0)
    normalize: bool = True


@dataclass(frozen=True)
class LOParams:
    """Generative parameters of the local-oscillator vector.

    Each cell's LO sample is
    ``(reference_symbol / hbar) * dot(dipole, polarization) * sqrt(power)
    * path_loss * exp(j * phase)``, with one term per vapor cell (the LO
    is locally generated, so there is no multipath sum).
    """

    power: float = 1e8
    reference_symbol: float = 1.0
    coupling_gain: float = 1.0
    dipole_moment: tuple[float, float, float] | None = None
    hbar: float = 1.0
    incidence_axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    path_loss_span: tuple[float, float] = (0.5, 1.0)


@dataclass(frozen=True)
class ChannelSet:
    """The three channel matrices of one realization.

    Invariants: ``h_ur`` is N x K, ``h_rv`` is M x N, ``h_uv`` is M x K,
    with consistent inner dimensions.  N = 0 (no RIS) is allowed.
    """

    h_ur: np.ndarray
    h_rv: np.ndarray
    h_uv: np.ndarray

    def __post_init__(self):
        h_ur = np.asarray(self.h_ur, dtype=complex)
        h_rv = np.asarray(self.h_rv, dtype=complex)
        h_uv = np.asarray(self.h_uv, dtype=complex)
        object.__setattr__(self, "h_ur", h_ur)
        object.__setattr__(self, "h_rv", h_rv)
        object.__setattr__(self, "h_uv", h_uv)
        if h_ur.ndim != 2 or h_rv.ndim != 2 or h_uv.ndim != 2:
            raise ValueError("channel matrices must be 2-D")
        n, k = h_ur.shape
        m = h_rv.shape[0]
        if h_rv.shape[1] != n:
            raise ValueError(
                f"h_rv has {h_rv.shape[1]} columns but h_ur has {n} rows"
            )
        if h_uv.shape != (m, k):
            raise ValueError(
                f"h_uv shape {h_uv.shape} inconsistent with (M={m}, K={k})"
            )
        for name, mat in (("h_ur", h_ur), ("h_rv", h_rv), ("h_uv", h_uv)):
            if mat.size and not np.all(np.isfinite(mat)):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def num_cells(self) -> int:
        return self.h_rv.shape[0]

    @property
    def num_elements(self) -> int:
        return self.h_ur.shape[0]

    @property
    def num_users(self) -> int:
        return self.h_ur.shape[1]


def gen_user_ris_channel(num_users: int, num_elements: int, rng: np.random.Generator) -> np.ndarray:
    """Draw the N x K user-to-RIS matrix with i.i.d. CN(0, 1) entries."""
    if num_users < 1 or num_elements < 1:
        raise ValueError("num_users and num_elements must be >= 1")
    re = rng.standard_normal((num_elements, num_users))
    im = rng.standard_normal((num_elements, num_users))
    return (re + 1j * im) / math.sqrt(2.0)


def _circle_basis(axis) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis (u, v) of the plane perpendicular to ``axis``.

    Deterministic in the axis so draws are reproducible: u starts from the
    standard basis vector least aligned with the axis.
    """
    a = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        raise ValueError("incidence axis must be nonzero")
    a = a / norm
    seed = np.zeros(3)
    seed[np.argmin(np.abs(a))] = 1.0
    u = np.cross(seed, a)
    u = u / np.linalg.norm(u)
    v = np.cross(a, u)
    return u, v


def _coupling_vector(dipole_moment, hbar: float, coupling_gain: float, u: np.ndarray) -> np.ndarray:
    """Effective 3-vector dotted with polarizations.

    Explicit dipole: dipole / hbar.  Folded: gain along the first in-plane
    basis vector, so the folded coupling is gain * cos(polarization angle).
    """
    if dipole_moment is not None:
        return np.asarray(dipole_moment, dtype=float) / hbar
    return coupling_gain * u


def _draw_polarization(shape, u: np.ndarray, v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    psi = rng.uniform(0.0, 2.0 * np.pi, shape)
    return np.cos(psi)[..., None] * u + np.sin(psi)[..., None] * v


def _draw_path_loss(shape, span, rng: np.random.Generator) -> np.ndarray:
    lo, hi = span
    if lo < 0 or hi < lo:
        raise ValueError(f"path_loss_span must satisfy 0 <= lo <= hi, got {span}")
    if lo == hi:
        return np.full(shape, float(lo))
    if lo == 0:
        raise ValueError("log-uniform path loss requires a positive lower bound")
    return np.exp(rng.uniform(math.log(lo), math.log(hi), shape))


def _log_uniform_second_moment(span) -> float:
    lo, hi = span
    if lo == hi:
        return float(lo) ** 2
    return (hi**2 - lo**2) / (2.0 * (math.log(hi) - math.log(lo)))


def _validate_polarization(pol: np.ndarray) -> None:
    norms = np.linalg.norm(pol, axis=-1)
    if not np.allclose(norms, 1.0, atol=1e-9):
        raise ValueError("polarization vectors must have unit norm")


def gen_physical_channel(
    num_cells: int,
    num_cols: int,
    params: PhysicalPathParams,
    rng: np.random.Generator,
    *,
    polarization: np.ndarray | None = None,
    path_loss: np.ndarray | float | None = None,
    phase: np.ndarray | float | None = None,
) -> np.ndarray:
    """Generate an M x cols multipath channel matrix.

    Entry (m, k) sums over paths l:
    coupling(m, k, l) * path_loss(m, k, l) * exp(j * phase(m, k, l)),
    where coupling = dot(dipole, polarization) / hbar (or the folded gain
    times the in-plane polarization component).

    The keyword overrides pin the per-path realizations instead of drawing
    them; they must broadcast to shape (M, cols, L) (polarization to
    (M, cols, L, 3)).  Overrides require ``params.normalize`` False since
    the variance normalization only describes the random draws.
    """
    if num_cells < 1 or num_cols < 1:
        raise ValueError("matrix dimensions must be >= 1")
    length = params.num_paths
    if length < 1:
        raise ValueError("num_paths must be >= 1")
    explicit = polarization is not None or path_loss is not None or phase is not None
    if explicit and params.normalize:
        raise ValueError("explicit per-path overrides require normalize=False")

    u, v = _circle_basis(params.incidence_axis)
    shape = (num_cells, num_cols, length)

    if polarization is None:
        pol = _draw_polarization(shape, u, v, rng)
    else:
        pol = np.broadcast_to(np.asarray(polarization, dtype=float), shape + (3,))
        _validate_polarization(pol)
    if path_loss is None:
        rho = _draw_path_loss(shape, params.path_loss_span, rng)
    else:
        rho = np.broadcast_to(np.asarray(path_loss, dtype=float), shape)
        if np.any(rho < 0):
            raise ValueError("path loss must be nonnegative")
    if phase is None:
        phi = rng.uniform(0.0, 2.0 * np.pi, shape)
    else:
        phi = np.broadcast_to(np.asarray(phase, dtype=float), shape)

    w = _coupling_vector(params.dipole_moment, params.hbar, params.coupling_gain, u)
    coupling = pol @ w
    entries = np.sum(coupling * rho * np.exp(1j * phi), axis=-1)

    if params.normalize:
        w_inplane_sq = float(np.dot(w, u) ** 2 + np.dot(w, v) ** 2)
        if w_inplane_sq == 0.0:
            raise ValueError(
                "dipole moment is parallel to the incidence axis; variance normalization undefined"
            )
        var = length * (w_inplane_sq / 2.0) * _log_uniform_second_moment(params.path_loss_span)
        entries = entries / math.sqrt(var)
    return entries


def gen_lo_vector(
    num_cells: int,
    params: LOParams,
    rng: np.random.Generator,
    *,
    polarization: np.ndarray | None = None,
    path_loss: np.ndarray | float | None = None,
    phase: np.ndarray | float | None = None,
) -> np.ndarray:
    """Generate the length-M local-oscillator vector.

    Each magnitude scales as sqrt(power); the keyword overrides pin the
    per-cell polarization / path loss / phase as in ``gen_physical_channel``
    (shapes broadcast to (M,), polarization to (M, 3)).
    """
    if num_cells < 1:
        raise ValueError("num_cells must be >= 1")
    if params.power < 0:
        raise ValueError("LO power must be nonnegative")

    u, v = _circle_basis(params.incidence_axis)
    shape = (num_cells,)

    if polarization is None:
        pol = _draw_polarization(shape, u, v, rng)
    else:
        pol = np.broadcast_to(np.asarray(polarization, dtype=float), shape + (3,))
        _validate_polarization(pol)
    if path_loss is None:
        rho = _draw_path_loss(shape, params.path_loss_span, rng)
    else:
        rho = np.broadcast_to(np.asarray(path_loss, dtype=float), shape)
        if np.any(rho < 0):
            raise ValueError("path loss must be nonnegative")
    if phase is None:
        phi = rng.uniform(0.0, 2.0 * np.pi, shape)
    else:
        phi = np.broadcast_to(np.asarray(phase, dtype=float), shape)

    w = _coupling_vector(params.dipole_moment, params.hbar, params.coupling_gain, u)
    coupling = pol @ w
    return params.reference_symbol * coupling * math.sqrt(params.power) * rho * np.exp(1j * phi)


def effective_channel(ch: ChannelSet, theta: np.ndarray) -> np.ndarray:
    """Compose the M x K effective channel h_rv @ diag(exp(j theta)) @ h_ur + h_uv."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ch.num_elements,):
        raise ValueError(
            f"theta has shape {theta.shape}, expected ({ch.num_elements},)"
        )
    if ch.num_elements == 0:
        return ch.h_uv.copy()
    return (ch.h_rv * np.exp(1j * theta)) @ ch.h_ur + ch.h_uv


_CHANNEL_FILE_MAGIC = "# atomris-channelset v1"


def save_channel_set(ch: ChannelSet, path) -> None:
    """Write a channel set as self-describing text (dims header, then
    row-major "re im" pairs for each matrix)."""
    lines = [
        _CHANNEL_FILE_MAGIC,
        f"cells {ch.num_cells}",
        f"elements {ch.num_elements}",
        f"users {ch.num_users}",
    ]
    for name, mat in (("h_ur", ch.h_ur), ("h_rv", ch.h_rv), ("h_uv", ch.h_uv)):
        lines.append(f"[{name}]")
        for row in mat:
            lines.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_channel_set(path) -> ChannelSet:
    """Read a channel set written by ``save_channel_set``."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != _CHANNEL_FILE_MAGIC:
        raise ValueError(f"{path}: not a channel-set file")
    dims = {}
    idx = 1
    for _ in range(3):
        key, val = lines[idx].split()
        dims[key] = int(val)
        idx += 1
    m, n, k = dims["cells"], dims["elements"], dims["users"]
    mats = {}
    for name, (rows, cols) in (("h_ur", (n, k)), ("h_rv", (m, n)), ("h_uv", (m, k))):
        if lines[idx] != f"[{name}]":
            raise ValueError(f"{path}: expected section [{name}] at line {idx + 1}")
        idx += 1
        mat = np.empty((rows, cols), dtype=complex)
        for r in range(rows):
            vals = [float(tok) for tok in lines[idx].split()]
            if len(vals) != 2 * cols:
                raise ValueError(f"{path}: row {r} of {name} has wrong width")
            mat[r] = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
            idx += 1
        mats[name] = mat
    return ChannelSet(**mats)
