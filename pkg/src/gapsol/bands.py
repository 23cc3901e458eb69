"""Dispersion relation, spectral gaps and band-edge data.

The symbol of the linear operator is the Hermitian matrix

    L(ik) = diag(v_j . k) - kappa,

and the bands lambda_1(k) <= ... <= lambda_N(k) are its eigenvalues, indexed
by sorted order at each k.  Band indices in the public API are 1-based.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceFailure,
    DegenerateEigenvalue,
    DimensionMismatch,
    NoGap,
    NonIsolatedExtremum,
)
from .model import CmeParameters

GRAD_TOL = 1e-9
SEPARATION_MIN = 1e-8


def symbol(params: CmeParameters, k) -> np.ndarray:
    """L(ik) for a single wavevector (shape (d,)) or a batch (shape (..., d))."""
    k = np.asarray(k, dtype=float)
    if k.shape[-1] != params.d:
        raise DimensionMismatch(f"wavevector must have {params.d} components")
    disp = k @ params.v.T  # (..., N)
    L = np.broadcast_to(-params.kappa, k.shape[:-1] + (params.N, params.N)).copy()
    idx = np.arange(params.N)
    L[..., idx, idx] += disp
    return L


def eigen_decomposition(H):
    """Eigenvalues (ascending) and orthonormal eigenvectors of Hermitian ``H``.

    Works on single matrices or stacks.  Backed by LAPACK ``heevd``.
    """
    H = np.asarray(H)
    try:
        w, U = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"Hermitian eigensolver did not converge: {exc}") from None
    return w, U


def band_values(params: CmeParameters, k) -> np.ndarray:
    """Sorted real eigenvalues of L(ik), shape (..., N)."""
    L = symbol(params, k)
    try:
        w = np.linalg.eigvalsh(L)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from None
    return w


def band_value(params: CmeParameters, j: int, k) -> float:
    return float(band_values(params, k)[j - 1])


@dataclass
class BandStructure:
    """Bands sampled on a tensor grid over the box [-K, K]^d.

    ``k_grid`` has shape (P, d) in row-major order, ``bands`` shape (P, N).
    """

    params: CmeParameters
    box: float
    n_per_axis: int
    k_grid: np.ndarray
    bands: np.ndarray

    @property
    def band_min(self) -> np.ndarray:
        return self.bands.min(axis=0)

    @property
    def band_max(self) -> np.ndarray:
        return self.bands.max(axis=0)

    @property
    def spacing(self) -> float:
        return 2.0 * self.box / (self.n_per_axis - 1)

    def grid_shape(self):
        return (self.n_per_axis,) * self.params.d


def default_box(params: CmeParameters) -> float:
    vmax = np.linalg.norm(params.v, axis=1).max(initial=0.0)
    kmax = np.abs(params.kappa).max(initial=0.0)
    return 8.0 * max(vmax, kmax, 1.0)


def default_points(d: int) -> int:
    return 4097 if d == 1 else 129


def sample_bands(params: CmeParameters, box: float | None = None, n_per_axis: int | None = None) -> BandStructure:
    """Evaluate all bands on the tensor grid of ``n_per_axis`` points per axis."""
    box = default_box(params) if box is None else float(box)
    n = default_points(params.d) if n_per_axis is None else int(n_per_axis)
    if n < 2 or box <= 0:
        raise ValueError("need n_per_axis >= 2 and box > 0")
    axis = np.linspace(-box, box, n)
    mesh = np.meshgrid(*([axis] * params.d), indexing="ij")
    k_grid = np.stack([m.ravel() for m in mesh], axis=-1)
    H = symbol(params, k_grid)
    w, _ = eigen_decomposition(H)
    return BandStructure(params, box, n, k_grid, w)


@dataclass(frozen=True)
class Gap:
    """Spectral gap (alpha, beta) between 1-based bands ``lower_band`` and ``lower_band + 1``.

    ``refined`` records whether the edges were polished by local optimisation
    beyond the sampling grid.
    """

    alpha: float
    beta: float
    lower_band: int
    refined: bool = False

    def __iter__(self):
        return iter((self.alpha, self.beta))

    @property
    def upper_band(self) -> int:
        return self.lower_band + 1

    def contains(self, omega: float) -> bool:
        return self.alpha < omega < self.beta


def find_gap(bands: BandStructure, refine: bool = True) -> Gap | None:
    """First gap between adjacent bands on the sampled box, or ``None``.

    Only the sampled box is inspected, so the result is a heuristic for the
    full wavevector space.
    """
    if bands.bands.size == 0:
        raise ValueError("empty band structure")
    bmax, bmin = bands.band_max, bands.band_min
    for j in range(bands.params.N - 1):
        if bmax[j] < bmin[j + 1]:
            alpha, beta = float(bmax[j]), float(bmin[j + 1])
            if refine:
                ka = bands.k_grid[np.argmax(bands.bands[:, j])]
                kb = bands.k_grid[np.argmin(bands.bands[:, j + 1])]
                alpha = max(alpha, _refine_extremum(bands.params, j + 1, ka, +1, bands.spacing)[1])
                beta = min(beta, _refine_extremum(bands.params, j + 2, kb, -1, bands.spacing)[1])
            if alpha >= beta:
                return None
            return Gap(alpha, beta, j + 1, refine)
    return None


def gradient(params, j, k, h=1e-5):
    k = np.asarray(k, dtype=float)
    g = np.empty(params.d)
    for i in range(params.d):
        e = np.zeros(params.d)
        e[i] = h
        g[i] = (band_value(params, j, k + e) - band_value(params, j, k - e)) / (2 * h)
    return g


def _refine_extremum(params, j, k_start, sign, step, max_sweeps=200):
    """Polish a maximum (sign=+1) or minimum (sign=-1) of band ``j``.

    Coordinate sweeps of three-point quadratic fits; the step shrinks with
    the size of the accepted moves.
    """
    k = np.array(k_start, dtype=float)
    f = lambda kk: sign * band_value(params, j, kk)
    h = step
    for _ in range(max_sweeps):
        if np.linalg.norm(gradient(params, j, k)) <= GRAD_TOL:
            break
        biggest = 0.0
        for i in range(params.d):
            e = np.zeros(params.d)
            e[i] = h
            fm, f0, fp = f(k - e), f(k), f(k + e)
            curv = fp - 2 * f0 + fm
            if curv < 0:
                delta = 0.5 * h * (fm - fp) / curv
                delta = float(np.clip(delta, -2 * h, 2 * h))
            else:
                delta = h if fp > fm else -h if fm > fp else 0.0
            if f(k + delta * np.eye(params.d)[i]) >= f0:
                k[i] += delta
                biggest = max(biggest, abs(delta))
        h = max(min(h, 4 * biggest), 1e-7) if biggest > 0 else max(h / 4, 1e-7)
    return k, band_value(params, j, k)


@dataclass(frozen=True)
class SpectralEdge:
    """Isolated extremum of band ``j0`` (1-based) attaining a gap edge."""

    j0: int
    k0: np.ndarray
    omega0: float
    eta: np.ndarray
    G0: np.ndarray
    gap: Gap
    side: str
    separation: float

    def to_dict(self) -> dict:
        return {
            "j0": self.j0,
            "k0": [float(x) for x in self.k0],
            "omega0": self.omega0,
            "eta_re": [float(x) for x in self.eta.real],
            "eta_im": [float(x) for x in self.eta.imag],
            "G0": self.G0.tolist(),
            "gap": [self.gap.alpha, self.gap.beta],
            "gap_lower_band": self.gap.lower_band,
            "gap_refined": self.gap.refined,
            "side": self.side,
            "separation": self.separation,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SpectralEdge":
        gap = Gap(doc["gap"][0], doc["gap"][1], doc["gap_lower_band"], doc.get("gap_refined", False))
        return cls(
            j0=int(doc["j0"]),
            k0=np.array(doc["k0"], dtype=float),
            omega0=float(doc["omega0"]),
            eta=np.array(doc["eta_re"]) + 1j * np.array(doc["eta_im"]),
            G0=np.array(doc["G0"], dtype=float),
            gap=gap,
            side=doc["side"],
            separation=float(doc["separation"]),
        )


def fix_phase(vec: np.ndarray) -> np.ndarray:
    """Unit-normalise and rotate so the first largest-magnitude entry is real positive."""
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    mag = np.abs(vec)
    p = int(np.flatnonzero(mag >= mag.max() * (1 - 1e-8))[0])
    return vec * (abs(vec[p]) / vec[p])


def hessian(params: CmeParameters, j0: int, k0) -> np.ndarray:
    """G0 = half the Hessian of band ``j0`` at ``k0``.

    Central differences at steps h and h/2 combined by one Richardson step.
    """
    k0 = np.asarray(k0, dtype=float)
    d = params.d
    h = max(1e-4, 1e-4 * np.linalg.norm(k0))

    def second_derivatives(h):
        H = np.empty((d, d))
        f0 = band_value(params, j0, k0)
        eye = np.eye(d) * h
        for i in range(d):
            H[i, i] = (band_value(params, j0, k0 + eye[i]) - 2 * f0 + band_value(params, j0, k0 - eye[i])) / h**2
            for m in range(i + 1, d):
                s = 0.0
                for si, sm in itertools.product((1, -1), repeat=2):
                    s += si * sm * band_value(params, j0, k0 + si * eye[i] + sm * eye[m])
                H[i, m] = H[m, i] = s / (4 * h**2)
        return H

    stencil = k0 + h * np.array(list(itertools.product((-1, 0, 1), repeat=d)))
    w = band_values(params, stencil)
    gaps = []
    if j0 > 1:
        gaps.append(w[:, j0 - 1] - w[:, j0 - 2])
    if j0 < params.N:
        gaps.append(w[:, j0] - w[:, j0 - 1])
    if gaps and np.min(gaps) < SEPARATION_MIN:
        raise DegenerateEigenvalue(f"band {j0} is not simple near k0={k0}")
    D = (4 * second_derivatives(h / 2) - second_derivatives(h)) / 3
    D = 0.5 * (D + D.T)
    return 0.5 * D


def locate_edge(params: CmeParameters, gap: Gap, side: str = "lower", bands: BandStructure | None = None) -> SpectralEdge:
    """Band-edge data for the lower (omega0 = alpha) or upper (omega0 = beta) gap edge."""
    if side not in ("lower", "upper"):
        raise ValueError("side must be 'lower' or 'upper'")
    if gap is None:
        raise NoGap("no spectral gap to locate an edge in")
    if bands is None:
        bands = sample_bands(params)
    if side == "lower":
        j0, sign = gap.lower_band, +1
    else:
        j0, sign = gap.upper_band, -1
    column = bands.bands[:, j0 - 1]
    p = int(np.argmax(column) if sign > 0 else np.argmin(column))
    k0, omega0 = _refine_extremum(params, j0, bands.k_grid[p], sign, bands.spacing)
    if sign * omega0 < sign * column[p]:
        k0, omega0 = bands.k_grid[p].copy(), float(column[p])

    grad = np.linalg.norm(gradient(params, j0, k0))
    if grad > 1e-8:
        warnings.warn(f"edge refinement stopped with |grad lambda| = {grad:.2e}", RuntimeWarning)

    w, U = eigen_decomposition(symbol(params, k0))
    others = np.delete(w, j0 - 1)
    separation = float(np.min(np.abs(others - omega0))) if others.size else np.inf
    if separation < SEPARATION_MIN:
        raise DegenerateEigenvalue(f"lambda_{j0}(k0) is not simple (separation {separation:.2e})")
    eta = fix_phase(U[:, j0 - 1])

    _check_isolated(bands, j0, k0, omega0)
    G0 = hessian(params, j0, k0)
    if side == "lower":
        gap = Gap(omega0, max(gap.beta, omega0), gap.lower_band, gap.refined)
    else:
        gap = Gap(min(gap.alpha, omega0), omega0, gap.lower_band, gap.refined)
    return SpectralEdge(j0, k0, float(omega0), eta, G0, gap, side, separation)


def _check_isolated(bands: BandStructure, j0: int, k0, omega0: float) -> None:
    h = bands.spacing
    dist = np.linalg.norm(bands.k_grid - k0, axis=1)
    ring = (dist >= 3 * h) & (dist <= 4 * h)
    if not ring.any():
        return
    thresh = 0.5 * np.min(np.abs(bands.bands[ring, j0 - 1] - omega0))
    if thresh <= 1e-12 * max(1.0, abs(omega0)):
        raise NonIsolatedExtremum(f"band {j0} stays at omega0 away from k0={k0}")
    outside = dist > 3 * h
    close = np.abs(bands.bands[outside] - omega0) < thresh
    if close.any():
        p, j = np.argwhere(close)[0]
        kp = bands.k_grid[outside][p]
        raise NonIsolatedExtremum(
            f"band {j + 1} comes within {thresh:.2e} of omega0 at k={kp}, away from k0={k0}"
        )
