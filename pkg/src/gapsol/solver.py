"""Periodic pseudospectral machinery and the Petviashvili solver.

Standing gap solitons solve  omega B - L(grad) B + N(B) = 0.  On a periodic
grid the linear part is diagonal in Fourier space, where it becomes the
N x N matrix  M(k) = L(ik) - omega I  at each lattice wavevector, and the
equation reads  M(k) B^(k) = N(B)^(k).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bands import SpectralEdge, symbol
from .errors import DimensionMismatch, Diverged, DomainTooSmall, NotInGap, ZeroDenominator
from .model import CmeParameters, nonlinearity
from .nls import Envelope, evaluate_envelope

STAB_TOL = 1e-10
NOT_IN_GAP_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on prod_i [-L_i, L_i) with n_i points per axis."""

    d: int
    L: tuple
    n: tuple

    def __post_init__(self):
        if len(self.L) != self.d or len(self.n) != self.d:
            raise DimensionMismatch("L and n need one entry per axis")
        for Li, ni in zip(self.L, self.n):
            if ni < 8 or ni % 2:
                raise ValueError(f"points per axis must be even and >= 8, got {ni}")
            if not Li > 0:
                raise ValueError("extent must be positive")

    @property
    def shape(self):
        return tuple(self.n)

    @property
    def dx(self):
        return tuple(2 * Li / ni for Li, ni in zip(self.L, self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    def axes(self):
        return [-Li + dxi * np.arange(ni) for Li, dxi, ni in zip(self.L, self.dx, self.n)]

    def wave_axes(self):
        return [2 * np.pi * np.fft.fftfreq(ni, dxi) for ni, dxi in zip(self.n, self.dx)]

    @cached_property
    def points(self) -> np.ndarray:
        """Physical coordinates, shape n + (d,)."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    @cached_property
    def wavevectors(self) -> np.ndarray:
        """Lattice wavevectors in FFT order, shape n + (d,)."""
        return np.stack(np.meshgrid(*self.wave_axes(), indexing="ij"), axis=-1)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for i, ni in enumerate(self.n):
            idx = [slice(None)] * self.d
            idx[i] = ni // 2
            mask[tuple(idx)] = True
        return mask

    @cached_property
    def two_thirds_mask(self) -> np.ndarray:
        """True on modes removed by the 2/3 dealiasing rule."""
        mask = np.zeros(self.shape, dtype=bool)
        for i, ni in enumerate(self.n):
            m = np.abs(np.fft.fftfreq(ni) * ni) > ni / 3
            shape = [1] * self.d
            shape[i] = ni
            mask |= m.reshape(shape)
        return mask


def make_grid(eps: float, box_mult: float = 3.0, n: int = 160, d: int = 2) -> Grid:
    """Grid on [-box_mult/eps, box_mult/eps)^d with n points per axis."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    L = box_mult / eps
    return Grid(d, (L,) * d, (n,) * d)


def transform(values: np.ndarray, d: int | None = None) -> np.ndarray:
    """Unitary DFT over the last ``d`` axes (all axes if ``d`` is None)."""
    axes = None if d is None else tuple(range(-d, 0))
    return np.fft.fftn(values, axes=axes, norm="ortho")


def inverse_transform(spectral: np.ndarray, d: int | None = None) -> np.ndarray:
    axes = None if d is None else tuple(range(-d, 0))
    return np.fft.ifftn(spectral, axes=axes, norm="ortho")


@dataclass
class ComplexField:
    """N complex components sampled on ``grid``; ``values`` has shape (N,) + grid.shape."""

    grid: Grid
    values: np.ndarray
    _spectral: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[1:] != self.grid.shape:
            raise DimensionMismatch(
                f"field shape {self.values.shape[1:]} does not match grid {self.grid.shape}"
            )

    @classmethod
    def from_spectral(cls, grid: Grid, spectral: np.ndarray) -> "ComplexField":
        spectral = np.asarray(spectral, dtype=complex)
        return cls(grid, inverse_transform(spectral, grid.d), spectral)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def spectral(self) -> np.ndarray:
        if self._spectral is None:
            self._spectral = transform(self.values, self.grid.d)
        return self._spectral

    def sup(self) -> float:
        return float(np.abs(self.values).max())

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))

    def scaled(self, c: complex) -> "ComplexField":
        spec = None if self._spectral is None else c * self._spectral
        return ComplexField(self.grid, c * self.values, spec)

    def rolled(self, shift, axis) -> "ComplexField":
        return ComplexField(self.grid, np.roll(self.values, shift, axis=axis + 1))


def build_ansatz(eps: float, edge: SpectralEdge, envelope: Envelope, grid: Grid,
                 decay_tol: float = 1e-6) -> ComplexField:
    """Sample  eps C(eps x) exp(i k0.x) eta  on ``grid``.

    Warns with DomainTooSmall if C has not decayed below ``decay_tol * C(0)``
    on the boundary of the box.
    """
    if grid.d != envelope.d or len(edge.eta) == 0:
        raise DimensionMismatch("grid, envelope and edge dimensions differ")
    x = grid.points
    C = evaluate_envelope(envelope, eps * x)
    c0 = evaluate_envelope(envelope, np.zeros((1, grid.d)))[0]
    boundary = np.zeros(grid.shape, dtype=bool)
    for i in range(grid.d):
        idx = [slice(None)] * grid.d
        idx[i] = 0
        boundary[tuple(idx)] = True
    edge_val = np.abs(C[boundary]).max()
    if edge_val > decay_tol * abs(c0):
        warnings.warn(
            f"envelope is {edge_val / abs(c0):.1e} of its peak at the box edge; "
            "the periodic extension aliases", DomainTooSmall, stacklevel=2,
        )
    phase = np.exp(1j * (x @ np.asarray(edge.k0, dtype=float)))
    values = eps * np.asarray(edge.eta)[(slice(None),) + (None,) * grid.d] * (C * phase)[None]
    return ComplexField(grid, values)


def lattice_symbol(params: CmeParameters, grid: Grid) -> np.ndarray:
    """L(ik) at every lattice wavevector, shape grid.shape + (N, N)."""
    return symbol(params, grid.wavevectors)


def _apply(mat: np.ndarray, spectral: np.ndarray) -> np.ndarray:
    """Per-wavevector matrix-vector product; ``mat`` (..., N, N), ``spectral`` (N, ...)."""
    vec = np.moveaxis(spectral, 0, -1)[..., None]
    return np.moveaxis((mat @ vec)[..., 0], -1, 0)


def _nonlinear_spectrum(params, field_values, grid, dealias):
    Nh = transform(nonlinearity(params, field_values), grid.d)
    Nh[:, grid.nyquist_mask] = 0.0
    if dealias:
        Nh[:, grid.two_thirds_mask] = 0.0
    return Nh


def residual_spectrum(field: ComplexField, omega: float, params: CmeParameters,
                      Lk: np.ndarray | None = None, dealias: bool = False) -> np.ndarray:
    if Lk is None:
        Lk = lattice_symbol(params, field.grid)
    Bh = field.spectral
    return omega * Bh - _apply(Lk, Bh) + _nonlinear_spectrum(params, field.values, field.grid, dealias)


def stationary_residual(field: ComplexField, omega: float, params: CmeParameters,
                        dealias: bool = False, Lk: np.ndarray | None = None) -> tuple[float, float]:
    """Sup and L2 norms of  omega B - L(grad) B + N(B).

    The nonlinear term is evaluated pseudospectrally with the Nyquist mode
    removed, i.e. the same discrete equation the solver works with.
    """
    Rh = residual_spectrum(field, omega, params, Lk, dealias)
    sup = float(np.abs(inverse_transform(Rh, field.grid.d)).max())
    l2 = float(np.sqrt(np.sum(np.abs(Rh) ** 2) * field.grid.cell_volume))
    return sup, l2


@dataclass
class SolveDiagnostics:
    iterations: int = 0
    S: float = np.nan
    stabilization_history: list = field(default_factory=list)
    residual_sup: list = field(default_factory=list)
    residual_l2: list = field(default_factory=list)
    converged: bool = False
    min_gap_distance: float = np.nan
    relax: float = 1.0
    tol: float = np.nan

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "S": self.S,
            "stabilization_history": list(map(float, self.stabilization_history)),
            "residual_sup": list(map(float, self.residual_sup)),
            "residual_l2": list(map(float, self.residual_l2)),
            "converged": self.converged,
            "min_gap_distance": self.min_gap_distance,
            "relax": self.relax,
            "tol": self.tol,
        }


def petviashvili_solve(initial: ComplexField, omega: float, params: CmeParameters,
                       tol: float = 1e-10, max_iter: int = 500, relax: float = 1.0,
                       dealias: bool = False) -> tuple[ComplexField, SolveDiagnostics]:
    """Refine ``initial`` into a solution of the stationary equation at ``omega``.

    Iterates  B^_{n+1} = S_n^{3/2} M^{-1} N(B_n)^  with
    S_n = Re<M B^_n, B^_n> / Re<N(B_n)^, B^_n>, optionally under-relaxed by
    ``relax``.  Stops once |S_n - 1| <= 1e-10 and the sup residual is at most
    ``tol`` times the sup norm of B.
    """
    grid = initial.grid
    if initial.N != params.N:
        raise DimensionMismatch("field and model have different numbers of modes")
    Lk = lattice_symbol(params, grid)
    lam = np.linalg.eigvalsh(Lk)
    dist = float(np.abs(lam - omega).min())
    if dist < NOT_IN_GAP_TOL:
        raise NotInGap(f"omega={omega} is within {dist:.2e} of the lattice spectrum")
    M = Lk - omega * np.eye(params.N)
    Minv = np.linalg.inv(M)

    diag = SolveDiagnostics(min_gap_distance=dist, relax=relax, tol=tol)
    Bh = initial.spectral.copy()
    values = initial.values
    res0 = None
    for it in range(1, max_iter + 1):
        Nh = _nonlinear_spectrum(params, values, grid, dealias)
        MB = _apply(M, Bh)
        num = np.real(np.vdot(Bh, MB))
        den = np.real(np.vdot(Bh, Nh))
        if den == 0 or abs(den) <= 1e-300 or not np.isfinite(den):
            raise ZeroDenominator("<N(B)^, B^> vanishes; the iterate carries no nonlinear mass")
        S = num / den
        if S <= 0:
            raise Diverged(f"stabilization factor became non-positive (S={S:.3e})",
                           ComplexField(grid, values, Bh), diag)
        # residual of the current iterate: omega B - L B + N(B) = -(M B - N)
        Rh = Nh - MB
        rsup = float(np.abs(inverse_transform(Rh, grid.d)).max())
        rl2 = float(np.sqrt(np.sum(np.abs(Rh) ** 2) * grid.cell_volume))
        diag.stabilization_history.append(float(S))
        diag.residual_sup.append(rsup)
        diag.residual_l2.append(rl2)
        diag.S = float(S)
        diag.iterations = it - 1
        bsup = float(np.abs(values).max())
        if abs(S - 1) <= STAB_TOL and rsup <= tol * bsup:
            diag.converged = True
            break
        if res0 is None:
            res0 = rsup
        elif rsup > 1e6 * res0 or not np.isfinite(rsup):
            raise Diverged(f"residual grew from {res0:.2e} to {rsup:.2e}",
                           ComplexField(grid, values, Bh), diag)
        new = S**1.5 * _apply(Minv, Nh)
        Bh = new if relax == 1.0 else (1 - relax) * Bh + relax * new
        values = inverse_transform(Bh, grid.d)
    else:
        diag.iterations = max_iter
        raise Diverged(f"no convergence within {max_iter} iterations "
                       f"(|S-1|={abs(diag.S - 1):.2e}, residual={diag.residual_sup[-1]:.2e})",
                       ComplexField(grid, values, Bh), diag)
    return ComplexField(grid, values, Bh), diag
