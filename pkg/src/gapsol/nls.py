"""Effective NLS at a band edge and its radial ground state.

The envelope C of a bifurcating gap soliton solves

    omega1 C + div(G0 grad C) + Gamma |C|^2 C = 0.

For definite G0 and a focusing sign combination this is mapped onto the
canonical problem  Delta u - u + u^3 = 0  by C(x) = a u(|S x|), and the
radial ground state u is computed by shooting.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import warnings

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.special import kv

from .bands import SpectralEdge
from .errors import (
    AnisotropicIndefinite,
    BracketingFailure,
    NoRealGroundState,
    NonConvergentMoment,
    ToleranceNotMet,
)
from .model import CmeParameters, nonlinearity

IMAG_RTOL = 1e-10
PATCH_LEVEL = 1e-5


@dataclass(frozen=True)
class EffectiveNls:
    d: int
    omega1: float
    G0: np.ndarray
    Gamma: complex
    sign_flip_applied: bool = False

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "omega1": self.omega1,
            "G0": np.asarray(self.G0).tolist(),
            "Gamma_re": float(np.real(self.Gamma)),
            "Gamma_im": float(np.imag(self.Gamma)),
            "sign_flip_applied": self.sign_flip_applied,
        }


def effective_gamma(params: CmeParameters, eta) -> complex:
    """Projected cubic coefficient eta^* N(eta)."""
    eta = np.asarray(eta, dtype=complex)
    return complex(np.vdot(eta, nonlinearity(params, eta)))


def effective_coefficients(
    edge: SpectralEdge,
    params: CmeParameters,
    omega1: float = 1.0,
    flip_nonlinearity: bool = False,
) -> EffectiveNls:
    """Coefficients of the envelope equation at ``edge``.

    Only the magnitude of ``omega1`` is used; its sign is +1 at a lower gap
    edge and -1 at an upper one so that omega0 + eps^2 omega1 lies in the gap.
    ``flip_nonlinearity`` replaces Gamma by -Gamma and marks the result.
    """
    sign = 1.0 if edge.side == "lower" else -1.0
    gamma = effective_gamma(params, edge.eta)
    if flip_nonlinearity:
        gamma = -gamma
    return EffectiveNls(
        d=params.d,
        omega1=sign * abs(float(omega1)),
        G0=np.array(edge.G0, dtype=float),
        Gamma=gamma,
        sign_flip_applied=flip_nonlinearity,
    )


@dataclass(frozen=True)
class Scaling:
    """C(x) = a * u(|S x|).  ``b`` is the isotropic length factor when S = b*I."""

    a: float
    S: np.ndarray
    focusing: bool

    @property
    def b(self) -> float | None:
        """Isotropic length factor, or None when |S x| is not a multiple of |x|."""
        StS = self.S.T @ self.S
        c = np.trace(StS) / len(StS)
        if np.allclose(StS, c * np.eye(len(StS)), rtol=0, atol=1e-6 * abs(c)):
            return float(np.sqrt(c))
        return None


def definiteness(G0) -> int:
    """+1 / -1 for positive / negative definite G0, 0 otherwise."""
    w = np.linalg.eigvalsh(np.asarray(G0, dtype=float))
    if np.all(w > 0):
        return 1
    if np.all(w < 0):
        return -1
    return 0


def integral_identity_signs(nls: EffectiveNls) -> tuple[int, int, int]:
    """Signs of the three terms of  omega1|C|^2 - <grad C, G0 grad C> + Gamma|C|_4^4.

    Multiplying the envelope equation by a real decaying C and integrating
    shows these must sum to zero; if all three share one strict sign, no
    nontrivial real solution exists.
    """
    sigma = definiteness(nls.G0)
    return (
        int(np.sign(nls.omega1)),
        -sigma,
        int(np.sign(np.real(nls.Gamma))),
    )


def canonicalize(nls: EffectiveNls, strict: bool = True) -> Scaling:
    """Scaling that maps the envelope equation onto  Delta u - u + u^3 = 0.

    Raises NoRealGroundState when the sign combination admits no positive
    decaying solution (unless ``strict`` is False, in which case
    ``focusing`` is False and the factors are NaN).
    """
    sigma = definiteness(nls.G0)
    if sigma == 0:
        raise AnisotropicIndefinite("G0 is not definite")
    gamma = complex(nls.Gamma)
    if gamma == 0 or nls.omega1 == 0:
        raise NoRealGroundState("Gamma and omega1 must be nonzero")
    if abs(gamma.imag) > IMAG_RTOL * abs(gamma):
        raise NoRealGroundState(f"Gamma = {gamma} is not real")
    gamma = gamma.real

    signs = integral_identity_signs(nls)
    decaying = np.sign(nls.omega1) == -sigma
    focusing = decaying and np.sign(gamma) == -np.sign(nls.omega1)
    if not focusing:
        if strict:
            why = (
                "all terms of the integral identity have sign %+d" % signs[0]
                if len(set(signs)) == 1
                else "the linear part omega1 + div(G0 grad) does not produce decay"
                if not decaying
                else "sign(Gamma) must equal -sign(omega1)"
            )
            raise NoRealGroundState(
                f"no real decaying envelope for omega1={nls.omega1}, "
                f"G0 definiteness {sigma:+d}, Gamma={gamma}: {why}"
            )
        nan = np.full((nls.d, nls.d), np.nan)
        return Scaling(np.nan, nan, False)

    # G0 = sigma Q diag(lam) Q^T, lam > 0.  y = S x with S = beta diag(lam)^-1/2 Q^T
    # gives div(G0 grad) = sigma beta^2 Delta_y.
    w, Q = np.linalg.eigh(np.asarray(nls.G0, dtype=float))
    lam = np.abs(w)
    beta = np.sqrt(-nls.omega1 / sigma)
    S = beta * (Q / np.sqrt(lam)).T
    if np.allclose(lam, lam[0], rtol=1e-12, atol=0):
        S = beta / np.sqrt(lam[0]) * np.eye(nls.d)
    a = np.sqrt(-nls.omega1 / gamma)
    return Scaling(float(a), S, True)


# --- radial ground state ----------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """Canonical radial ground state sampled on [0, r_max]."""

    d: int
    r_samples: np.ndarray
    u_values: np.ndarray
    du_values: np.ndarray
    u0: float
    decay_rate: float
    r_patch: float
    tol: float

    def tail(self, r):
        """Decaying solution of the linearised equation, matched at r_max."""
        r = np.asarray(r, dtype=float)
        rm = self.r_samples[-1]
        return self.u_values[-1] * np.exp(-self.decay_rate * (r - rm)) * (rm / r) ** ((self.d - 1) / 2)

    def spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.r_samples, self.u_values, self.du_values)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inside = r <= self.r_samples[-1]
        out = np.empty_like(r)
        out[inside] = self.spline()(r[inside])
        out[~inside] = self.tail(r[~inside])
        return out


def _linear_tail(d, r):
    nu = d / 2 - 1
    return r ** (-nu) * kv(nu, r)


def _linear_tail_derivative(d, r):
    nu = d / 2 - 1
    return -r ** (-nu) * kv(nu + 1, r)


def _shoot(u0, d, r_max, rtol=1e-13, atol=1e-16):
    r0 = 1e-4
    c = (u0 - u0**3) / (2 * d)
    y0 = [u0 + c * r0**2, 2 * c * r0]

    def rhs(r, y):
        return [y[1], -(d - 1) / r * y[1] + y[0] - y[0] ** 3]

    def crossing(r, y):
        return y[0]

    def turning(r, y):
        return y[1]

    crossing.terminal = True
    crossing.direction = -1
    turning.terminal = True
    turning.direction = 1
    sol = solve_ivp(rhs, (r0, r_max), y0, method="DOP853", rtol=rtol, atol=atol,
                    events=(crossing, turning), dense_output=True)
    if sol.status == -1:
        raise ToleranceNotMet(f"radial integration failed: {sol.message}")
    if len(sol.t_events[0]):
        outcome = "overshoot"
    elif len(sol.t_events[1]) or u0 <= 1.0:
        outcome = "undershoot"
    else:
        outcome = "undecided"
    return outcome, sol


def solve_ground_state_radial(d: int, tol: float = 1e-10, r_max: float = 20.0,
                              n_samples: int = 4000, max_bisections: int = 200) -> RadialProfile:
    """Positive radial solution of  u'' + (d-1)/r u' - u + u^3 = 0,  u'(0) = 0.

    Bisection on u(0) between undershooting trajectories (u' turns positive)
    and overshooting ones (u crosses zero).  Once the bracket is exhausted the
    two bracketing trajectories are followed until they separate; beyond
    that radius the profile continues as the decaying linear solution
    r^{1-d/2} K_{d/2-1}(r).
    """
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    lo, hi = tol, 10.0
    if _shoot(lo, d, r_max)[0] != "undershoot" or _shoot(hi, d, r_max)[0] != "overshoot":
        raise BracketingFailure(f"no sign change of the shooting outcome on [{lo}, {hi}]")
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        outcome = _shoot(mid, d, r_max)[0]
        if outcome == "overshoot":
            hi = mid
        elif outcome == "undershoot":
            lo = mid
        else:
            lo = hi = mid
            break
    if hi - lo > tol * lo:
        raise ToleranceNotMet(f"bisection bracket [{lo}, {hi}] wider than tol")

    _, sol_lo = _shoot(lo, d, r_max)
    _, sol_hi = _shoot(hi, d, r_max)
    r_end = min(sol_lo.t[-1], sol_hi.t[-1])
    probe = np.linspace(1e-4, r_end, 20001)
    ulo = sol_lo.sol(probe)[0]
    uhi = sol_hi.sol(probe)[0]
    # patch once the cubic term is negligible, or earlier if the bracketing
    # trajectories have started to separate
    bad = np.flatnonzero(
        (np.abs(uhi - ulo) > 1e-6 * np.abs(ulo)) | (ulo <= PATCH_LEVEL * lo)
    )
    r_patch = probe[bad[0] - 1] if bad.size else r_end
    if r_patch < 5.0:
        raise ToleranceNotMet(f"shooting trajectories separate already at r={r_patch:.2f}")

    r = np.linspace(0.0, r_max, n_samples)
    u = np.empty_like(r)
    du = np.empty_like(r)
    inner = (r <= r_patch) & (r > 0)
    u[0], du[0] = lo, 0.0
    u[inner], du[inner] = sol_lo.sol(r[inner])
    u_patch = sol_lo.sol(r_patch)[0]
    outer = r > r_patch
    scale = u_patch / _linear_tail(d, r_patch)
    u[outer] = scale * _linear_tail(d, r[outer])
    du[outer] = scale * _linear_tail_derivative(d, r[outer])

    if not (u[-1] <= 1e-8 * u[0]):
        raise ToleranceNotMet(f"u(r_max)={u[-1]:.2e} has not decayed below 1e-8 u(0)")
    last = u <= 10 * u[-1]
    rr = r[last]
    rate = -np.polyfit(rr, np.log(u[last] * rr ** ((d - 1) / 2)), 1)[0]
    return RadialProfile(d, r, u, du, float(lo), float(rate), float(r_patch), tol)


def radial_residual(profile: RadialProfile) -> np.ndarray:
    """Residual of  (u')' + (d-1)/r u' - u + u^3  at interior samples.

    (u')' is taken by sixth-order central differences of the sampled u'.
    """
    r, u, du = profile.r_samples, profile.u_values, profile.du_values
    h = r[1] - r[0]
    c1 = np.array([-1, 9, -45, 0, 45, -9, 1]) / (60 * h)
    # u' is odd in r
    due = np.concatenate([-du[3:0:-1], du])
    d2u = np.convolve(due, c1[::-1], mode="valid")[1:]
    rr, uu, dd = r[1:-3], u[1:-3], du[1:-3]
    return d2u + (profile.d - 1) / rr * dd - uu + uu**3


# --- envelope ---------------------------------------------------------------

@dataclass(frozen=True)
class Envelope:
    """Physical envelope C(x) = a u(|S x|) built from a canonical profile."""

    profile: RadialProfile
    scaling: Scaling
    nls: EffectiveNls | None = None
    _spline: CubicHermiteSpline = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._spline is None:
            object.__setattr__(self, "_spline", self.profile.spline())

    @property
    def d(self) -> int:
        return self.profile.d

    @property
    def radius(self) -> float:
        """Largest physical radius covered by the samples."""
        smax = np.linalg.svd(self.scaling.S, compute_uv=False).min()
        return self.profile.r_samples[-1] / smax

    def canonical_radius(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.linalg.norm(points @ self.scaling.S.T, axis=-1)

    def __call__(self, points) -> np.ndarray:
        return evaluate_envelope(self, points)


def build_envelope(nls: EffectiveNls, profile: RadialProfile | None = None, tol: float = 1e-10) -> Envelope:
    scaling = canonicalize(nls)
    if profile is None:
        profile = solve_ground_state_radial(nls.d, tol)
    return Envelope(profile, scaling, nls)


def evaluate_envelope(envelope: Envelope, points) -> np.ndarray:
    """C at an array of points with trailing axis d.

    Cubic-spline interpolation inside the sampled range, the fitted
    exponential tail beyond.
    """
    rho = envelope.canonical_radius(points)
    rmax = envelope.profile.r_samples[-1]
    out = np.empty_like(rho)
    inside = rho <= rmax
    out[inside] = envelope._spline(rho[inside])
    out[~inside] = envelope.profile.tail(rho[~inside])
    return envelope.scaling.a * out


def envelope_residual(envelope: Envelope, n_directions: int = 8) -> float:
    """Sup residual of the envelope equation for C(x) = a u(|S x|).

    div(G0 grad C) is formed from the analytic Hessian of C, using G0 itself
    rather than the scaling, along ``n_directions`` rays and every radial
    sample; u'' comes from differencing the sampled u'.
    """
    nls = envelope.nls
    prof = envelope.profile
    sc = envelope.scaling
    d = envelope.d
    r, u, du = prof.r_samples[1:-3], prof.u_values[1:-3], prof.du_values[1:-3]
    h = prof.r_samples[1] - prof.r_samples[0]
    c1 = np.array([-1, 9, -45, 0, 45, -9, 1]) / (60 * h)
    due = np.concatenate([-prof.du_values[3:0:-1], prof.du_values])
    d2u = np.convolve(due, c1[::-1], mode="valid")[1:]
    K = sc.S @ np.asarray(nls.G0, dtype=float) @ sc.S.T
    rng = np.random.default_rng(0)
    dirs = rng.normal(size=(n_directions, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    worst = 0.0
    for yhat in dirs:
        radial = yhat @ K @ yhat
        lin = sc.a * (d2u * radial + du / r * (np.trace(K) - radial))
        C = sc.a * u
        res = nls.omega1 * C + lin + np.real(nls.Gamma) * C**3
        worst = max(worst, float(np.abs(res).max()))
    return worst


def decay_moments(envelope, s: int, d: int | None = None, half_width: float | None = None,
                  n: int | None = None, check: bool = True) -> float:
    """Estimate  int (1+|k|)^s |C^(k)| dk  for the transform (2 pi)^{-d/2} int C e^{-ikx} dx.

    ``envelope`` is an :class:`Envelope` or any callable on points of shape
    (..., d); for plain callables ``d`` and ``half_width`` are required.  The
    estimate is repeated at doubled resolution: a change above 10% raises
    NonConvergentMoment, above 1% emits a warning.
    """
    if s not in (0, 1, 2, 3, 4):
        raise ValueError("s must be in 0..4")
    if isinstance(envelope, Envelope):
        d = envelope.d
        if half_width is None:
            half_width = envelope.radius
        if n is None:
            # the transform of u decays like exp(-pi |k| / 2); resolve it to ~1e-17
            smax = np.linalg.svd(envelope.scaling.S, compute_uv=False).max()
            dx = np.pi / (25.0 * smax)
            n = int(2 * np.ceil(half_width / dx))
    if d is None or half_width is None:
        raise ValueError("d and half_width are required for plain callables")
    if n is None:
        n = 128

    def estimate(m):
        dx = 2 * half_width / m
        x = -half_width + dx * np.arange(m)
        pts = np.stack(np.meshgrid(*([x] * d), indexing="ij"), axis=-1)
        vals = np.asarray(envelope(pts), dtype=complex)
        Ch = np.abs(np.fft.fftn(vals)) * dx**d / (2 * np.pi) ** (d / 2)
        k = 2 * np.pi * np.fft.fftfreq(m, dx)
        kn = np.sqrt(sum(g**2 for g in np.meshgrid(*([k] * d), indexing="ij")))
        dk = 2 * np.pi / (m * dx)
        return float(np.sum((1 + kn) ** s * Ch) * dk**d)

    value = estimate(n)
    if check:
        fine = estimate(2 * n)
        ref = max(abs(fine), np.finfo(float).tiny)
        change = abs(fine - value) / ref if fine != value else 0.0
        if change > 0.1:
            raise NonConvergentMoment(f"moment s={s} changed by {change:.1%} under refinement")
        if change > 0.01:
            warnings.warn(f"moment s={s} changed by {change:.2%} under refinement", RuntimeWarning)
        value = fine
    return value
