"""Coupled-mode system data, the cubic nonlinearity and config file I/O.

A system of N envelopes in d dimensions is described by

    i (dA_j/dt + v_j . grad A_j) + sum_r kappa_jr A_r + N_j(A) = 0,
    N_j(A) = sum_{m,n,o} gamma_j^{(m,n,o)} A_m conj(A_n) A_o,

with kappa Hermitian.  The cubic coefficients are stored sparsely as
``(j, m, n, o, value)`` tuples with 0-based indices; config files use
1-based indices.
"""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import DimensionMismatch, IndexOutOfRange, NonHermitianCoupling, ParseError

HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class CmeParameters:
    """Validated, immutable description of a coupled-mode system.

    Attributes
    ----------
    d, N : int
        Spatial dimension and number of modes.
    v : ndarray, shape (N, d)
        Group velocities.
    kappa : ndarray, shape (N, N), complex
        Hermitian coupling matrix.
    gamma : tuple of (j, m, n, o, complex)
        Nonzero cubic coefficients, 0-based indices, each slot at most once.
    """

    d: int
    N: int
    v: np.ndarray
    kappa: np.ndarray
    gamma: tuple = field(default=())

    def __post_init__(self):
        try:
            v = np.array(self.v, dtype=float)
            kappa = np.array(self.kappa, dtype=complex)
        except ValueError as exc:
            raise DimensionMismatch(f"ragged velocity or coupling data: {exc}") from None
        if v.ndim == 1 and self.d == 1:
            v = v.reshape(-1, 1)
        gamma = tuple(
            (int(j), int(m), int(n), int(o), complex(val)) for j, m, n, o, val in self.gamma
        )
        v.flags.writeable = False
        kappa.flags.writeable = False
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "gamma", gamma)
        validate(self)

    def __eq__(self, other):
        if not isinstance(other, CmeParameters):
            return NotImplemented
        return (
            self.d == other.d
            and self.N == other.N
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.kappa, other.kappa)
            and self.gamma == other.gamma
        )

    __hash__ = None

    def gamma_dense(self) -> np.ndarray:
        """Dense (N, N, N, N) coefficient tensor indexed [j, m, n, o]."""
        g = np.zeros((self.N,) * 4, dtype=complex)
        for j, m, n, o, val in self.gamma:
            g[j, m, n, o] += val
        return g

    def scaled_nonlinearity(self, factor: complex) -> "CmeParameters":
        return CmeParameters(
            self.d, self.N, self.v, self.kappa,
            tuple((j, m, n, o, factor * val) for j, m, n, o, val in self.gamma),
        )

    def flipped_nonlinearity(self) -> "CmeParameters":
        """Same system with every cubic coefficient negated (Gamma -> -Gamma)."""
        return self.scaled_nonlinearity(-1.0)

    def shifted_coupling(self, c: float) -> "CmeParameters":
        """Replace kappa by kappa + c*I."""
        return CmeParameters(self.d, self.N, self.v, self.kappa + c * np.eye(self.N), self.gamma)

    def fingerprint(self) -> str:
        return hashlib.sha256(dumps_config(self).encode()).hexdigest()[:16]


def validate(raw: CmeParameters) -> CmeParameters:
    """Check the standing assumptions; returns ``raw`` unchanged if they hold."""
    if raw.d < 1 or raw.N < 1:
        raise DimensionMismatch(f"d and N must be positive, got d={raw.d}, N={raw.N}")
    if raw.v.shape != (raw.N, raw.d):
        raise DimensionMismatch(
            f"velocities must have shape (N, d)=({raw.N}, {raw.d}), got {raw.v.shape}"
        )
    if raw.kappa.shape != (raw.N, raw.N):
        raise DimensionMismatch(f"kappa must be {raw.N}x{raw.N}, got {raw.kappa.shape}")
    if not (np.all(np.isfinite(raw.v)) and np.all(np.isfinite(raw.kappa))):
        raise ValueError("velocities and kappa must be finite")
    scale = np.abs(raw.kappa).max(initial=0.0)
    asym = np.abs(raw.kappa - raw.kappa.conj().T).max(initial=0.0)
    if asym > HERMITIAN_RTOL * scale:
        raise NonHermitianCoupling(
            f"kappa is not Hermitian: max|kappa_jr - conj(kappa_rj)| = {asym:.3e}"
        )
    seen = set()
    for entry in raw.gamma:
        idx = entry[:4]
        if any(i < 0 or i >= raw.N for i in idx):
            shown = tuple(i + 1 for i in idx)
            raise IndexOutOfRange(f"gamma index {shown} outside 1..{raw.N}")
        if idx in seen:
            raise ValueError(f"duplicate gamma slot {tuple(i + 1 for i in idx)}")
        seen.add(idx)
    return raw


def nonlinearity(params: CmeParameters, A) -> np.ndarray:
    """Evaluate N(A) for a vector of N amplitudes.

    ``A`` may carry trailing axes (a sampled field of shape ``(N, ...)``);
    the cubic term is applied pointwise.
    """
    A = np.asarray(A, dtype=complex)
    if A.shape[0] != params.N:
        raise DimensionMismatch(f"expected {params.N} components, got {A.shape[0]}")
    Ac = A.conj()
    out = np.zeros_like(A)
    for j, m, n, o, val in params.gamma:
        out[j] += val * (A[m] * Ac[n] * A[o])
    return out


def build_symmetric_example(v, w, a1, a2, a3) -> CmeParameters:
    """Four-mode, two-dimensional system with paired velocities.

    v_1 = -v_2 = v, v_3 = -v_4 = w; kappa_12 = kappa_34 = a1,
    kappa_14 = kappa_32 = a2, kappa_13 = kappa_42 = a3, zero diagonal and
    Hermitian completion.  The cubic coefficients are 1 on the slots
    (j,j,j), (j,i,i), (i,i,j) and on eight cross-coupling slots.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != (2,) or w.shape != (2,):
        raise DimensionMismatch("v and w must be two-dimensional vectors")
    kappa = np.zeros((4, 4), dtype=complex)
    for (j, r), a in (
        ((0, 1), a1), ((2, 3), a1),
        ((0, 3), a2), ((2, 1), a2),
        ((0, 2), a3), ((3, 1), a3),
    ):
        kappa[j, r] = a
        kappa[r, j] = np.conj(a)
    vel = np.array([v, -v, w, -w])
    return CmeParameters(2, 4, vel, kappa, symmetric_gamma())


def symmetric_gamma() -> tuple:
    """Unit cubic coefficients of the four-mode example (0-based)."""
    slots = set()
    for j, i in itertools.product(range(4), repeat=2):
        slots.add((j, j, j, j))
        slots.add((j, j, i, i))
        slots.add((j, i, i, j))
    # 1-based: g1(3,2,4) g1(4,2,3) g2(3,1,4) g2(4,1,3) g3(1,4,2) g3(2,4,1) g4(1,3,2) g4(2,3,1)
    cross = [
        (1, 3, 2, 4), (1, 4, 2, 3), (2, 3, 1, 4), (2, 4, 1, 3),
        (3, 1, 4, 2), (3, 2, 4, 1), (4, 1, 3, 2), (4, 2, 3, 1),
    ]
    slots.update(tuple(i - 1 for i in c) for c in cross)
    return tuple((*s, 1.0 + 0j) for s in sorted(slots))


# --- config files -----------------------------------------------------------

def _fmt(x: float) -> str:
    s = "%.17g" % x
    if s in ("nan", "inf", "-inf"):
        return s
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _fmt_row(row) -> str:
    return "[" + ", ".join(_fmt(x) for x in row) + "]"


def dumps_config(params: CmeParameters) -> str:
    lines = [
        "[model]",
        f"d = {params.d}",
        f"N = {params.N}",
        "",
        "[velocities]",
        "v = [",
        *(f"  {_fmt_row(row)}," for row in params.v),
        "]",
        "",
        "[kappa]",
        "re = [",
        *(f"  {_fmt_row(row)}," for row in params.kappa.real),
        "]",
        "im = [",
        *(f"  {_fmt_row(row)}," for row in params.kappa.imag),
        "]",
        "",
        "[gamma]",
        "# j, m, n, o (1-based), re, im",
        "entries = [",
    ]
    for j, m, n, o, val in params.gamma:
        lines.append(
            f"  [{j + 1}, {m + 1}, {n + 1}, {o + 1}, {_fmt(val.real)}, {_fmt(val.imag)}],"
        )
    lines += ["]", ""]
    return "\n".join(lines)


def save_config(params: CmeParameters, path) -> None:
    Path(path).write_text(dumps_config(params))


def _require(table, key, where):
    if not isinstance(table, dict) or key not in table:
        raise ParseError(f"missing field '{key}' in {where}")
    return table[key]


def _matrix(raw, where):
    try:
        return np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field '{where}' is not a numeric matrix: {exc}") from None


def loads_config(text: str, source: str = "<string>") -> CmeParameters:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{source}: {exc}") from None
    model = _require(doc, "model", source)
    d = _require(model, "d", "[model]")
    N = _require(model, "N", "[model]")
    if not isinstance(d, int) or not isinstance(N, int):
        raise ParseError("fields 'model.d' and 'model.N' must be integers")
    v = _matrix(_require(_require(doc, "velocities", source), "v", "[velocities]"), "velocities.v")
    kap = _require(doc, "kappa", source)
    re = _matrix(_require(kap, "re", "[kappa]"), "kappa.re")
    im = _matrix(kap.get("im", np.zeros_like(re).tolist()), "kappa.im")
    if re.shape != im.shape:
        raise ParseError(f"kappa.re has shape {re.shape} but kappa.im has shape {im.shape}")
    entries = doc.get("gamma", {}).get("entries", [])
    gamma = []
    for i, e in enumerate(entries):
        if len(e) not in (5, 6):
            raise ParseError(f"gamma.entries[{i}] must be [j, m, n, o, re, im], got {e!r}")
        if not all(isinstance(k, int) for k in e[:4]):
            raise ParseError(f"gamma.entries[{i}] indices must be integers, got {e[:4]!r}")
        im_part = float(e[5]) if len(e) == 6 else 0.0
        gamma.append((e[0] - 1, e[1] - 1, e[2] - 1, e[3] - 1, complex(float(e[4]), im_part)))
    if v.ndim != 2:
        raise ParseError(f"field 'velocities.v' must be a list of {N} vectors")
    return CmeParameters(d, N, v, re + 1j * im, tuple(gamma))


def load_config(path) -> CmeParameters:
    path = Path(path)
    return loads_config(path.read_text(), source=str(path))
