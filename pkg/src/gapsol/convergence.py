"""End-to-end pipeline and the asymptotic-error convergence study."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bands import SpectralEdge, find_gap, locate_edge, sample_bands
from .errors import GapsolError, InsufficientData, NoGap, PartialReport
from .model import CmeParameters
from .nls import EffectiveNls, Envelope, build_envelope, effective_coefficients
from .solver import ComplexField, SolveDiagnostics, build_ansatz, make_grid, petviashvili_solve

FULL_SWEEP = (0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625)
DEFAULT_SWEEP = (0.2, 0.1, 0.05, 0.025)


@dataclass
class Pipeline:
    """Everything needed to build ansatz fields and solve at any eps.

    ``solve_params`` is the model the stationary equation is solved for; it
    has its cubic coefficients negated when the flip was requested so that
    the solved equation matches the envelope equation.
    """

    params: CmeParameters
    edge: SpectralEdge
    nls: EffectiveNls
    envelope: Envelope
    solve_params: CmeParameters

    @property
    def flip(self) -> bool:
        return self.nls.sign_flip_applied

    def omega(self, eps: float) -> float:
        return self.edge.omega0 + eps**2 * self.nls.omega1


def prepare(params: CmeParameters, omega1: float = 1.0, flip_nonlinearity: bool = False,
            side: str = "lower", box: float | None = None, n_per_axis: int | None = None,
            tol: float = 1e-10) -> Pipeline:
    bands = sample_bands(params, box, n_per_axis)
    gap = find_gap(bands)
    if gap is None:
        raise NoGap(f"no spectral gap found on the box [-{bands.box}, {bands.box}]^{params.d}")
    edge = locate_edge(params, gap, side, bands)
    nls = effective_coefficients(edge, params, omega1, flip_nonlinearity)
    envelope = build_envelope(nls, tol=tol)
    solve_params = params.flipped_nonlinearity() if flip_nonlinearity else params
    return Pipeline(params, edge, nls, envelope, solve_params)


@dataclass
class SolveSettings:
    n: int = 160
    box_mult: float = 3.0
    tol: float = 1e-10
    max_iter: int = 500
    relax: float = 1.0
    dealias: bool = False


@dataclass
class RunRecord:
    eps: float
    omega: float
    E_sup: float
    residual_final: float
    iterations: int
    im_part_sup: float
    re_part_sup: float
    converged: bool
    S_final: float


@dataclass
class RunResult:
    record: RunRecord
    solution: ComplexField
    ansatz: ComplexField
    diagnostics: SolveDiagnostics


def solve_at(pipe: Pipeline, eps: float, settings: SolveSettings | None = None) -> RunResult:
    settings = settings or SolveSettings()
    grid = make_grid(eps, settings.box_mult, settings.n, pipe.params.d)
    app = build_ansatz(eps, pipe.edge, pipe.envelope, grid)
    omega = pipe.omega(eps)
    B, diag = petviashvili_solve(app, omega, pipe.solve_params, settings.tol,
                                 settings.max_iter, settings.relax, settings.dealias)
    diff = np.abs(B.values - app.values).max()
    rec = RunRecord(
        eps=float(eps),
        omega=float(omega),
        E_sup=float(diff),
        residual_final=float(diag.residual_sup[-1]),
        iterations=diag.iterations,
        im_part_sup=float(np.abs(B.values.imag).max()),
        re_part_sup=float(np.abs(B.values.real).max()),
        converged=diag.converged,
        S_final=float(diag.S),
    )
    return RunResult(rec, B, app, diag)


def fit_slope(points) -> tuple[float, float, float]:
    """Least-squares line through (log eps, log E); returns (p, log c, r^2)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise InsufficientData("need at least two (log eps, log E) points")
    x, y = pts[:, 0], pts[:, 1]
    p, logc = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (p * x + logc)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if len(pts) == 2:
        r2 = 1.0
    return float(p), float(logc), float(r2)


@dataclass
class ConvergenceReport:
    records: list
    slope: float | None
    log_c: float | None
    r_squared: float | None
    metadata: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict, repr=False)

    @property
    def slope_defined(self) -> bool:
        return self.slope is not None

    def ratios(self) -> list:
        """E(eps) / E(eps') for consecutive sweep entries."""
        E = [r.E_sup for r in self.records]
        return [E[i] / E[i + 1] for i in range(len(E) - 1)]

    def to_dict(self) -> dict:
        return {
            "records": [asdict(r) for r in self.records],
            "slope": self.slope,
            "log_c": self.log_c,
            "r_squared": self.r_squared,
            "slope_defined": self.slope_defined,
            "ratios": self.ratios(),
            "metadata": self.metadata,
            "failures": self.failures,
        }


def _worker(args):
    pipe, eps, settings = args
    return solve_at(pipe, eps, settings)


def run_convergence_study(params: CmeParameters, eps_list=DEFAULT_SWEEP, omega1: float = 1.0,
                          flip_nonlinearity: bool = False, settings: SolveSettings | None = None,
                          side: str = "lower", keep_fields=(), workers: int = 1,
                          pipeline: Pipeline | None = None) -> ConvergenceReport:
    """Solve at every eps, measure E(eps) = max |B - B_app| and fit log E against log eps.

    Raises PartialReport (carrying the successful part) if any eps fails.
    ``keep_fields`` lists eps values whose solution and ansatz are retained.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(e <= 0 for e in eps_list):
        raise ValueError("eps values must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must be strictly decreasing")
    settings = settings or SolveSettings()
    start = time.perf_counter()
    pipe = pipeline or prepare(params, omega1, flip_nonlinearity, side)
    jobs = [(pipe, e, settings) for e in eps_list]
    results = {}
    failures = {}
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(_worker, job) for job in jobs]
            for e, fut in zip(eps_list, futures):
                try:
                    results[e] = fut.result()
                except GapsolError as exc:
                    failures[e] = f"{type(exc).__name__}: {exc}"
    else:
        for job in jobs:
            try:
                results[job[1]] = _worker(job)
            except GapsolError as exc:
                failures[job[1]] = f"{type(exc).__name__}: {exc}"

    records = [results[e].record for e in eps_list if e in results]
    keep = {float(k) for k in keep_fields}
    fields = {e: results[e] for e in eps_list if e in results and e in keep}
    metadata = {
        "model_hash": params.fingerprint(),
        "sign_flip_applied": pipe.flip,
        "omega0": pipe.edge.omega0,
        "omega1": pipe.nls.omega1,
        "Gamma": [float(np.real(pipe.nls.Gamma)), float(np.imag(pipe.nls.Gamma))],
        "G0": pipe.edge.G0.tolist(),
        "j0": pipe.edge.j0,
        "k0": pipe.edge.k0.tolist(),
        "side": pipe.edge.side,
        "grid": {"n": settings.n, "box_mult": settings.box_mult},
        "solver": {"tol": settings.tol, "max_iter": settings.max_iter, "relax": settings.relax,
                   "dealias": settings.dealias},
        "eps_list": eps_list,
        "wall_time_s": time.perf_counter() - start,
    }
    report = ConvergenceReport(records, None, None, None, metadata, failures, fields)
    if failures:
        raise PartialReport(f"{len(failures)} of {len(eps_list)} runs failed", report)
    if len(records) >= 2:
        pts = [(math.log(r.eps), math.log(r.E_sup)) for r in records]
        report.slope, report.log_c, report.r_squared = fit_slope(pts)
    return report


# --- export -----------------------------------------------------------------

CSV_COLUMNS = ("eps", "E", "residual", "iterations", "im_sup")


def _g(x) -> str:
    return "%.17g" % x


def export(report: ConvergenceReport, directory, formats=("csv", "json", "dat"),
           field_eps=()) -> list:
    """Write convergence.csv / convergence.json / loglog.dat (and field slices) into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out / "convergence.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in report.records:
                w.writerow([_g(r.eps), _g(r.E_sup), _g(r.residual_final), r.iterations, _g(r.im_part_sup)])
        written.append(path)
    if "json" in formats:
        path = out / "convergence.json"
        path.write_text(json.dumps(report.to_dict(), indent=2))
        written.append(path)
    if "dat" in formats:
        path = out / "loglog.dat"
        lines = ["# log(eps) log(E) eps E"]
        for r in report.records:
            lines.append(f"{_g(math.log(r.eps))} {_g(math.log(r.E_sup))} {_g(r.eps)} {_g(r.E_sup)}")
        if report.slope_defined:
            lines.append(f"# fit: log(E) = {_g(report.slope)} * log(eps) + {_g(report.log_c)}"
                         f"  r^2 = {_g(report.r_squared)}")
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    for e in field_eps:
        res = report.fields.get(float(e))
        if res is None:
            raise KeyError(f"no retained fields for eps={e}")
        path = out / f"field_eps{e:g}.csv"
        write_field_slice(res.solution, res.ansatz, path, component=0)
        written.append(path)
    return written


def read_convergence_csv(path) -> list:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (int(v) if k == "iterations" else float(v)) for k, v in row.items()} for row in rows]


def write_field_slice(solution: ComplexField, ansatz: ComplexField, path, component: int = 0) -> None:
    """Re/Im of one component of B and B_app at every grid point (2-D grids: x, y columns)."""
    grid = solution.grid
    pts = grid.points.reshape(-1, grid.d)
    B = solution.values[component].ravel()
    A = ansatz.values[component].ravel()
    names = [f"x{i + 1}" for i in range(grid.d)]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["re_B", "im_B", "re_Bapp", "im_Bapp"])
        for p, b, a in zip(pts, B, A):
            w.writerow([_g(x) for x in p] + [_g(b.real), _g(b.imag), _g(a.real), _g(a.imag)])


def write_field(field: ComplexField, path, metadata: dict | None = None) -> None:
    """Dump all components: '#'-prefixed JSON header line, then one row per grid point."""
    grid = field.grid
    header = {"d": grid.d, "L": list(grid.L), "n": list(grid.n), "N": field.N,
              "order": "row-major", **(metadata or {})}
    pts = grid.points.reshape(-1, grid.d)
    vals = field.values.reshape(field.N, -1)
    cols = [f"x{i + 1}" for i in range(grid.d)]
    for j in range(field.N):
        cols += [f"re_B{j + 1}", f"im_B{j + 1}"]
    with Path(path).open("w", newline="") as fh:
        fh.write("# " + json.dumps(header) + "\n")
        w = csv.writer(fh)
        w.writerow(cols)
        for p, v in zip(pts, vals.T):
            row = [_g(x) for x in p]
            for c in v:
                row += [_g(c.real), _g(c.imag)]
            w.writerow(row)


def read_field(path) -> ComplexField:
    from .solver import Grid

    with Path(path).open() as fh:
        header = json.loads(fh.readline()[2:])
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    grid = Grid(header["d"], tuple(header["L"]), tuple(header["n"]))
    d, N = header["d"], header["N"]
    comps = data[:, d::2] + 1j * data[:, d + 1::2]
    return ComplexField(grid, comps.T.reshape((N,) + grid.shape))
