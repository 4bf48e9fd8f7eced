"""Error metric, grid/step policy, parameter sweeps and CSV output."""
from __future__ import annotations

import csv
import logging
import math
import os
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import fft as sfft

from .dispersion import KGParams
from .models import (
    ModelKind,
    NumericalError,
    SolverConfig,
    Trajectory,
    run,
    snapshot_error,
)
from .pulses import DEFAULT_LENGTH, DEFAULT_X0, InitialData, PulseKind, PulseSpec, assemble_exact_ic
from .spectral import Field, PeriodicGrid, write_csv

log = logging.getLogger(__name__)

__all__ = [
    "bandwidth",
    "fit_step",
    "GridPolicy",
    "PointSetup",
    "setup_point",
    "error_metric",
    "SweepPlan",
    "SweepRecord",
    "NAMED_TESTS",
    "named_plan",
    "run_point",
    "run_sweep",
    "snapshot_compare",
    "CSV_HEADER",
    "format_record",
    "write_manifest",
    "read_manifest",
    "read_sweep_csv",
    "order_ratio",
]

CSV_HEADER = ("model", "epsilon", "beta", "error", "N", "dt", "runtime_s")
APPROX_MODELS = (ModelKind.FULL_DISPERSION, ModelKind.NLS, ModelKind.IMPROVED_NLS)


# ---------------------------------------------------------------------------
# Grid and step policy


def bandwidth(values: np.ndarray, grid: PeriodicGrid, tol: float = 1e-12) -> float:
    """Largest ``|xi|`` whose coefficient exceeds ``tol`` times the peak one."""
    c = np.abs(sfft.fft(values))
    if c.max() == 0:
        return 0.0
    return float(np.max(np.abs(grid.xi[c > tol * c.max()])))


@dataclass(frozen=True)
class GridPolicy:
    """How ``N`` and ``dt`` are chosen for one parameter point.

    Envelope grids resolve ``margin`` times the initial bandwidth; the exact
    grid also carries the fast wave ``kbar/eps``. Sizes are powers of two
    between ``n_min`` and ``n_max``. The envelope step is
    ``dt_bandwidth / bandwidth`` capped at ``dt_max``; the exact step is in
    addition capped at ``dt_per_eps * eps``. Both are shrunk to divide the
    snapshot interval ``1/(samples * eps)``.
    """

    length: float = DEFAULT_LENGTH
    tol: float = 1e-12
    margin: float = 2.0
    n_min: int = 2048
    n_max: int = 1 << 17
    dt_max: float = 0.01
    dt_bandwidth: float = 1.0
    dt_per_eps: float = 2.5
    samples: int = 100
    resolve_third_harmonic: bool = False

    def pow2(self, xi_needed: float) -> int:
        n = self.n_min
        while math.pi * n / self.length < xi_needed and n < self.n_max:
            n *= 2
        if math.pi * n / self.length < xi_needed:
            warnings.warn(f"grid capped at N={n}; wave number {xi_needed:g} is not resolved",
                          RuntimeWarning, stacklevel=2)
        return n

    def probe_bandwidth(self, pulse: PulseSpec) -> float:
        g = PeriodicGrid(self.length, 1 << 16)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            vals = pulse.build(g).values
        return bandwidth(vals, g, self.tol)

    def envelope_n(self, bw: float) -> int:
        return self.pow2(self.margin * bw)

    def exact_n(self, bw: float, eps: float, kbar: float = 1.0) -> int:
        fast = abs(kbar) / eps * (3 if self.resolve_third_harmonic else 1)
        return self.pow2(fast + self.margin * bw)

    def dt_envelope(self, bw: float) -> float:
        return min(self.dt_max, self.dt_bandwidth / max(bw, 1e-300))

    def dt_exact(self, bw: float, eps: float) -> float:
        return min(self.dt_envelope(bw), self.dt_per_eps * eps)


def fit_step(target: float, interval: float | None) -> float:
    """Largest step ``<= target`` that divides ``interval``."""
    if interval is None:
        return target
    return interval / math.ceil(interval / target - 1e-9)


@dataclass
class PointSetup:
    """Grids, steps and horizon for one ``(eps, pulse)`` point."""

    eps: float
    pulse: PulseSpec
    grid_envelope: PeriodicGrid
    grid_exact: PeriodicGrid
    dt_envelope: float
    dt_exact: float
    t_final: float
    interval: float | None
    carrier: KGParams = KGParams()
    projector: str = "carrier"

    def config(self, model: ModelKind) -> SolverConfig:
        if model is ModelKind.EXACT_KG:
            return SolverConfig(self.eps, self.dt_exact, self.t_final, self.grid_exact,
                                self.interval, self.carrier)
        return SolverConfig(self.eps, self.dt_envelope, self.t_final, self.grid_envelope,
                            self.interval, self.carrier, self.projector)

    def initial_data(self) -> InitialData:
        return InitialData(self.pulse.build(self.grid_envelope), self.carrier)

    def initial_state(self, model: ModelKind):
        data = self.initial_data()
        if model is ModelKind.EXACT_KG:
            return assemble_exact_ic(data.envelope, self.eps, self.carrier, self.grid_exact)
        return data.state_for(model)


def setup_point(eps: float, pulse: PulseSpec, policy: GridPolicy = GridPolicy(), *,
                t_final: float | None = None, n: int | None = None,
                n_exact: int | None = None, dt: float | None = None,
                dt_exact: float | None = None, projector: str = "carrier") -> PointSetup:
    """Apply ``policy`` at ``(eps, pulse)``; explicit values override it.

    ``t_final`` defaults to ``1/eps``. Snapshots are taken every
    ``1/(samples*eps)``, shortened if needed so they tile ``[0, t_final]``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    t_final = 1.0 / eps if t_final is None else float(t_final)
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    interval = None
    if t_final > 0:
        base = 1.0 / (policy.samples * eps)
        interval = t_final / max(1, math.ceil(t_final / base - 1e-9))
    bw = policy.probe_bandwidth(pulse)
    dt_env = fit_step(dt or policy.dt_envelope(bw), interval)
    dt_ex = fit_step(dt_exact or policy.dt_exact(bw, eps), interval)
    if t_final == 0:
        dt_env, dt_ex = dt or 1.0, dt_exact or 1.0
    return PointSetup(
        eps, pulse,
        PeriodicGrid(policy.length, n or policy.envelope_n(bw)),
        PeriodicGrid(policy.length, n_exact or policy.exact_n(bw, eps)),
        dt_env, dt_ex, t_final, interval, projector=projector,
    )


# ---------------------------------------------------------------------------
# Error metric


def error_metric(exact: Trajectory, approx: Trajectory,
                 sample_times: Sequence[float] | None = None) -> float:
    """``sup_t |f - f_approx|_inf / |f|_inf`` over the shared sample times.

    ``approx`` may be an envelope trajectory (modulated onto the carrier and
    interpolated to the exact grid) or another exact trajectory. Times where
    the exact field vanishes are skipped with a warning.
    """
    tol = 1e-9 * max(1.0, max(exact.times, default=1.0))
    times = exact.times if sample_times is None else sample_times
    worst = None
    for t in times:
        i = _index_of(exact.times, t, tol)
        j = _index_of(approx.times, t, tol)
        if i is None or j is None:
            raise ValueError(f"no snapshot at t={t} in both trajectories")
        f_ref = exact.f_physical(i)
        f_app = approx.f_physical(j, exact.config.grid if approx.model is not ModelKind.EXACT_KG else None)
        err = snapshot_error(f_ref, f_app)
        if not np.isfinite(err):
            warnings.warn(f"exact field vanishes at t={t:g}; sample skipped",
                          RuntimeWarning, stacklevel=2)
            continue
        worst = err if worst is None else max(worst, err)
    return float("nan") if worst is None else worst


def _index_of(times, t, tol):
    for i, s in enumerate(times):
        if abs(s - t) <= tol:
            return i
    return None


# ---------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SweepRecord:
    model: str
    epsilon: float
    beta: float
    error: float
    N: int
    dt: float
    runtime_s: float
    status: str = "ok"

    def row(self) -> list[str]:
        return [self.model, *(format_number(v) for v in
                              (self.epsilon, self.beta, self.error)),
                str(self.N), format_number(self.dt), format_number(self.runtime_s)]


def format_number(x: float) -> str:
    return f"{x:.12g}"


def format_record(rec: SweepRecord) -> str:
    return ",".join(rec.row())


@dataclass(frozen=True)
class SweepPlan:
    """Cartesian product of ``eps_values`` and ``beta_values``."""

    pulse: PulseKind = PulseKind.SHORT
    eps_values: tuple = (0.01,)
    beta_values: tuple = (1.0,)
    models: tuple = APPROX_MODELS
    x0: float = DEFAULT_X0
    policy: GridPolicy = GridPolicy()
    t_final: float | None = None
    projector: str = "carrier"
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "pulse", PulseKind(self.pulse))
        object.__setattr__(self, "models", tuple(
            ModelKind.parse(m) if isinstance(m, str) else ModelKind(m) for m in self.models))
        object.__setattr__(self, "eps_values", tuple(float(e) for e in self.eps_values))
        object.__setattr__(self, "beta_values", tuple(float(b) for b in self.beta_values))
        if not self.eps_values or not self.beta_values:
            raise ValueError("empty sweep")
        for e in self.eps_values:
            if not e > 0:
                raise ValueError(f"eps must be positive, got {e}")
            if not 1e-3 <= e <= 0.1:
                log.warning("eps=%g lies outside the tested window [0.001, 0.1]", e)
        for b in self.beta_values:
            if not 0 < b <= 1:
                raise ValueError(f"beta must lie in (0, 1], got {b}")
            if b < 0.01:
                log.warning("beta=%g lies outside the tested window [0.01, 1]", b)
        for m in self.models:
            if m is ModelKind.EXACT_KG:
                raise ValueError("the exact system is the reference, not a swept model")

    def points(self) -> list[tuple[float, float]]:
        return [(e, b) for e in self.eps_values for b in self.beta_values]


NAMED_TESTS = {
    "short-1": dict(pulse="short", eps_values=(0.002, 0.005, 0.01, 0.02), beta_values=(1.0,)),
    "short-2": dict(pulse="short", eps_values=(0.002, 0.005, 0.01, 0.02), beta_values=(0.1,)),
    "short-3": dict(pulse="short", eps_values=(0.01,),
                    beta_values=(0.02, 0.03, 0.05, 0.075, 0.1, 0.2, 0.5, 1.0)),
    "chirped-1": dict(pulse="chirped", eps_values=(0.002, 0.003, 0.005, 0.01, 0.02),
                      beta_values=(0.1,)),
    "chirped-2": dict(pulse="chirped", eps_values=(0.01,),
                      beta_values=(0.1, 0.2, 0.3, 0.4, 0.5, 1.0)),
}


def named_plan(name: str, **overrides) -> SweepPlan:
    try:
        base = dict(NAMED_TESTS[name])
    except KeyError:
        raise ValueError(f"unknown test {name!r}; known: {sorted(NAMED_TESTS)}") from None
    base.update({k: v for k, v in overrides.items() if v is not None})
    return SweepPlan(name=name, **base)


def run_point(plan: SweepPlan, eps: float, beta: float,
              setup: PointSetup | None = None) -> list[SweepRecord]:
    """One shared exact run, then every model of ``plan`` against it."""
    pulse = PulseSpec(plan.pulse, beta, plan.x0)
    if setup is None:
        setup = setup_point(eps, pulse, plan.policy, t_final=plan.t_final,
                            projector=plan.projector)
    exact = run(ModelKind.EXACT_KG, setup.initial_state(ModelKind.EXACT_KG),
                setup.config(ModelKind.EXACT_KG))
    log.info("exact eps=%g beta=%g N=%d dt=%g: %.1fs", eps, beta,
             setup.grid_exact.n, setup.dt_exact, exact.runtime)
    out = []
    for m in plan.models:
        cfg = setup.config(m)
        try:
            tr = run(m, setup.initial_state(m), cfg, reference=exact)
            err, status, rt = tr.error_sup, "ok", tr.runtime
        except NumericalError as exc:
            log.error("%s at eps=%g beta=%g: %s", m.value, eps, beta, exc)
            err, status, rt = float("nan"), f"failed at t={exc.t:g}", float("nan")
        out.append(SweepRecord(m.value, eps, beta, err, cfg.grid.n, cfg.dt, rt, status))
    return out


class _OrderedWriter:
    """Appends rows in plan order as points complete, flushing each line."""

    def __init__(self, path: Path | None, n_points: int):
        self.path = path
        self.pending: dict[int, list[SweepRecord]] = {}
        self.next = 0
        self.lock = threading.Lock()
        self.fh = None
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            fresh = not path.exists() or path.stat().st_size == 0
            self.fh = open(path, "a", newline="")
            self.writer = csv.writer(self.fh, lineterminator="\n")
            if fresh:
                self.writer.writerow(CSV_HEADER)
                self.fh.flush()

    def submit(self, index: int, records: list[SweepRecord]):
        with self.lock:
            self.pending[index] = records
            while self.next in self.pending:
                for rec in self.pending.pop(self.next):
                    if self.fh is not None:
                        self.writer.writerow(rec.row())
                self.next += 1
            if self.fh is not None:
                self.fh.flush()
                os.fsync(self.fh.fileno())

    def close(self):
        if self.fh is not None:
            self.fh.close()


def run_sweep(plan: SweepPlan, csv_path=None, threads: int = 1) -> list[SweepRecord]:
    """Run every point of ``plan``; rows are appended to ``csv_path`` as they finish.

    Points run on a pool of ``threads`` workers. A point whose exact run
    fails is recorded with ``nan`` errors and the sweep continues.
    """
    points = plan.points()
    writer = _OrderedWriter(Path(csv_path) if csv_path else None, len(points))
    results: dict[int, list[SweepRecord]] = {}

    def work(idx, eps, beta):
        try:
            recs = run_point(plan, eps, beta)
        except (NumericalError, ValueError) as exc:
            log.error("point eps=%g beta=%g failed: %s", eps, beta, exc)
            recs = [SweepRecord(m.value, eps, beta, float("nan"), 0, float("nan"),
                                float("nan"), f"failed: {exc}") for m in plan.models]
        results[idx] = recs
        writer.submit(idx, recs)

    try:
        if threads <= 1:
            for idx, (e, b) in enumerate(points):
                work(idx, e, b)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futs = [pool.submit(work, idx, e, b) for idx, (e, b) in enumerate(points)]
                for f in futs:
                    f.result()
    finally:
        writer.close()
    return [r for idx in range(len(points)) for r in results.get(idx, [])]


def read_sweep_csv(path) -> list[SweepRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"unexpected header {rows[0]}")
    return [SweepRecord(r[0], float(r[1]), float(r[2]), float(r[3]), int(r[4]),
                        float(r[5]), float(r[6])) for r in rows[1:]]


# ---------------------------------------------------------------------------
# Snapshots and manifests


def snapshot_compare(eps: float, beta: float, T: float, out_dir=None,
                     pulse: PulseKind | str = PulseKind.SHORT,
                     models: Iterable = APPROX_MODELS,
                     policy: GridPolicy = GridPolicy(), **overrides) -> dict[str, np.ndarray]:
    """Exact ``f`` at time ``T`` and ``f - f_approx`` for each model.

    With ``out_dir`` the fields are written as ``exact.csv`` and
    ``diff_<model>.csv`` on the exact grid.
    """
    spec = PulseSpec(pulse, beta)
    setup = setup_point(eps, spec, policy, t_final=T, **overrides)
    setup.interval = None
    exact = run(ModelKind.EXACT_KG, setup.initial_state(ModelKind.EXACT_KG),
                setup.config(ModelKind.EXACT_KG))
    f_exact = exact.f_physical(-1)
    out = {"exact": f_exact}
    for m in models:
        m = ModelKind.parse(m) if isinstance(m, str) else m
        tr = run(m, setup.initial_state(m), setup.config(m))
        out[m.value] = f_exact - tr.f_physical(-1, setup.grid_exact)
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        for name, vals in out.items():
            fname = "exact.csv" if name == "exact" else f"diff_{name}.csv"
            write_csv(Field(setup.grid_exact, vals.astype(complex)), d / fname)
        write_manifest(d / "manifest.txt", model="exact," + ",".join(
            k for k in out if k != "exact"), eps=eps, beta=beta, T=T,
            N=setup.grid_exact.n, N_envelope=setup.grid_envelope.n,
            dt=setup.dt_exact, dt_envelope=setup.dt_envelope,
            L=setup.grid_exact.length, pulse=spec.kind.value)
    return out


def write_manifest(path, **entries) -> None:
    """Plain ``key=value`` lines; the pipeline is deterministic, so ``seed=none``."""
    entries.setdefault("seed", "none")
    with open(path, "w") as fh:
        for k, v in entries.items():
            if isinstance(v, float):
                v = format_number(v)
            fh.write(f"{k}={v}\n")


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            k, _, v = line.partition("=")
            out[k.strip()] = v.strip()
    return out


# ---------------------------------------------------------------------------
# Self-convergence


def _final_difference(a: Trajectory, b: Trajectory) -> float:
    ua, ub = a.snapshots[-1], b.snapshots[-1]
    return float(np.max(np.abs(ua - ub)))


def order_ratio(model: ModelKind | str, setup: PointSetup, dt: float) -> tuple[float, float]:
    """``(e(dt)/e(dt/2), observed order)`` with ``e(h) = |u_h - u_{h/2}|_inf`` at ``t_final``.

    ``setup.t_final`` must be a multiple of ``dt/4``.
    """
    model = ModelKind.parse(model) if isinstance(model, str) else model
    runs = []
    for h in (dt, dt / 2, dt / 4):
        cfg = setup.config(model)
        cfg = SolverConfig(cfg.eps, h, cfg.t_final, cfg.grid, None, cfg.carrier,
                           cfg.projector, cfg.dealias)
        runs.append(run(model, setup.initial_state(model), cfg))
    e1 = _final_difference(runs[0], runs[1])
    e2 = _final_difference(runs[1], runs[2])
    ratio = e1 / e2
    return ratio, math.log2(ratio)
