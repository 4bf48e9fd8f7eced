"""Command line entry point: ``simulate``, ``sweep``, ``symbols``, ``validate``.

Exit status: 0 on success, 1 on usage errors, 2 on numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .dispersion import (
    MAXWELL_MULTIPLICITY,
    SymbolKind,
    SymbolModel,
    carrier_expand,
    c_improved,
    c_schrod,
    eigen_oracle,
    kg_omega1,
    maxwell_omegas,
    m_exact,
    m_pade,
    m_taylor2,
    pade_coefficients,
    pade_coefficients_exact,
    symbol_mp,
)
from .experiments import (
    CSV_HEADER,
    NAMED_TESTS,
    SweepPlan,
    format_number,
    named_plan,
    order_ratio,
    run_sweep,
    setup_point,
    write_manifest,
)
from .models import ModelKind, NumericalError, run
from .pulses import PulseSpec
from .spectral import Field, write_binary, write_csv

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

log = logging.getLogger("shortpulse")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# keys accepted in --config files, with their converters
_CONFIG_KEYS = {
    "model": str, "pulse": str, "eps": str, "beta": str, "N": int, "dt": float,
    "T": float, "out": str, "threads": int, "x0": float, "test": str,
    "models": str, "projector": str, "N_exact": int, "dt_exact": float,
}


def load_config(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().lstrip("-").replace("-", "_")
        if not sep or key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown or malformed entry {raw!r}")
        try:
            out[key] = _CONFIG_KEYS[key](val.strip())
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {val.strip()!r}") from None
    return out


def _merge(args, defaults: dict):
    cfg = load_config(args.config) if args.config else {}
    for key, default in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, cfg.get(key, default))
    return args


def _floats(text, what) -> tuple:
    try:
        vals = tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise UsageError(f"bad {what} list {text!r}") from None
    if not vals:
        raise UsageError(f"empty {what} list")
    return vals


def _one_float(text, what) -> float:
    vals = _floats(text, what)
    if len(vals) != 1:
        raise UsageError(f"{what} takes a single value here")
    return vals[0]


def _add_common(p):
    p.add_argument("--config", metavar="FILE", help="key=value defaults; flags override")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--threads", type=int, help="worker threads")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shortpulse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one model at one parameter point")
    _add_common(p)
    p.add_argument("--model", help="exact|envelope|fd|nls|improved (default fd)")
    p.add_argument("--pulse", help="short|chirped (default short)")
    p.add_argument("--eps")
    p.add_argument("--beta")
    p.add_argument("--x0", type=float)
    p.add_argument("--N", type=int, help="grid size of the simulated model")
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float, help="final time (default 1/eps)")
    p.add_argument("--projector", help="carrier|local")
    p.add_argument("--reference", action="store_true",
                   help="also run the exact system and report the error")

    p = sub.add_parser("sweep", help="run a named test or a custom plan")
    _add_common(p)
    p.add_argument("--test", help=", ".join(sorted(NAMED_TESTS)))
    p.add_argument("--models", help="comma separated subset of fd,nls,improved,envelope")
    p.add_argument("--pulse")
    p.add_argument("--eps", help="comma separated values")
    p.add_argument("--beta", help="comma separated values")
    p.add_argument("--x0", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--projector")
    p.add_argument("--N", type=int, help=argparse.SUPPRESS)
    p.add_argument("--dt", type=float, help=argparse.SUPPRESS)

    p = sub.add_parser("symbols", help="tabulate dispersion symbols as CSV")
    _add_common(p)
    p.add_argument("--eps")
    p.add_argument("--xi-min", type=float, default=-50.0)
    p.add_argument("--xi-max", type=float, default=50.0)
    p.add_argument("--samples", type=int, default=2001)

    p = sub.add_parser("validate", help="run the invariant suite")
    _add_common(p)
    p.add_argument("--quick", action="store_true", help="skip the slower checks")
    return parser


# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    _merge(args, dict(model="fd", pulse="short", eps="0.01", beta="1.0", x0=15.0,
                      N=None, dt=None, T=None, out=None, threads=1, projector="carrier"))
    model = _parse_model(args.model)
    eps, beta = _one_float(args.eps, "eps"), _one_float(args.beta, "beta")
    pulse = _pulse(args.pulse, beta, args.x0)
    is_exact = model is ModelKind.EXACT_KG
    setup = setup_point(
        eps, pulse, t_final=args.T, projector=_projector(args.projector),
        n=None if is_exact else args.N, n_exact=args.N if is_exact else None,
        dt=None if is_exact else args.dt, dt_exact=args.dt if is_exact else None,
    )
    reference = None
    if args.reference and not is_exact:
        reference = run(ModelKind.EXACT_KG, setup.initial_state(ModelKind.EXACT_KG),
                        setup.config(ModelKind.EXACT_KG))
    cfg = setup.config(model)
    traj = run(model, setup.initial_state(model), cfg, reference=reference)
    print(f"model={model.value} eps={format_number(eps)} beta={format_number(beta)} "
          f"N={cfg.grid.n} dt={format_number(cfg.dt)} T={format_number(cfg.t_final)} "
          f"steps={cfg.n_steps} runtime_s={traj.runtime:.3f}")
    if reference is not None:
        print(f"error={format_number(traj.error_sup)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        final = traj.snapshots[-1]
        comps = [final] if final.ndim == 1 else list(final)
        names = ["f", "g"] if len(comps) == 2 else ["f"]
        for name, vals in zip(names, comps):
            fld = Field(cfg.grid, np.asarray(vals, dtype=complex))
            write_csv(fld, out / f"{name}_final.csv")
            write_binary(fld, out / f"{name}_final.bin")
        extra = {"error": traj.error_sup} if reference is not None else {}
        write_manifest(out / "manifest.txt", model=model.value, eps=eps, beta=beta,
                       pulse=pulse.kind.value, N=cfg.grid.n, dt=cfg.dt, T=cfg.t_final,
                       L=cfg.grid.length, projector=cfg.projector,
                       backend=kernels.BACKEND, **extra)
    return EXIT_OK


def cmd_sweep(args) -> int:
    _merge(args, dict(test=None, models=None, pulse=None, eps=None, beta=None, x0=None,
                      T=None, out=None, threads=1, projector=None, N=None, dt=None))
    models = None
    if args.models:
        models = tuple(_parse_model(m) for m in args.models.split(","))
    common = dict(models=models, x0=args.x0, t_final=args.T,
                  projector=_projector(args.projector) if args.projector else None)
    try:
        if args.test:
            over = dict(common)
            if args.eps:
                over["eps_values"] = _floats(args.eps, "eps")
            if args.beta:
                over["beta_values"] = _floats(args.beta, "beta")
            if args.pulse:
                raise UsageError("--pulse conflicts with --test")
            plan = named_plan(args.test, **over)
        else:
            if not (args.eps and args.beta):
                raise UsageError("a custom sweep needs --eps and --beta (or use --test)")
            plan = SweepPlan(pulse=args.pulse or "short", eps_values=_floats(args.eps, "eps"),
                             beta_values=_floats(args.beta, "beta"),
                             **{k: v for k, v in common.items() if v is not None})
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out or ".")
    csv_path = out / f"sweep_{plan.name}.csv"
    records = run_sweep(plan, csv_path, threads=max(1, args.threads))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    print(f"wrote {csv_path}", file=sys.stderr)
    failed = [r for r in records if r.status != "ok"]
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_symbols(args) -> int:
    _merge(args, dict(eps="0.01", out=None, threads=1))
    eps = _one_float(args.eps, "eps")
    if not eps > 0:
        raise UsageError("eps must be positive")
    if args.samples < 2 or not args.xi_max > args.xi_min:
        raise UsageError("need --samples >= 2 and --xi-max > --xi-min")
    cp = carrier_expand(1.0, 1.0)
    pade = pade_coefficients(1.0, 1.0)
    xi = np.linspace(args.xi_min, args.xi_max, args.samples)
    with np.errstate(divide="ignore", invalid="ignore"):
        cs = c_schrod(xi, eps, cp)
        ci = c_improved(xi, eps, cp, pade)
        ratio = np.where(cs != 0, np.abs(ci / cs), np.nan)
    cols = [xi, m_exact(xi, eps, cp), m_taylor2(xi, eps, cp), m_pade(xi, eps, cp, pade),
            cs, ci, ratio]
    header = ["xi", "m_exact", "m_taylor2", "m_pade", "c_schrod", "c_improved", "ratio"]
    fh = sys.stdout
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        fh = open(Path(args.out) / "symbols.csv", "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([format_number(v) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate


def _slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def validation_checks(quick: bool = False):
    """Yield ``(name, passed, detail)`` for the invariant suite."""
    rng = np.random.default_rng(0)

    k = rng.uniform(-10, 10, 50)
    err = max(abs(eigen_oracle([kk], "kg")[0] - kg_omega1(kk)) for kk in k)
    yield "kg branch vs eigensolver", err < 1e-10, f"{err:.1e}"
    kv = rng.uniform(-5, 5, (10, 3))
    err = max(np.max(np.abs(eigen_oracle(kk, "maxwell") - np.repeat(
        maxwell_omegas(np.linalg.norm(kk)), MAXWELL_MULTIPLICITY))) for kk in kv)
    yield "maxwell branches vs eigensolver", err < 1e-10, f"{err:.1e}"

    b, B, C2 = pade_coefficients_exact(1, 1)
    ok = (b, B, C2) == (1, Fraction(5, 16), Fraction(49, 512))
    yield "pade coefficients (1, 5/16, 7/(16 sqrt 2))", ok, f"b={b} B={B} C^2={C2}"

    eps = 0.01
    cp, pade = carrier_expand(), pade_coefficients()
    xi = np.geomspace(0.05, 0.5, 12)
    s2 = _slope(xi, np.abs(m_taylor2(xi, eps, cp) - m_exact(xi, eps, cp)))
    yield "taylor2 symbol error slope 3", abs(s2 - 3) < 0.2, f"{s2:.3f}"
    exact_model = SymbolModel(SymbolKind.EXACT, cp)
    pade_model = SymbolModel(SymbolKind.PADE32, cp, pade)
    diff = [float(abs(symbol_mp(pade_model, x, eps) - symbol_mp(exact_model, x, eps)))
            for x in xi]
    s5 = _slope(xi, np.array(diff))
    yield "pade symbol error slope 6", abs(s5 - 6) < 0.3, f"{s5:.3f}"

    setup = setup_point(0.1, PulseSpec("short", 1.0), t_final=1.0, n=256, n_exact=1024)
    for m in ModelKind:
        cfg = setup.config(m)
        tr = run(m, setup.initial_state(m), cfg.__class__(
            cfg.eps, 0.01, 1.0, cfg.grid, 0.01, cfg.carrier))
        if m is ModelKind.EXACT_KG:
            q = [tr.state(i).energy(cfg.grid) for i in range(len(tr.times))]
        elif m in (ModelKind.FULL_DISPERSION, ModelKind.NLS):
            q = [tr.state(i).mass(cfg.grid) for i in range(len(tr.times))]
        else:
            continue
        drift = np.max(np.abs(np.diff(q))) / q[0]
        yield f"{m.value} per-step conservation", drift < 1e-12, f"{drift:.1e}"

    if quick:
        return
    for m in ModelKind:
        ratio, _ = order_ratio(m, setup, 0.02)
        yield f"{m.value} strang ratio in [3.4, 4.6]", 3.4 <= ratio <= 4.6, f"{ratio:.3f}"

    # halving-dt self-check of the default step policy on a short run
    s = setup_point(0.05, PulseSpec("short", 1.0), t_final=2.0)
    ref = run(ModelKind.EXACT_KG, s.initial_state(ModelKind.EXACT_KG),
              s.config(ModelKind.EXACT_KG))
    c = s.config(ModelKind.EXACT_KG)
    half = run(ModelKind.EXACT_KG, s.initial_state(ModelKind.EXACT_KG),
               c.__class__(c.eps, c.dt / 2, c.t_final, c.grid, c.snapshot_interval, c.carrier))
    d = np.max(np.abs(ref.f_physical(-1) - half.f_physical(-1))) / np.max(np.abs(half.f_physical(-1)))
    yield "default exact step within 1e-3 of dt/2", d < 1e-3, f"{d:.1e}"


def cmd_validate(args) -> int:
    _merge(args, dict(out=None, threads=1))
    print(f"kernel backend: {kernels.BACKEND}")
    failed = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for name, ok, detail in validation_checks(args.quick):
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
            failed += not ok
    print(f"{failed} check(s) failed" if failed else "all checks passed")
    return EXIT_NUMERIC if failed else EXIT_OK


# ---------------------------------------------------------------------------


def _parse_model(name) -> ModelKind:
    try:
        return ModelKind.parse(str(name))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _projector(name):
    if name not in ("carrier", "local"):
        raise UsageError(f"unknown projector {name!r}")
    return name


def _pulse(kind, beta, x0):
    try:
        return PulseSpec(kind, beta, x0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "symbols": cmd_symbols,
            "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be at least 1")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
