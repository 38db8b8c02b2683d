"""Command-line front end: `bchf <command> [options]`.

Exit codes: 0 ok, 1 bad configuration, 2 numeric failure, 3 a verification
check failed.  Single evaluations print JSON (with "schema": 1), tables are
CSV with every float in %.16e.

A config file holds flat key=value lines (the same keys as the long flags,
e.g. ``ks = 3`` or ``budget.max_height = 30``); flags override it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import cfunctions as cf
from . import gamma_kernel as gk
from . import hc_series as hs
from . import rank1_oracle as r1
from . import spectra as sp
from . import transform as tr
from .core_types import BCHFError, InvalidRegime, MultiplicityBC, log_weight_delta, weyl_order

SCHEMA = 1

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3

# errors that mean "the request itself is not acceptable"
CONFIG_ERRORS = (InvalidRegime, ValueError)


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    rank: int = 1
    ks: float = 3.0
    km: float = 0.0
    kl: float = -2.0
    budget: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    threads: int | None = None

    @property
    def k(self) -> MultiplicityBC:
        return MultiplicityBC(self.ks, self.km, self.kl)

    def validate(self) -> None:
        if self.rank < 1:
            raise ConfigError("rank must be a positive integer")
        if self.km < 0:
            raise ConfigError("k_m < 0 is outside the supported regime (k_s + k_l > -1/2, k_m >= 0)")
        if not self.k.in_K1_prime():
            raise ConfigError("k is outside the supported regime (k_s + k_l > -1/2, k_m >= 0)")

    def series_budget(self) -> hs.SeriesBudget:
        base = hs.SeriesBudget.default(self.rank)
        kw = {}
        for key, val in self.budget.items():
            if key not in base.__dataclass_fields__:
                raise ConfigError(f"unknown budget key {key!r}")
            kw[key] = int(val) if key == "max_height" else float(val)
        return hs.SeriesBudget(**{**base.__dict__, **kw})

    def spectral_grid(self) -> tr.SpectralGrid:
        base = tr.SpectralGrid.default(self.rank)
        kw = {}
        for key, val in self.grid.items():
            if key not in ("cutoff", "panel", "order"):
                raise ConfigError(f"unknown grid key {key!r}")
            kw[key] = int(val) if key == "order" else float(val)
        return tr.SpectralGrid(**{**base.__dict__, **kw})


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key = value")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    raw: dict[str, str] = read_config_file(args.config) if args.config else {}
    for key in ("rank", "ks", "km", "kl", "out", "seed", "threads"):
        v = getattr(args, key, None)
        if v is not None:
            raw[key] = str(v)
    for item in args.budget_override or []:
        key, val = item
        raw["budget." + key] = val
    for item in args.grid_override or []:
        key, val = item
        raw["grid." + key] = val
    cfg = RunConfig()
    try:
        for key, val in raw.items():
            if key.startswith("budget."):
                cfg.budget[key[7:]] = val
            elif key.startswith("grid."):
                cfg.grid[key[5:]] = val
            elif key in ("rank", "seed", "threads"):
                setattr(cfg, key, int(val))
            elif key in ("ks", "km", "kl"):
                setattr(cfg, key, float(val))
            elif key == "out":
                cfg.out = val
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    if cfg.threads is not None:
        os.environ["BCHF_THREADS"] = str(cfg.threads)
    return cfg


# ---------------------------------------------------------------------------
# parsing helpers


def parse_vector(text: str, dtype=complex) -> np.ndarray:
    try:
        return np.array([dtype(p.strip().replace(" ", "")) for p in text.split(",")], dtype=dtype)
    except ValueError as exc:
        raise ConfigError(f"cannot parse vector {text!r}") from exc


def _require_len(vec: np.ndarray, r: int, name: str) -> np.ndarray:
    if len(vec) != r:
        raise ConfigError(f"{name} needs {r} coordinates, got {len(vec)}")
    return vec


def _cpx(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _emit_json(obj: dict, cfg: RunConfig) -> None:
    text = json.dumps({"schema": SCHEMA, **obj}, indent=2, sort_keys=True)
    _write(text + "\n", cfg)


def _emit_csv(header: list[str], rows: list[list], cfg: RunConfig) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, (int, np.integer, str)) else "%.16e" % float(v) for v in row])
    _write(buf.getvalue(), cfg)


def _write(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_eval(cfg: RunConfig, args) -> int:
    r, k = cfg.rank, cfg.k
    budget = cfg.series_budget()
    rec: dict = {"command": "eval", "what": args.what, "rank": r, "k": list(k.as_tuple())}
    x = _require_len(parse_vector(args.x, float), r, "--x") if args.x else None
    lam = _require_len(parse_vector(args.lam), r, "--lambda") if args.lam else None
    if args.what in ("F", "phi", "c") and lam is None:
        raise ConfigError("--lambda is required")
    if args.what in ("F", "phi", "delta") and x is None:
        raise ConfigError("--x is required")
    if lam is not None:
        rec["lambda"] = [_cpx(v) for v in lam]
    if x is not None:
        rec["x"] = [float(v) for v in x]
    if args.what == "F":
        rec["value"] = _cpx(hs.F(lam, k, x, budget))
        rec["condition"] = "clean"
    elif args.what == "phi":
        sv = hs.phi(lam, k, x, budget)
        rec["value"] = _cpx(sv.value)
        rec["tail_bound"] = sv.tail_bound
        rec["terms"] = sv.terms_used
        rec["condition"] = "clean"
    elif args.what == "c":
        cv = cf.c(lam, k)
        rec["value"] = _cpx(cv.value)
        rec["condition"] = cv.condition
    else:
        rec["value"] = _cpx(float(np.exp(log_weight_delta(k, x[None])[0])))
        rec["condition"] = "clean"
    _emit_json(rec, cfg)
    return EXIT_OK


def spectra_rows(k: MultiplicityBC, r: int) -> tuple[list[str], list[list]]:
    header = ["i"] + [f"xi_{j + 1}" for j in range(r)] + ["d", "W_Theta_order", "stabilizer_order"]
    rows = []
    for comp in sp.assemble_measure(k, r):
        xi = list(comp.xi) + [float("nan")] * (r - comp.i)
        rows.append([comp.i] + xi + [comp.density_const, int(round(1 / comp.weyl_factor)), comp.stabilizer])
    return header, rows


def cmd_spectra(cfg: RunConfig, args) -> int:
    header, rows = spectra_rows(cfg.k, cfg.rank)
    _emit_csv(header, rows, cfg)
    return EXIT_OK


def cmd_density(cfg: RunConfig, args) -> int:
    r = cfg.rank
    if args.nu:
        nus = np.array([_require_len(parse_vector(v, float), r, "--nu") for v in args.nu])
    else:
        line = np.arange(args.step, args.cutoff + 1e-12, args.step)
        # off-diagonal samples so coordinates never coincide
        nus = np.stack([line * (1 + 0.37 * j) for j in range(r)], axis=1)
    rows = [list(nu) + [cf.spectral_density_continuous(nu, cfg.k)] for nu in nus]
    _emit_csv([f"nu_{j + 1}" for j in range(r)] + ["density"], rows, cfg)
    return EXIT_OK


def residue_rows(k: MultiplicityBC, r: int) -> list[dict]:
    out = []
    for i in range(1, r + 1):
        for p in sp.enumerate_D(i, k):
            numeric, closed, resid = sp.residue_verify_dtheta(i, p.xi, k)
            out.append({"i": i, "xi": list(p.xi), "numeric": numeric, "closed": closed, "residual": resid})
    return out


def cmd_residue_check(cfg: RunConfig, args) -> int:
    rows = residue_rows(cfg.k, cfg.rank)
    header = ["i"] + [f"xi_{j + 1}" for j in range(cfg.rank)] + ["numeric", "closed_form", "residual"]
    table = [[d["i"]] + d["xi"] + [float("nan")] * (cfg.rank - d["i"]) + [d["numeric"], d["closed"], d["residual"]] for d in rows]
    _emit_csv(header, table, cfg)
    return EXIT_OK if all(d["residual"] <= args.tol for d in rows) else EXIT_VERIFY


def _bump_from_args(cfg: RunConfig, args) -> tr.TestFunction:
    r = cfg.rank
    center = args.center or ",".join(str(0.9 + 1.2 * j) for j in range(r))
    c = _require_len(parse_vector(center, float), r, "--center")
    return tr.chamber_bump(c, args.radius, args.width)


def cmd_forward(cfg: RunConfig, args) -> int:
    r = cfg.rank
    f = _bump_from_args(cfg, args)
    lams = np.array([_require_len(parse_vector(v), r, "--lambda") for v in (args.lam or [])])
    if lams.size == 0:
        raise ConfigError("at least one --lambda is required")
    vals = tr.forward(f, lams, cfg.k, budget=cfg.series_budget())
    header = [f"re_lambda_{j + 1}" for j in range(r)] + [f"im_lambda_{j + 1}" for j in range(r)] + ["re_value", "im_value"]
    rows = [list(l.real) + list(l.imag) + [v.real, v.imag] for l, v in zip(lams, vals)]
    _emit_csv(header, rows, cfg)
    return EXIT_OK


def cmd_invert(cfg: RunConfig, args) -> int:
    r = cfg.rank
    xs = np.array([_require_len(parse_vector(v, float), r, "--x") for v in (args.x or [])])
    if xs.size == 0:
        raise ConfigError("at least one --x is required")
    phi = tr.GaussianSpectral(args.cg)
    grid = cfg.spectral_grid()
    budget = cfg.series_budget()
    rec: dict = {"command": "invert", "rank": r, "k": list(cfg.k.as_tuple()), "c_g": args.cg, "x": xs.tolist()}
    if args.form in ("final", "both"):
        res = tr.inverse_final_form(phi, xs, cfg.k, grid, budget)
        rec["final"] = {"values": [_cpx(v) for v in res.values], "tail": res.tail}
    if args.form in ("first", "both"):
        eta = args.eta or ",".join(str(-2.0 - 0.4 * j) for j in range(r))
        eta_v = _require_len(parse_vector(eta, float), r, "--eta")
        res = tr.inverse_first_form(phi, xs, cfg.k, eta_v, grid, budget)
        rec["first"] = {"eta": eta_v.tolist(), "values": [_cpx(v) for v in res.values], "tail": res.tail}
    _emit_json(rec, cfg)
    return EXIT_OK


def cmd_plancherel(cfg: RunConfig, args) -> int:
    f = _bump_from_args(cfg, args)
    lhs, rhs, resid, parts = tr.plancherel_check(f, cfg.k, cfg.spectral_grid(), budget=cfg.series_budget())
    comps = [{"i": key[0], "xi": list(key[1]), "value": float(val)} for key, val in parts.items()]
    _emit_json({"command": "plancherel", "rank": cfg.rank, "k": list(cfg.k.as_tuple()), "lhs": lhs, "rhs": rhs, "residual": resid, "components": comps}, cfg)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verification suites


@dataclass
class Check:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)


def suite_gamma(cfg: RunConfig) -> list[Check]:
    pts = [0.3, 1.7 + 0.4j, -2.5 + 0.1j, 7.25, 0.5 - 3j]
    out = [Check(f"duplication z={z}", gk.duplication_check(z), 1e-12) for z in pts]
    out += [Check(f"reflection z={z}", gk.reflection_residual(z), 1e-12) for z in pts]
    lim = gk.gamma_ratio(-2, -3)
    out.append(Check("Gamma(-2)/Gamma(-3) limit", abs(lim.as_complex() - (-3)), 1e-14))
    return out


def suite_cfun(cfg: RunConfig) -> list[Check]:
    out = []
    zero = MultiplicityBC(0.0, 0.0, 0.0)
    for r in (1, 2, 3):
        lam = np.array([0.3 + 0.7j, 1.1 - 0.2j, 2.3 + 0.4j])[:r]
        expect = 1.0 / weyl_order(r)
        out.append(Check(f"c(lam, 0) r={r}", abs(cf.c(lam, zero).value - expect) / expect, 1e-12))
    r, k = cfg.rank, cfg.k
    from .core_types import rho

    rh = rho(k, r)
    # at special k rho can sit on a removable singularity; take the value analytic in k
    val = cf.c_regularized("full", rh, [], k)
    out.append(Check("c(rho) = 1", abs(val.value - 1), 1e-10))
    return out


def suite_series(cfg: RunConfig) -> list[Check]:
    rng = np.random.default_rng(cfg.seed)
    out = []
    for n in range(5):
        ks = rng.uniform(0.2, 3.0)
        kl = rng.uniform(-0.5, 1.5)
        k = MultiplicityBC(ks, 0.0, kl)
        lam = complex(rng.uniform(-2, 2), rng.uniform(-4, 4))
        t = rng.uniform(0.5, 3.0)
        ref = r1.jacobi_function(lam, r1.JacobiParams(k.alpha, k.beta), t)
        val = hs.F([lam], k, [t])
        out.append(Check(f"rank-1 Jacobi oracle #{n}", abs(val - ref) / (1 + abs(ref)), 1e-9))
        out.append(Check(f"k-tilde symmetry #{n}", hs.k_symmetry_check([lam], k, [t]), 1e-8))
    return out


def suite_residue(cfg: RunConfig) -> list[Check]:
    return [Check(f"residue i={d['i']} xi={d['xi']}", d["residual"], 1e-6) for d in residue_rows(cfg.k, cfg.rank)]


def _default_points(r: int) -> np.ndarray:
    if r == 1:
        return np.array([[0.6], [1.1], [1.7]])
    return np.array([[0.6, 1.5], [0.9, 2.4], [0.4, 1.0]])


def suite_inversion(cfg: RunConfig) -> list[Check]:
    r = cfg.rank
    cg = 0.05 if r == 1 else 0.2
    grid = cfg.spectral_grid()
    xs = _default_points(r)
    phi = tr.GaussianSpectral(cg)
    k = cfg.k
    # c(-lam)^{-1} has its leftmost poles at lam_j = ks + 2kl; stay below them
    edge = min(k.ks + 2 * k.kl, 0.0)
    eta = np.array([edge - 1.0 - 0.4 * j for j in range(r)])
    a = tr.inverse_first_form(phi, xs, k, eta, grid)
    b = tr.inverse_final_form(phi, xs, k, grid)
    scale = np.max(np.abs(b.values))
    tol = 1e-6 if r == 1 else 1e-4
    return [Check(f"first = final form at x={x.tolist()}", abs(va - vb) / scale, tol) for x, va, vb in zip(xs, a.values, b.values)]


def suite_plancherel(cfg: RunConfig) -> list[Check]:
    r = cfg.rank
    if r == 1:
        f = tr.chamber_bump([1.0], 0.7, 0.16)
        grid = tr.SpectralGrid(30.0, 1.0, 10)
        spatial = tr.box_grid(cfg.k, [1.0], 0.7, panels=6, order=16)
        tol = 1e-3
    else:
        c = [0.9 + 1.3 * j for j in range(r)]
        f = tr.chamber_bump(c, 0.6, 0.2)
        grid = tr.SpectralGrid(24.0, 1.0, 8)
        spatial = tr.box_grid(cfg.k, c, 0.6)
        tol = 1e-2
    _, _, resid, _ = tr.plancherel_check(f, cfg.k, grid, spatial, cfg.series_budget())
    return [Check("Plancherel lhs = rhs", resid, tol)]


SUITES: dict[str, Callable[[RunConfig], list[Check]]] = {
    "gamma": suite_gamma,
    "cfun": suite_cfun,
    "series": suite_series,
    "residue": suite_residue,
    "inversion": suite_inversion,
    "plancherel": suite_plancherel,
}


def cmd_verify(cfg: RunConfig, args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    report = []
    for name in names:
        t0 = time.perf_counter()
        checks = SUITES[name](cfg)
        report.append(
            {
                "suite": name,
                "seconds": round(time.perf_counter() - t0, 3),
                "checks": [{"name": c.name, "residual": c.residual, "tol": c.tol, "pass": c.passed} for c in checks],
            }
        )
    ok = all(c["pass"] for s in report for c in s["checks"])
    _emit_json({"command": "verify", "rank": cfg.rank, "k": list(cfg.k.as_tuple()), "suites": report, "pass": ok}, cfg)
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _kv(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected key=value")
    key, val = text.split("=", 1)
    return key.strip(), val.strip()


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key=value file")
    common.add_argument("--rank", type=int)
    common.add_argument("--ks", type=float)
    common.add_argument("--km", type=float)
    common.add_argument("--kl", type=float)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker threads (default: $BCHF_THREADS or 1)")
    # --budget.max_height 30 and --grid.cutoff 20 style overrides
    for key in ("max_height", "wall_margin", "resonance_tol", "tail_tol"):
        common.add_argument(f"--budget.{key}", dest="budget_override", action="append", type=lambda v, key=key: (key, v))
    for key in ("cutoff", "panel", "order"):
        common.add_argument(f"--grid.{key}", dest="grid_override", action="append", type=lambda v, key=key: (key, v))

    p = _Parser(prog="bchf", description="BC_r hypergeometric functions and their Fourier transform.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", parents=[common], help="evaluate F, Phi, c or delta_k")
    e.add_argument("--what", choices=["F", "phi", "c", "delta"], default="F")
    e.add_argument("--lambda", dest="lam", help="comma separated, complex allowed (1+2j)")
    e.add_argument("--x", help="comma separated chamber point")
    e.set_defaults(fn=cmd_eval)

    s = sub.add_parser("spectra", parents=[common], help="spectral components as CSV")
    s.set_defaults(fn=cmd_spectra)

    d = sub.add_parser("density", parents=[common], help="continuous Plancherel density |c(i nu)|^-2")
    d.add_argument("--nu", action="append", help="comma separated; may repeat")
    d.add_argument("--cutoff", type=float, default=5.0)
    d.add_argument("--step", type=float, default=0.5)
    d.set_defaults(fn=cmd_density)

    rc = sub.add_parser("residue-check", parents=[common], help="contour residues against closed-form densities")
    rc.add_argument("--tol", type=float, default=1e-6)
    rc.set_defaults(fn=cmd_residue_check)

    for name, fn, helptext in (("forward", cmd_forward, "transform of a chamber bump"), ("plancherel", cmd_plancherel, "Plancherel identity for a chamber bump")):
        q = sub.add_parser(name, parents=[common], help=helptext)
        q.add_argument("--center", help="comma separated bump center in the chamber")
        q.add_argument("--radius", type=float, default=0.6)
        q.add_argument("--width", type=float, default=0.2)
        if name == "forward":
            q.add_argument("--lambda", dest="lam", action="append", help="spectral point; may repeat")
        q.set_defaults(fn=fn)

    inv = sub.add_parser("invert", parents=[common], help="invert a Gaussian spectral function")
    inv.add_argument("--x", action="append", help="chamber point; may repeat")
    inv.add_argument("--cg", type=float, default=0.05, help="phi(lam) = exp(c_g sum lam_j^2); c_g > 0 decays on i a*")
    inv.add_argument("--form", choices=["first", "final", "both"], default="both")
    inv.add_argument("--eta", help="contour shift for the first form")
    inv.set_defaults(fn=cmd_invert)

    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
    v.set_defaults(fn=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return args.fn(cfg, args)
    except (ConfigError, *CONFIG_ERRORS) as exc:
        print(f"bchf: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BCHFError as exc:
        print(f"bchf: numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"bchf: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
