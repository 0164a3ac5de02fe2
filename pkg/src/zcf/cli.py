"""Command-line front end: factor-check, weyl-evolve, invert, gbdt.

Every command reads one JSON config, writes a CSV table and a JSON report to
--out, and exits with 0 (all checks pass), 2 (numerical failure) or
3 (configuration error).  ZCF_THREADS caps the worker pool used over
z-samples; results are gathered in input order, so output is deterministic.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline

from . import gbdt, inverse, mkdv, propagator
from .errors import DomainError, DSViolation, EtaViolation, SectorError, ZCFError
from .pencil import Domain2D, zero_curvature_residual

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 2, 3

DEFAULT_TOL = {
    "factorization": 1e-6,
    "weyl_gap": 1e-4,
    "inversion": 1e-2,
    "mkdv": 1e-4,
    "darboux_ode": 1e-5,
    "transformed_zc": 1e-5,
    "identity": 1e-8,
}


class ConfigError(Exception):
    pass


def parse_complex(v):
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(a, (int, float)) for a in v):
        return complex(v[0], v[1])
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    if isinstance(v, (int, float)):
        return complex(v)
    raise ConfigError(f"cannot read {v!r} as a complex number")


def parse_matrix(v):
    """Nested lists of complex entries (numbers, "a+bj" strings or [re, im])."""
    if not isinstance(v, list):
        return np.array([[parse_complex(v)]])
    if v and not isinstance(v[0], list):
        return np.array([[parse_complex(a) for a in v]])
    try:
        return np.array([[parse_complex(a) for a in row] for row in v])
    except ConfigError:
        if all(isinstance(a, list) and len(a) == 2 for a in v):
            return np.array([[parse_complex(a) for a in v]])
        raise


@dataclass
class RunConfig:
    scenario: str
    potential: dict
    domain: Domain2D
    points: list
    z_samples: list
    tolerances: dict
    T: float = 0.4
    steps: int = 2000
    inversion: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @classmethod
    def load(cls, path, steps=None):
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"unreadable config: {exc}") from exc
        if not isinstance(raw, dict) or "potential" not in raw:
            raise ConfigError("config must be an object with a 'potential' entry")
        dom = raw.get("domain", {})
        b1 = float(dom.get("b1", np.inf))
        b2 = float(dom.get("b2", 1.0))
        try:
            domain = Domain2D(b1, b2, int(dom.get("nx", 21)), int(dom.get("nt", 11)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        tol = dict(DEFAULT_TOL)
        tol.update({k: float(v) for k, v in raw.get("tolerances", {}).items()})
        if any(v <= 0 for v in tol.values()):
            raise ConfigError("tolerances must be positive")
        if "points" in raw:
            points = [(float(a), float(b)) for a, b in raw["points"]]
        else:
            xc = min(b1, 2.0)
            points = [(fx * xc, ft * b2) for fx in (0.25, 0.5, 0.75) for ft in (0.25, 0.5, 0.75)]
        zs = [parse_complex(z) for z in raw.get("z_samples", ["-2j"])]
        st = int(steps if steps is not None else raw.get("steps", 2000))
        if st < 1:
            raise ConfigError("steps must be positive")
        return cls(raw.get("scenario", path.stem), raw["potential"], domain, points, zs, tol,
                   float(raw.get("T", 0.4)), st, raw.get("inversion", {}), path.parent)


# ------------------------------------------------------------- potentials

def _xt_potential(c, domain):
    """v = c x t: not an mKdV solution (negative control)."""
    c = complex(c)

    def v(x, t):
        return (c * np.asarray(x) * np.asarray(t))[..., None, None] + 0j

    def vx(x, t):
        return (c * np.asarray(t) + 0 * np.asarray(x))[..., None, None] + 0j

    def zero(x, t):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(t)).shape + (1, 1), complex)

    def vt(x, t):
        return (c * np.asarray(x) + 0 * np.asarray(t))[..., None, None] + 0j

    xs, ts = domain.x_grid(), domain.t_grid()
    M = abs(c) * xs[-1] * ts[-1]
    return mkdv.MkdvPotential(1, v, vx, zero, M=M, sup_deriv_bound=abs(c) * ts[-1],
                              domain=domain, v_xxx=zero, v_t=vt)


def _tabulated_potential(entry, base_dir, domain):
    """Potential from a CSV with columns x, t, re_v_ij, im_v_ij on a tensor grid."""
    path = Path(entry["file"])
    path = path if path.is_absolute() else base_dir / path
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    xs = np.unique(data[:, 0])
    ts = np.unique(data[:, 1])
    ncol = data.shape[1] - 2
    p = int(round(np.sqrt(ncol // 2)))
    if 2 * p * p != ncol or len(xs) * len(ts) != len(data):
        raise ConfigError("tabulated potential must be a full x-t grid with 2p^2 value columns")
    order = np.lexsort((data[:, 1], data[:, 0]))
    vals = data[order, 2:].reshape(len(xs), len(ts), p * p, 2)
    kx, kt = min(5, len(xs) - 1), min(5, len(ts) - 1)
    splines = [(RectBivariateSpline(xs, ts, vals[:, :, e, 0], kx=kx, ky=kt),
                RectBivariateSpline(xs, ts, vals[:, :, e, 1], kx=kx, ky=kt)) for e in range(p * p)]

    def provider(dx=0, dt=0):
        def f(x, t):
            xb, tb = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
            out = [re.ev(xb, tb, dx=dx, dy=dt) + 1j * im.ev(xb, tb, dx=dx, dy=dt)
                   for re, im in splines]
            return np.stack(out, axis=-1).reshape(xb.shape + (p, p))
        return f

    dom = Domain2D(float(xs[-1]), float(ts[-1]), domain.nx, domain.nt)
    pot = mkdv.MkdvPotential(p, provider(), provider(1), provider(2), M=0.0, domain=dom,
                             v_xxx=provider(3) if kx >= 3 else None, v_t=provider(0, 1))
    sup_v, sup_d = pot.sampled_bounds()
    return mkdv.MkdvPotential(p, pot.v, pot.v_x, pot.v_xx, M=float(entry.get("M", sup_v)),
                              sup_deriv_bound=sup_d, domain=dom, v_xxx=pot.v_xxx, v_t=pot.v_t)


def soliton_node(entry):
    A1 = parse_matrix(entry["A1"])
    Pi1 = parse_matrix(entry["Pi1"])
    if A1.shape[0] != A1.shape[1] or Pi1.shape[0] != A1.shape[0] or Pi1.shape[1] % 2:
        raise ConfigError("A1 must be n x n and Pi1 n x 2p")
    S0 = parse_matrix(entry["S0"]) if "S0" in entry else None
    try:
        if entry.get("reduction", "skew") == "skew":
            return gbdt.skew_reduction_node(A1, Pi1, S0)
        A2 = parse_matrix(entry["A2"])
        Pi2 = parse_matrix(entry["Pi2"])
        if S0 is None:
            return gbdt.SNode.from_sylvester(A1, A2, Pi1, Pi2)
        return gbdt.SNode(A1, A2, S0, Pi1, Pi2).check(1e-10)
    except (KeyError, np.linalg.LinAlgError) as exc:
        raise ConfigError(f"bad S-node parameters: {exc}") from exc


def build_potential(cfg):
    """(MkdvPotential, GBDTField or None) for the configured potential kind."""
    entry = cfg.potential
    kind = entry.get("kind")
    dom = cfg.domain
    if kind == "zero":
        p = int(entry.get("p", 1))
        z = mkdv.zero_potential(p)
        return mkdv.MkdvPotential(p, z.v, z.v_x, z.v_xx, M=0.0, sup_deriv_bound=0.0,
                                  domain=dom, v_xxx=z.v_xxx, v_t=z.v_t), None
    if kind == "constant":
        c = mkdv.constant_potential(parse_matrix(entry["c"]))
        return mkdv.MkdvPotential(c.p, c.v, c.v_x, c.v_xx, M=c.M, sup_deriv_bound=0.0,
                                  domain=dom, v_xxx=c.v_xxx, v_t=c.v_t), None
    if kind == "gbdt-soliton":
        return gbdt.mkdv_soliton(soliton_node(entry), dom)
    if kind == "tabulated":
        return _tabulated_potential(entry, cfg.base_dir, dom), None
    if kind == "xt":
        return _xt_potential(parse_complex(entry.get("c", 1.0)), dom), None
    raise ConfigError(f"unknown potential kind {kind!r}")


# ------------------------------------------------------------------ output

def fmt(v):
    return f"{float(v):.16e}"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(a) for a in row])


def write_report(path, report):
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True, default=float) + "\n")


def entry_names(prefix, p):
    return [f"{part}_{prefix}_{i + 1}{j + 1}" for i in range(p) for j in range(p) for part in ("re", "im")]


def flat_entries(a):
    a = np.asarray(a).ravel()
    return [x for c in a for x in (c.real, c.imag)]


def pmap(fn, items):
    workers = max(1, int(os.environ.get("ZCF_THREADS", "1")))
    if workers == 1:
        return [fn(a) for a in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- commands

def _require_half_plane(cfg, pot):
    bad = [z for z in cfg.z_samples if not z.imag < -pot.M]
    if bad:
        raise ConfigError(f"z-samples {bad} violate Im z < -M = {-pot.M:.6g}")


def cmd_factor_check(cfg, out):
    pot, _ = build_potential(cfg)
    G, F = mkdv.build_mkdv_pair(pot)
    tol = cfg.tolerances["factorization"]
    jobs = [(x, t, z) for (x, t) in cfg.points for z in cfg.z_samples]
    res = pmap(lambda a: propagator.factorization_residual(G, F, *a, steps=cfg.steps), jobs)
    write_csv(out / "factor_check.csv", ["x", "t", "re_z", "im_z", "residual"],
              [(x, t, z.real, z.imag, r) for (x, t, z), r in zip(jobs, res)])
    failures = [dict(x=x, t=t, z=str(z), residual=r) for (x, t, z), r in zip(jobs, res) if not r <= tol]
    return {"checks": {"factorization": {"max": max(res), "tol": tol}},
            "failures": failures, "passed": not failures}


def cmd_weyl_evolve(cfg, out):
    pot, _ = build_potential(cfg)
    _require_half_plane(cfg, pot)
    T, tol = cfg.T, cfg.tolerances["weyl_gap"]

    def one(z):
        phi0, _ = mkdv.weyl_direct(pot, 0.0, z)
        direct, _ = mkdv.weyl_direct(pot, T, z)
        evolved = mkdv.weyl_evolve(phi0, pot, T, z, steps=cfg.steps)
        return direct, evolved, float(np.max(np.abs(direct - evolved)))

    res = pmap(one, cfg.z_samples)
    p = pot.p
    header = (["x", "t", "re_z", "im_z"] + entry_names("direct", p) + entry_names("evolved", p)
              + ["gap"])
    write_csv(out / "weyl_evolve.csv", header,
              [[0.0, T, z.real, z.imag] + flat_entries(d) + flat_entries(e) + [g]
               for z, (d, e, g) in zip(cfg.z_samples, res)])
    gaps = [g for _, _, g in res]
    failures = [dict(z=str(z), gap=g) for z, g in zip(cfg.z_samples, gaps) if not g <= tol]
    return {"checks": {"weyl_gap": {"max": max(gaps), "tol": tol}},
            "failures": failures, "passed": not failures}


def _phi_from_file(path, p):
    """Weyl samples on a line Im z = const: columns re_z, im_z, re/im entries."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    re_z, im_z = data[:, 0], data[:, 1]
    if np.ptp(im_z) > 1e-12:
        raise ConfigError("tabulated Weyl samples must lie on one horizontal line")
    vals = (data[:, 2::2] + 1j * data[:, 3::2]).reshape(len(data), p, p)
    spline = CubicSpline(re_z, vals, axis=0)

    def phi(z):
        z = np.asarray(z)
        return spline(np.real(z))
    return phi, float(im_z[0]), float(np.max(np.abs(re_z)))


def cmd_invert(cfg, out):
    pot, field_ = build_potential(cfg)
    inv = cfg.inversion
    l = float(inv.get("l", 1.0))
    N = int(inv.get("N", 200))
    source = inv.get("phi_source", "analytic" if field_ is not None else "zero")
    eta = float(inv.get("eta", -2 * pot.M - 1))
    a_trunc = float(inv.get("a_trunc", 40.0))
    doublings = 6
    if source == "analytic":
        if field_ is None:
            raise ConfigError("analytic Weyl functions exist only for gbdt-soliton potentials")
        phi = gbdt.darboux_weyl_function(field_, 0.0)
    elif source == "zero":
        phi = lambda z: np.zeros(np.shape(z) + (pot.p, pot.p), complex)
    elif source == "file":
        path = Path(inv["phi_file"])
        phi, im_line, a_max = _phi_from_file(path if path.is_absolute() else cfg.base_dir / path, pot.p)
        eta = 2 * im_line
        a_trunc = a_max
        doublings = 0
    else:
        raise ConfigError(f"unknown phi_source {source!r}")
    if not eta < -2 * pot.M:
        raise ConfigError(f"eta = {eta} must lie below -2M = {-2 * pot.M}")
    kernel = inverse.fourier_s(phi, l, eta, a_trunc, N, M=pot.M, d_xi=float(inv.get("d_xi", 0.1)),
                               max_doublings=doublings)
    rows = inverse.recover_omega1(inverse.recover_omega2(
        kernel, min_eig_floor=float(inv.get("min_eig_floor", 0.99))))
    v = inverse.recover_v(rows)
    p = pot.p
    vtrue = pot.values(kernel.grid, np.zeros_like(kernel.grid))
    min_eig = rows.diagnostics["min_eig"]
    write_csv(out / "invert.csv",
              ["x", "t"] + entry_names("v", p) + entry_names("v_true", p) + ["sl_min_eig"],
              [[x, 0.0] + flat_entries(a) + flat_entries(b) + [e]
               for x, a, b, e in zip(kernel.grid, v, vtrue, min_eig)])
    interior = slice(2, -2) if len(v) > 4 else slice(None)
    err = float(np.max(np.abs(v - vtrue)[interior]))
    tol = cfg.tolerances["inversion"]
    checks = {"inversion_sup_error": {"max": err, "tol": tol},
              "sl_min_eig": float(min_eig.min()), "s0_defect": kernel.s0_defect,
              "a_used": kernel.a_used, "eta": eta}
    failures = [] if err <= tol else [{"check": "inversion_sup_error", "value": err}]
    return {"checks": checks, "failures": failures, "passed": not failures}


def cmd_gbdt(cfg, out):
    if cfg.potential.get("kind") != "gbdt-soliton":
        raise ConfigError("gbdt needs a gbdt-soliton potential")
    node = soliton_node(cfg.potential)
    try:
        pot, fld = gbdt.mkdv_soliton(node, cfg.domain)
    except DSViolation as exc:
        return {"checks": {}, "failures": [{"check": "D_S", "location": list(exc.location),
                                            "message": str(exc)}], "passed": False}
    tol = cfg.tolerances
    G, F = mkdv.build_mkdv_pair(pot)
    Z = mkdv.build_mkdv_pair(mkdv.zero_potential(pot.p, cfg.domain.b2))
    Gt, Ft = gbdt.transformed_pencils(fld, *Z)
    checks, failures = {}, []

    def record(name, values, limit):
        worst = float(max(values)) if values else 0.0
        checks[name] = {"max": worst, "tol": limit}
        if not worst <= limit:
            failures.append({"check": name, "value": worst})

    record("identity", [fld.identity_drift()], tol["identity"])
    record("mkdv", [mkdv.mkdv_residual(pot, x, t) for x, t in cfg.points], tol["mkdv"])
    jobs = [(x, t, z) for (x, t) in cfg.points for z in cfg.z_samples]
    dx = pmap(lambda a: gbdt.verify_darboux_ode(fld, Z[0], *a, h=1e-4, axis="x"), jobs)
    dt = pmap(lambda a: gbdt.verify_darboux_ode(fld, Z[1], *a, h=1e-4, axis="t"), jobs)
    record("darboux_ode", dx + dt, tol["darboux_ode"])
    tz = [zero_curvature_residual(Gt, Ft, *a) for a in jobs]
    record("transformed_zc", tz, tol["transformed_zc"])
    fr = pmap(lambda a: propagator.factorization_residual(G, F, *a, steps=cfg.steps), jobs)
    record("factorization", fr, tol["factorization"])

    xs, ts = cfg.domain.x_grid(), cfg.domain.t_grid()
    X, T = np.meshgrid(xs, ts, indexing="ij")
    vals = pot.values(X, T)
    write_csv(out / "gbdt_soliton.csv", ["x", "t"] + entry_names("v", pot.p),
              [[x, t] + flat_entries(v) for x, t, v in zip(X.ravel(), T.ravel(),
                                                         vals.reshape(-1, pot.p, pot.p))])
    write_csv(out / "gbdt_checks.csv",
              ["x", "t", "re_z", "im_z", "darboux_ode_x", "darboux_ode_t", "transformed_zc",
               "factorization"],
              [(x, t, z.real, z.imag, a, b, c, d)
               for (x, t, z), a, b, c, d in zip(jobs, dx, dt, tz, fr)])
    checks["M"] = pot.M
    return {"checks": checks, "failures": failures, "passed": not failures}


COMMANDS = {
    "factor-check": cmd_factor_check,
    "weyl-evolve": cmd_weyl_evolve,
    "invert": cmd_invert,
    "gbdt": cmd_gbdt,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="zcf", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", required=True)
        sp.add_argument("--steps", type=int, default=None)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    report = {"command": args.command}
    try:
        cfg = RunConfig.load(args.config, args.steps)
        report["scenario"] = cfg.scenario
        out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.command](cfg, out)
    except (ConfigError, SectorError, DomainError, EtaViolation, KeyError, ValueError) as exc:
        code = EXIT_CONFIG
        report.update(passed=False, error=f"{type(exc).__name__}: {exc}")
    except ZCFError as exc:
        code = EXIT_FAIL
        report.update(passed=False, error=f"{type(exc).__name__}: {exc}")
    else:
        report.update(result)
        code = EXIT_OK if result["passed"] else EXIT_FAIL
    report["exit_code"] = code
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_report(out / f"{args.command}_report.json", report)
    except OSError:
        pass
    print(json.dumps({"command": args.command, "passed": report["passed"], "exit_code": code}))
    return code


if __name__ == "__main__":
    sys.exit(main())
