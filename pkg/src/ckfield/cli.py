"""Command-line entry point.

Every run resolves its configuration (flags override --config file values,
which override defaults), writes the outputs plus a manifest.json echoing
the resolved configuration into the output directory, and exits 0 when all
checks pass, 1 when a check fails, 2 on usage or configuration errors.
Output locations default to $CKFIELD_OUTDIR or ./ckfield-runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ckf import (CkfParams, classify, eval_ckf, field_cr, field_iso,
                  field_ro, field_ud, frame_quantities, reconstruct)
from .errors import BlowUp, CkfieldError, NoConvergence, NotAdmissible
from .flows import (cr_orbit_seed, fixed_point_census, integrate_curve,
                    loop_integrals, planarity_and_curvature)
from .grid import (GridSpec, assemble, free_sigma_min, scaling_sweep,
                   sigma_min, zeromode_residual_on_grid)
from .holonomy import admissible_spectrum, transport
from .identities import IDENTITY_IDS, run_identity_suite, sample_points
from .potentials import (PotentialSpec, axial, eval_field, eval_potential,
                         hopfbase, lossyau, modulated, parent_field,
                         scaled, smoothbump, spec_from_dict, spec_to_dict)
from .spinops import commutator_residuals, norm_decomposition_check
from .spinors import (SpinorField, bump_packet, from_dict as spinor_from_dict,
                      gaussian_packet, losyau_mode)
from .quadrature import QuadBox

PASS_TOL = {"loop": 1.0e-7, "commutator": 1.0e-9, "norm_rel": 1.0e-3,
            "quantization": 1.0e-6, "monodromy": 1.0e-6}


# -- argument plumbing -------------------------------------------------------

def _parse_ckf(s: str) -> CkfParams:
    s = s.strip()
    if s == "ud":
        return field_ud()
    if s == "ro":
        return field_ro()
    if s == "iso":
        return field_iso()
    if s.startswith("cr:"):
        return field_cr(float(s[3:]))
    try:
        return CkfParams.from_dict(json.loads(s))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValueError(f"cannot parse --ckf {s!r}: {exc}") from exc


def _parse_potential(s):
    if s is None:
        return None
    s = s.strip()
    if s in ("", "none", "null"):
        return None
    if s == "lossyau":
        return lossyau()
    if s.startswith("hopfbase:"):
        return hopfbase(float(s.split(":")[1]))
    if s == "axial" or s.startswith("axial:"):
        # default amplitude keeps t*|A| inside the stencil's resolvable
        # range through t = 20 on an n = 24, L = 6 grid
        lo, hi, amp = 0.5, 9.0, 0.25
        if ":" in s:
            lo, hi, amp = (float(v) for v in s.split(":")[1].split(","))
        return axial(smoothbump(lo, hi, amplitude=amp))
    if s.startswith("modulated:"):
        parts = s.split(":")
        mu = float(parts[1])
        lo, hi, amp = 0.05, 0.5, 1.0
        if len(parts) > 2:
            lo, hi, amp = (float(v) for v in parts[2].split(","))
        return modulated(hopfbase(mu), smoothbump(lo, hi, amplitude=amp))
    try:
        return spec_from_dict(json.loads(s))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"cannot parse --potential {s!r}: {exc}") from exc


def _parse_spinor(s: str) -> SpinorField:
    s = s.strip()
    if s == "losyau":
        return losyau_mode()
    if s.startswith("gaussian:"):
        v = [float(x) for x in s.split(":")[1].split(",")]
        return gaussian_packet(center=v[:3], width=v[3])
    if s.startswith("bump:"):
        v = [float(x) for x in s.split(":")[1].split(",")]
        return bump_packet(u_range=(v[0], v[1]), z_range=(v[2], v[3]))
    try:
        return spinor_from_dict(json.loads(s))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValueError(f"cannot parse --spinor {s!r}: {exc}") from exc


def _parse_point(s: str) -> np.ndarray:
    return np.array([float(v) for v in s.split(",")], dtype=float)


def _parse_ts(s: str) -> np.ndarray:
    """a:b:step inclusive range, or comma list."""
    if ":" in s:
        a, b, step = (float(v) for v in s.split(":"))
        n = int(round((b - a) / step)) + 1
        return a + step * np.arange(n)
    return np.array([float(v) for v in s.split(",")])


def _outdir(cfg: dict, sub: str) -> Path:
    base = cfg.get("outdir") or os.environ.get("CKFIELD_OUTDIR") or "ckfield-runs"
    d = Path(base) / sub
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_manifest(d: Path, cfg: dict):
    cfg = dict(cfg)
    cfg["version"] = __version__
    with open(d / "manifest.json", "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True, default=str)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    return v


# -- subcommands --------------------------------------------------------------

def _cmd_classify(cfg) -> int:
    p = _parse_ckf(cfg["ckf"])
    d = _outdir(cfg, "classify")
    try:
        cf = classify(p)
    except CkfieldError as exc:
        print(f"not classifiable: {exc}")
        _write_manifest(d, cfg)
        return 1
    rec = {"kind": cf.kind, "x0": _jsonable(cf.x0), "axis": _jsonable(cf.axis),
           "scale": cf.scale, "nu": cf.nu, "rate": cf.rate,
           "admissible": cf.admissible,
           "roundtrip_exact": bool(np.array_equal(
               reconstruct(cf).a, p.a))}
    q = reconstruct(cf)
    rec["roundtrip_exact"] = (np.array_equal(q.a, p.a) and q.b0 == p.b0 and
                              np.array_equal(q.b, p.b) and np.array_equal(q.c, p.c))
    census = fixed_point_census(p)
    rec["fixed_points"] = [{"point": _jsonable(fp.point), "kind": fp.kind}
                           for fp in census.isolated]
    if census.degenerate is not None:
        rec["degenerate_zero_set"] = {k: _jsonable(v)
                                      for k, v in census.degenerate.items()}
    with open(d / "classify.json", "w") as fh:
        json.dump(rec, fh, indent=2)
    _write_manifest(d, cfg)
    print(f"kind={cf.kind} scale={cf.scale:.6g} admissible={cf.admissible}"
          + (f" nu={cf.nu:.6g}" if cf.nu is not None else ""))
    return 0 if rec["roundtrip_exact"] else 1


def _cmd_verify_identities(cfg) -> int:
    p = _parse_ckf(cfg["ckf"])
    n = int(cfg.get("points", 200))
    seed = int(cfg.get("seed", 0))
    d = _outdir(cfg, "verify-identities")
    reports = run_identity_suite(p, n_points=n, seed=seed)
    rows = [(r.identity_id, *(f"{v:.6g}" for v in r.point),
             f"{r.residual:.3e}", f"{r.tolerance:.1e}", r.passed)
            for r in reports]
    _write_csv(d / "identities.csv",
               ("identity", "x1", "x2", "x3", "residual", "tol", "pass"), rows)
    _write_manifest(d, cfg)
    bad = [r for r in reports if not r.passed]
    worst = max((r.residual for r in reports), default=0.0)
    print(f"{len(reports)} identity checks, worst residual {worst:.3e}, "
          f"{len(bad)} failures")
    for r in bad[:10]:
        print(f"  FAIL {r.identity_id} at {r.point}: {r.residual:.3e}")
    return 1 if bad else 0


def _cmd_field_lines(cfg) -> int:
    p = _parse_ckf(cfg["ckf"])
    x0 = _parse_point(cfg["seed_point"])
    d = _outdir(cfg, "field-lines")
    kw = {}
    if cfg.get("t_max") is not None:
        kw["t_max"] = float(cfg["t_max"])
    if cfg.get("rk_tol") is not None:
        kw["rk_tol"] = float(cfg["rk_tol"])
    if cfg.get("n_quad") is not None:
        kw["n_quad"] = int(cfg["n_quad"])
    summary = {"seed_point": x0.tolist()}
    code = 0
    try:
        tr = integrate_curve(p, x0, **kw)
    except BlowUp as exc:
        summary.update({"blowup": True, "detail": str(exc)})
        tr = None
    else:
        summary.update({
            "closed": tr.closed, "period": tr.period,
            "closure_error": tr.closure_error,
            "plane_normal": _jsonable(tr.plane_normal),
            "analytic": tr.analytic, "samples": int(tr.ts.size)})
        if tr.closed:
            dev, kres = planarity_and_curvature(tr, p)
            summary["max_plane_deviation"] = dev
            summary["max_curvature_residual"] = kres
    with open(d / "curve.jsonl", "w") as fh:
        if tr is not None:
            step = max(1, tr.ts.size // int(cfg.get("max_rows", 4096)))
            for t, x in list(tr.samples)[::step]:
                fh.write(json.dumps({"t": float(t), "x": x.tolist()}) + "\n")
    with open(d / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    _write_manifest(d, cfg)
    print(json.dumps(summary))
    return code


def _cmd_loop_integrals(cfg) -> int:
    p = _parse_ckf(cfg["ckf"])
    spec = _parse_potential(cfg.get("potential"))
    x0 = _parse_point(cfg["seed_point"])
    d = _outdir(cfg, "loop-integrals")
    tr = integrate_curve(p, x0)
    li = loop_integrals(tr, p, spec)
    tol = PASS_TOL["loop"]
    rows = [
        ("div_integral", li.int_div, 0.0, abs(li.int_div), abs(li.int_div) <= tol),
        ("absY_integral", li.int_absY, 4.0 * np.pi,
         abs(li.int_absY - 4.0 * np.pi), abs(li.int_absY - 4.0 * np.pi) <= tol),
    ]
    if li.int_flux is not None:
        rows.append(("flux_integral", li.int_flux, 0.0, abs(li.int_flux),
                     abs(li.int_flux) <= tol))
    _write_csv(d / "loop_integrals.csv",
               ("integral", "value", "target", "abs_error", "pass"), rows)
    _write_manifest(d, cfg)
    ok = all(r[-1] for r in rows)
    for r in rows:
        print(f"{r[0]}: {r[1]:.12g} (target {r[2]:.12g}, err {r[3]:.3e}) "
              f"{'pass' if r[4] else 'FAIL'}")
    print(f"period = {tr.period!r}")
    return 0 if ok else 1


def _cmd_verify_operators(cfg) -> int:
    p = _parse_ckf(cfg["ckf"])
    spec = _parse_potential(cfg.get("potential"))
    f = _parse_spinor(cfg.get("spinor", "gaussian:1.5,0,0,0.6"))
    n = int(cfg.get("points", 200))
    seed = int(cfg.get("seed", 0))
    d = _outdir(cfg, "verify-operators")
    pts = sample_points(p, n, np.random.default_rng(seed))
    tol = PASS_TOL["commutator"]
    rows = []
    worst = 0.0
    for i in range(pts.shape[1]):
        x = pts[:, i]
        r1, r2, r3 = commutator_residuals(p, spec, f, x)
        worst = max(worst, r1, r2, r3)
        rows.append((*(f"{v:.6g}" for v in x), f"{r1:.3e}", f"{r2:.3e}",
                     f"{r3:.3e}", max(r1, r2, r3) <= tol))
    _write_csv(d / "commutators.csv",
               ("x1", "x2", "x3", "dwq", "qs", "anti", "pass"), rows)
    report = {"points": n, "worst_commutator_residual": worst,
              "commutators_pass": bool(worst <= tol)}
    ok = worst <= tol
    if cfg.get("quadrature"):
        nq = int(cfg["quadrature"])
        box = cfg.get("box")
        if box:
            lohi = [float(v) for v in box.split(",")]
            ranges = tuple((lohi[2 * i], lohi[2 * i + 1]) for i in range(3))
        else:
            ranges = ((-2.2, 2.2), (-2.2, 2.2), (-1.7, 1.7))
        lhs, terms, rel = norm_decomposition_check(
            p, spec, f, QuadBox(ranges=ranges, n=nq))
        report.update({"norm_lhs": lhs, "norm_terms": list(terms),
                       "norm_rel_err": rel,
                       "norm_pass": bool(rel <= PASS_TOL["norm_rel"])})
        ok = ok and rel <= PASS_TOL["norm_rel"]
    with open(d / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    _write_manifest(d, cfg)
    print(json.dumps(report))
    return 0 if ok else 1


def _cmd_holonomy(cfg) -> int:
    p = _parse_ckf(cfg["ckf"])
    spec = _parse_potential(cfg.get("potential"))
    x0 = _parse_point(cfg["orbit_seed"])
    d = _outdir(cfg, "holonomy")
    tr = integrate_curve(p, x0)
    hr = admissible_spectrum(p, spec, tr)
    rec = {"period": tr.period,
           "phase_integral": _jsonable(hr.phase_integral),
           "offset": hr.offset, "step": hr.step,
           "monodromy_at_zero": _jsonable(hr.monodromy_at_zero),
           "quantization_residual": hr.quantization_residual,
           "sector_mismatch": hr.sector_mismatch,
           "sector_vs_scalar": hr.sector_vs_scalar,
           "monodromy_defect_at_zero": abs(hr.monodromy_at_zero + 1.0)}
    lam_rows = []
    if cfg.get("lambdas"):
        for lam in (float(v) for v in str(cfg["lambdas"]).split(",")):
            m = transport(p, spec, tr, lam)
            lam_rows.append((lam, m.real, m.imag, abs(m - 1.0)))
        _write_csv(d / "transport.csv",
                   ("lambda", "mono_re", "mono_im", "dist_to_1"), lam_rows)
    with open(d / "holonomy.json", "w") as fh:
        json.dump(rec, fh, indent=2)
    _write_manifest(d, cfg)
    ok = (hr.quantization_residual <= PASS_TOL["quantization"]
          and abs(hr.monodromy_at_zero + 1.0) <= PASS_TOL["monodromy"])
    print(json.dumps(rec))
    return 0 if ok else 1


def _cmd_spectrum_sweep(cfg) -> int:
    spec = _parse_potential(cfg.get("potential"))
    if spec is None:
        raise ValueError("spectrum-sweep needs --potential")
    n, L = (v for v in str(cfg.get("grid", "24,6")).split(","))
    gs = GridSpec(L=float(L), n=int(n), order=int(cfg.get("stencil", 4)),
                  coupling=str(cfg.get("coupling", "site")))
    ts = _parse_ts(str(cfg.get("ts", "0:20:1")))
    tol = float(cfg.get("tol", 1.0e-6))
    seed = int(cfg.get("seed", 0))
    d = _outdir(cfg, "spectrum-sweep")
    free = free_sigma_min(gs)
    floor = 0.5 * free
    sw = scaling_sweep(spec, ts, gs, rng_seed=seed, tol=tol)
    rows = [(f"{t:.6g}", f"{s:.8e}", s > floor)
            for t, s in zip(sw.ts, sw.sigma_mins)]
    _write_csv(d / "sweep.csv", ("t", "sigma_min", "above_floor"), rows)
    cfg2 = dict(cfg)
    cfg2.update({"sigma_free": free, "sigma_floor": floor,
                 "grid_h": gs.h, "dim": gs.dim})
    _write_manifest(d, cfg2)
    lo = float(sw.sigma_mins.min())
    print(f"free sigma = {free:.6f}, floor = {floor:.6f}, "
          f"min_t sigma = {lo:.6f} at t = {sw.ts[int(np.argmin(sw.sigma_mins))]:g}")
    return 0 if lo > floor else 1


def _cmd_control_losyau(cfg) -> int:
    n, L = (v for v in str(cfg.get("grid", "24,6")).split(","))
    gs = GridSpec(L=float(L), n=int(n), order=int(cfg.get("stencil", 4)))
    seed = int(cfg.get("seed", 0))
    npts = int(cfg.get("points", 1000))
    d = _outdir(cfg, "control-losyau")
    from .potentials import construct_losyau
    spec, mode = construct_losyau(n_points=npts, rng_seed=seed)

    from .spinops import apply_D
    from .spinors import losyau_psi
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(3, npts), scale=1.5)
    Dv = apply_D(spec, mode, pts)
    psi = np.stack([np.asarray(v) for v in losyau_psi([pts[0], pts[1], pts[2]])])
    cont = float((np.sqrt((np.abs(Dv) ** 2).sum(0))
                  / np.sqrt((np.abs(psi) ** 2).sum(0))).max())

    ns = [int(v) for v in str(cfg.get("ns", "16,24")).split(",")]
    rows = []
    for ni in ns:
        gi = GridSpec(L=gs.L, n=ni, order=gs.order)
        r = zeromode_residual_on_grid(spec, mode, gi)
        rows.append((ni, gi.h, r))
    s_min = sigma_min(assemble(gs, spec), rng_seed=seed,
                      tol=float(cfg.get("tol", 1.0e-6)))
    free = free_sigma_min(gs)
    _write_csv(d / "residuals.csv", ("n", "h", "grid_residual"),
               [(a, f"{b:.6g}", f"{c:.6e}") for a, b, c in rows])
    rec = {"continuum_residual": cont, "sigma_min": s_min,
           "sigma_free": free, "sigma_floor": 0.5 * free,
           "grid_residuals": [{"n": a, "h": b, "residual": c}
                              for a, b, c in rows]}
    with open(d / "control.json", "w") as fh:
        json.dump(rec, fh, indent=2)
    _write_manifest(d, cfg)
    decreasing = all(rows[i][2] > rows[i + 1][2] for i in range(len(rows) - 1))
    ok = cont <= 1.0e-10 and decreasing
    print(json.dumps(rec))
    return 0 if ok else 1


def _cmd_field_eval(cfg) -> int:
    p = _parse_ckf(cfg["ckf"]) if cfg.get("ckf") else None
    spec = _parse_potential(cfg.get("potential"))
    if p is None and spec is not None:
        p = parent_field(spec)
    if p is None:
        raise ValueError("field-eval needs --ckf or --potential")
    pts = [_parse_point(s) for s in str(cfg["at"]).split(";")]
    d = _outdir(cfg, "field-eval")
    with open(d / "values.jsonl", "w") as fh:
        for x in pts:
            X, w, divX, Y = frame_quantities(p, x)
            rec = {"x": x.tolist(), "X": [float(v) for v in X],
                   "w": float(w), "divX": float(divX),
                   "Y": [float(v) for v in Y]}
            if spec is not None:
                rec["A"] = _jsonable(eval_potential(spec, x))
                rec["B"] = _jsonable(eval_field(spec, x))
            fh.write(json.dumps(rec) + "\n")
            print(json.dumps(rec))
    _write_manifest(d, cfg)
    return 0


_SUBCOMMANDS = {
    "classify": (_cmd_classify, ("ckf",)),
    "verify-identities": (_cmd_verify_identities, ("ckf",)),
    "field-lines": (_cmd_field_lines, ("ckf", "seed_point")),
    "loop-integrals": (_cmd_loop_integrals, ("ckf", "seed_point")),
    "verify-operators": (_cmd_verify_operators, ("ckf",)),
    "holonomy": (_cmd_holonomy, ("ckf", "orbit_seed")),
    "spectrum-sweep": (_cmd_spectrum_sweep, ("potential",)),
    "control-losyau": (_cmd_control_losyau, ()),
    "field-eval": (_cmd_field_eval, ("at",)),
}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ckfield",
        description="Conformal-Killing-field magnetic toolkit: identity "
                    "verification, orbit holonomy, and zero-mode probes.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add(name, *flags):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with a full RunConfig; "
                                         "explicit flags override it")
        sp.add_argument("--outdir")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--seed", type=int)
        for f in flags:
            sp.add_argument(f)
        return sp

    add("classify", "--ckf")
    add("verify-identities", "--ckf", "--points")
    add("field-lines", "--ckf", "--seed-point", "--t-max", "--rk-tol",
        "--n-quad", "--max-rows")
    add("loop-integrals", "--ckf", "--seed-point", "--potential")
    add("verify-operators", "--ckf", "--potential", "--spinor", "--points",
        "--quadrature", "--box")
    add("holonomy", "--ckf", "--potential", "--orbit-seed", "--lambdas")
    add("spectrum-sweep", "--potential", "--grid", "--stencil", "--coupling",
        "--ts", "--tol")
    add("control-losyau", "--grid", "--stencil", "--ns", "--points", "--tol")
    add("field-eval", "--ckf", "--potential", "--at")
    return ap


def _resolve_config(args: argparse.Namespace) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg.update(json.load(fh))
    for k, v in vars(args).items():
        if k == "config" or v is None:
            continue
        cfg[k] = v
    cfg.setdefault("threads", os.cpu_count() or 1)
    cfg.setdefault("seed", 0)
    return cfg


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    fn, required = _SUBCOMMANDS[args.subcommand]
    try:
        cfg = _resolve_config(args)
        missing = [r for r in required if cfg.get(r) in (None, "")]
        if missing:
            print(f"error: missing required option(s): "
                  + ", ".join("--" + m.replace("_", "-") for m in missing),
                  file=sys.stderr)
            return 2
        return fn(cfg)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return 1
    except CkfieldError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
