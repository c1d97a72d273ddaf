"""Command-line front end.

Every verb takes one JSON config document (``--config``); unknown keys are
rejected. Outputs are written atomically into ``--out`` (or the config's
``out``). Exit status is 0 on success, otherwise the ``exit_code`` of the
error family raised (see ``istlab.errors``); ``compare`` exits with 7 when a
metric exceeds its tolerance.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import errors
from .fields import (Grid1D, SampledField, atomic_write_text, read_field_csv, read_field_json,
                     write_field_csv, write_field_json, field_norms)
from .fixtures import NAMES as FIXTURE_NAMES, REFERENCE_GRID, fixture

VERBS = ("scatter", "solve-ist", "solve-direct", "nsoliton", "compare", "plotdata")

_GRID_KEYS = {"x_min", "x_max", "n_points"}
_SCHEMAS = {
    "scatter": {"equation", "grid", "datum", "k", "out"},
    "solve-ist": {"equation", "grid", "datum", "times", "k", "refine", "tail_tol", "out"},
    "solve-direct": {"equation", "grid", "datum", "dt", "t_end", "n_snapshots", "dealias", "out"},
    "nsoliton": {"equation", "grid", "components", "times", "motion", "out"},
    "compare": {"a", "b", "tolerances", "out"},
    "plotdata": {"inputs", "out"},
}
_REQUIRED = {
    "scatter": {"equation", "datum"},
    "solve-ist": {"datum", "times"},
    "solve-direct": {"equation", "datum", "t_end"},
    "nsoliton": {"components", "times"},
    "compare": {"a", "b"},
    "plotdata": {"inputs"},
}
_TOLERANCE_KEYS = {"linf", "l2", "isospectral_drift", "mass_drift"}
_SERIES = ("field", "abs_rho", "trajectory", "kappa_spectrum")


class _Log:
    def __init__(self, quiet):
        self.quiet = quiet

    def __call__(self, *lines):
        if not self.quiet:
            for line in lines:
                print(line)


# -- config -----------------------------------------------------------------------

def _strict(doc, allowed, required, where):
    if not isinstance(doc, dict):
        raise errors.ConfigError("config must be a JSON object", where=where)
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise errors.ConfigError(f"unknown keys: {', '.join(unknown)}", where=where)
    missing = sorted(required - set(doc))
    if missing:
        raise errors.ConfigError(f"missing keys: {', '.join(missing)}", where=where)


def _grid(doc, where):
    if doc is None:
        return REFERENCE_GRID
    _strict(doc, _GRID_KEYS, _GRID_KEYS, where + ".grid")
    try:
        return Grid1D(doc["x_min"], doc["x_max"], doc["n_points"])
    except (TypeError, ValueError) as exc:
        raise errors.ConfigError(str(exc), where=where + ".grid") from exc


def _positive(doc, key, default, where, kind=float):
    v = doc.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
        raise errors.ConfigError(f"{key} must be a positive number, got {v!r}", where=where)
    if kind is int and int(v) != v:
        raise errors.ConfigError(f"{key} must be an integer, got {v!r}", where=where)
    return kind(v)


def _times(doc, where):
    ts = doc.get("times")
    if not isinstance(ts, list) or not ts:
        raise errors.ConfigError("times must be a non-empty list", where=where)
    if not all(isinstance(t, (int, float)) and not isinstance(t, bool) and math.isfinite(t) for t in ts):
        raise errors.ConfigError("times must be finite numbers", where=where)
    return [float(t) for t in ts]


def _resolve(path, base):
    return path if os.path.isabs(path) else os.path.normpath(os.path.join(base, path))


def _datum(spec, grid, base, where):
    """A fixture name, a CSV / JSON field file, or a soliton spec."""
    if isinstance(spec, str):
        spec = {"fixture": spec}
    if not isinstance(spec, dict) or len(spec) != 1:
        raise errors.ConfigError("datum must be {fixture|csv|json|solitons: ...}", where=where)
    (kind, value), = spec.items()
    if kind == "fixture":
        if value not in FIXTURE_NAMES:
            raise errors.ConfigError(f"unknown fixture {value!r}; one of {', '.join(FIXTURE_NAMES)}",
                                     where=where)
        return lambda: fixture(value, grid)
    if kind in ("csv", "json"):
        path = _resolve(value, base)
        if not os.path.isfile(path):
            raise errors.ConfigError(f"input file not found: {path}", where=where)
        return (lambda: read_field_csv(path)) if kind == "csv" else (lambda: read_field_json(path))
    if kind == "solitons":
        from .solitons import NSolitonSpec, kdv_nsoliton
        try:
            ns = NSolitonSpec.from_json(value)
        except (KeyError, TypeError, ValueError) as exc:
            raise errors.ConfigError(f"bad soliton spec: {exc}", where=where) from exc
        if ns.equation != "kdv":
            raise errors.ConfigError("only kdv soliton data can be used as a datum", where=where)
        return lambda: kdv_nsoliton(ns, grid, 0.0)
    raise errors.ConfigError(f"unknown datum kind {kind!r}", where=where)


def _prepare_out(path):
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise errors.ConfigError(f"output directory not writable: {path}", where="cli")
    return path


def _write_json(path, doc):
    atomic_write_text(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _tag(t):
    return f"{t:+.6f}".replace("+", "p").replace("-", "m").replace(".", "_")


def _write_series(out, prefix, series, extra_manifest):
    """Snapshots ``[(t, field)]`` as per-time JSON + CSV plus a manifest."""
    snaps = []
    for t, f in series:
        name = f"{prefix}_t{_tag(t)}"
        write_field_json(f, os.path.join(out, name + ".json"))
        write_field_csv(f, os.path.join(out, name + ".csv"))
        mass = float(np.sum(np.real(f.values)) * f.grid.dx)
        snaps.append({"t": t, "file": name + ".json", "mass_re": mass, "l2_sq": field_norms(f)[1] ** 2})
    manifest = dict(extra_manifest)
    manifest["snapshots"] = snaps
    _write_json(os.path.join(out, "manifest.json"), manifest)


# -- verbs --------------------------------------------------------------------------

def cmd_scatter(cfg, out, base, log):
    from .schrodinger import scatter, symmetric_k_grid, write_data_json, write_data_csv
    from .zs import zs_scatter, write_zs_json
    where = "cli.scatter"
    eq = cfg["equation"]
    if eq not in ("schrodinger", "zs_focusing", "zs_mkdv"):
        raise errors.ConfigError(f"equation must be schrodinger, zs_focusing or zs_mkdv, got {eq!r}", where=where)
    grid = _grid(cfg.get("grid"), where)
    load = _datum(cfg["datum"], grid, base, where)
    kcfg = cfg.get("k", {})
    _strict(kcfg, {"dk", "k_max"}, set(), where + ".k")
    dk = _positive(kcfg, "dk", 0.05, where)
    k_max = _positive(kcfg, "k_max", 8.0, where)
    _prepare_out(out)
    u = load()
    k = symmetric_k_grid(dk, k_max)
    if eq == "schrodinger":
        if u.kind != "real":
            raise errors.ConfigError("the Schrodinger problem needs a real potential", where=where)
        data = scatter(u, k)
        write_data_json(data, os.path.join(out, "scattering.json"))
        write_data_csv(data, os.path.join(out, "scattering.csv"), os.path.join(out, "bound_states.csv"))
        summary = {"equation": eq, "N": int(data.n_bound), "kappas": data.kappas.tolist(),
                   "norming": data.norming.tolist(), "max_abs_rho": float(np.max(np.abs(data.rho)))}
        lines = [f"bound states N = {data.n_bound}"]
        lines += [f"  kappa_{j + 1} = {kap:.10g}  C_{j + 1} = {c:.10g}"
                  for j, (kap, c) in enumerate(zip(data.kappas, data.norming))]
    else:
        red = "focusing_nls" if eq == "zs_focusing" else "mkdv_real"
        q = u if u.kind == "complex" or red == "mkdv_real" else u.with_values(u.values, "complex")
        data = zs_scatter(q, red, k / 2)
        write_zs_json(data, os.path.join(out, "scattering.json"))
        summary = {"equation": eq, "N": int(data.eigenvalues.size),
                   "eigenvalues": [[z.real, z.imag] for z in data.eigenvalues],
                   "max_abs_b": float(np.max(np.abs(data.b)))}
        lines = [f"eigenvalues N = {data.eigenvalues.size}"]
        lines += [f"  zeta_{j + 1} = {z.real:.10g} {z.imag:+.10g}i" for j, z in enumerate(data.eigenvalues)]
    mx = summary.get("max_abs_rho", summary.get("max_abs_b"))
    lines.append(f"max |{'rho' if eq == 'schrodinger' else 'b'}| = {mx:.3e}"
                 + ("  (reflectionless)" if mx < 1e-5 else ""))
    _write_json(os.path.join(out, "summary.json"), summary)
    atomic_write_text(os.path.join(out, "summary.txt"), "\n".join(lines) + "\n")
    log(*lines)
    return 0


def cmd_solve_ist(cfg, out, base, log):
    from .glm import solve_ist
    where = "cli.solve-ist"
    if cfg.get("equation", "kdv") != "kdv":
        raise errors.ConfigError("solve-ist supports equation 'kdv' only", where=where)
    grid = _grid(cfg.get("grid"), where)
    load = _datum(cfg["datum"], grid, base, where)
    times = _times(cfg, where)
    kcfg = cfg.get("k", {})
    _strict(kcfg, {"dk", "k_max"}, set(), where + ".k")
    dk = _positive(kcfg, "dk", 0.05, where)
    k_max = _positive(kcfg, "k_max", 8.0, where)
    refine = _positive(cfg, "refine", 1, where, int)
    tail_tol = _positive(cfg, "tail_tol", 1e-10, where)
    _prepare_out(out)
    u0 = load()
    series = solve_ist(u0, times, dk=dk, k_max=k_max, refine=refine, tail_tol=tail_tol)
    _write_series(out, "ist", series, {"equation": "kdv", "origin": "solve-ist", "grid": grid.to_dict()})
    for t, f in series:
        log(f"t = {t:g}: max u = {f.values.max():.6g}, dk = {f.meta['dk']:g}, z_max = {f.meta['z_max']:.3g}")
    return 0


def cmd_solve_direct(cfg, out, base, log):
    from . import oracles
    where = "cli.solve-direct"
    eq = cfg["equation"]
    runners = {"kdv": oracles.integrate_kdv, "mkdv": oracles.integrate_mkdv, "airy": oracles.integrate_airy,
               "nls": lambda q, c: oracles.integrate_nls(q, "focusing", c),
               "nls_defocusing": lambda q, c: oracles.integrate_nls(q, "defocusing", c)}
    if eq not in runners:
        raise errors.ConfigError(f"equation must be one of {', '.join(runners)}", where=where)
    grid = _grid(cfg.get("grid"), where)
    load = _datum(cfg["datum"], grid, base, where)
    t_end = cfg["t_end"]
    if isinstance(t_end, bool) or not isinstance(t_end, (int, float)) or t_end < 0:
        raise errors.ConfigError("t_end must be a non-negative number", where=where)
    limit = 0.5 * grid.dx**2 if eq.startswith("nls") else 0.4 * grid.dx**3
    dt = _positive(cfg, "dt", limit, where)
    n_snap = _positive(cfg, "n_snapshots", 10, where, int)
    every = 1
    if t_end > 0:
        # equally spaced snapshots: the step count is a multiple of n_snapshots
        every = math.ceil(t_end / dt / n_snap - 1e-9)
        dt = t_end / (every * n_snap)
    dealias = cfg.get("dealias", True)
    if not isinstance(dealias, bool):
        raise errors.ConfigError("dealias must be true or false", where=where)
    icfg = oracles.IntegratorConfig(dt=dt, t_end=float(t_end), dealias=dealias, snapshot_every=every)
    _prepare_out(out)
    u0 = load()
    if eq.startswith("nls") and u0.kind == "real":
        u0 = u0.with_values(u0.values, "complex")
    traj = runners[eq](u0, icfg)
    _write_series(out, "direct", traj, {"equation": eq, "origin": "solve-direct",
                                        "grid": grid.to_dict(),
                                        "config": {"dt": dt, "t_end": float(t_end), "dealias": dealias,
                                                   "snapshot_every": every}})
    log(f"{eq}: {len(traj)} snapshots, t_end = {t_end:g}, dt = {dt:.3e}")
    return 0


def cmd_nsoliton(cfg, out, base, log):
    from .fields import SolitonParams
    from .solitons import NSolitonSpec, kdv_nsoliton, nls_soliton, linear_motion
    where = "cli.nsoliton"
    grid = _grid(cfg.get("grid"), where)
    times = _times(cfg, where)
    try:
        spec = NSolitonSpec.from_json({"components": cfg["components"],
                                      "equation": cfg.get("equation", "kdv")})
    except (KeyError, TypeError) as exc:
        raise errors.ConfigError(f"bad components: {exc}", where=where) from exc
    _prepare_out(out)
    if spec.equation == "kdv":
        if "motion" in cfg:
            raise errors.ConfigError("motion applies to nls_focusing only", where=where)
        series = [(t, kdv_nsoliton(spec, grid, t)) for t in times]
    else:
        if len(spec.components) != 1:
            raise errors.ConfigError("nls_focusing generator takes exactly one component", where=where)
        mot = cfg.get("motion", {})
        _strict(mot, {"velocity", "frequency"}, {"velocity", "frequency"}, where + ".motion")
        p = spec.components[0]
        motion = linear_motion(p, float(mot["velocity"]), float(mot["frequency"]))
        series = [(t, nls_soliton(p, grid, t, motion)) for t in times]
    _write_series(out, "nsoliton", series, {"equation": spec.equation, "origin": "nsoliton",
                                            "grid": grid.to_dict(), "spec": spec.to_json()})
    log(f"{spec.equation}: {len(spec.components)} component(s), {len(times)} time(s)")
    return 0


def _load_series(path, where):
    if not os.path.isfile(os.path.join(path, "manifest.json")):
        raise errors.ConfigError(f"no manifest.json in {path}", where=where)
    with open(os.path.join(path, "manifest.json")) as fh:
        man = json.load(fh)
    return [(s["t"], read_field_json(os.path.join(path, s["file"]))) for s in man["snapshots"]], man


def cmd_compare(cfg, out, base, log):
    from .schrodinger import bound_states
    where = "cli.compare"
    tol = cfg.get("tolerances", {})
    _strict(tol, _TOLERANCE_KEYS, set(), where + ".tolerances")
    limits = {"linf": 1e-2, "l2": 1e-2, "isospectral_drift": 1e-4, "mass_drift": 1e-6}
    for key in tol:
        limits[key] = _positive(tol, key, None, where)
    pa, pb = _resolve(cfg["a"], base), _resolve(cfg["b"], base)
    _prepare_out(out)
    sa, ma = _load_series(pa, where)
    sb, mb = _load_series(pb, where)
    if len(sa) != len(sb):
        raise errors.IncompatibleError(f"snapshot counts differ ({len(sa)} vs {len(sb)})", where=where)
    real = all(f.kind == "real" for _, f in sa + sb)
    rows = []
    for (ta, fa), (tb, fb) in zip(sa, sb):
        if fa.grid != fb.grid:
            raise errors.IncompatibleError(f"grids differ at t = {ta}: {fa.grid} vs {fb.grid}", where=where)
        if abs(ta - tb) > 1e-9 * max(1.0, abs(ta)):
            raise errors.IncompatibleError(f"time stamps differ: {ta} vs {tb}", where=where)
        d = np.asarray(fa.values) - np.asarray(fb.values)
        nb = math.sqrt(float(np.sum(np.abs(fb.values) ** 2)))
        l2 = math.sqrt(float(np.sum(np.abs(d) ** 2)))
        rows.append({"t": ta, "linf": float(np.max(np.abs(d))), "l2": l2 / nb if nb > 0 else l2})

    def drift(series):
        if not real:
            return None
        kap = [bound_states(f)[0] for _, f in series]
        if any(k.size != kap[0].size for k in kap):
            return math.inf
        return max((float(np.max(np.abs(k - kap[0]))) for k in kap if k.size), default=0.0)

    def mass_drift(series):
        m = [float(np.sum(np.real(f.values)) * f.grid.dx) for _, f in series]
        return max(abs(v - m[0]) for v in m)

    report = {"a": pa, "b": pb, "per_time": rows, "tolerances": limits,
              "isospectral_drift": {"a": drift(sa), "b": drift(sb)},
              "mass_drift": {"a": mass_drift(sa), "b": mass_drift(sb)}}
    flags = []
    if any(r["linf"] > limits["linf"] for r in rows):
        flags.append("linf")
    if any(r["l2"] > limits["l2"] for r in rows):
        flags.append("l2")
    if any(v is not None and v > limits["isospectral_drift"] for v in report["isospectral_drift"].values()):
        flags.append("isospectral_drift")
    if any(v > limits["mass_drift"] for v in report["mass_drift"].values()):
        flags.append("mass_drift")
    report["flags"] = flags
    report["passed"] = not flags
    _write_json(os.path.join(out, "report.json"), _jsonable(report))
    lines = [f"t = {r['t']:g}: linf = {r['linf']:.3e}, l2 = {r['l2']:.3e}" for r in rows]
    iso = report["isospectral_drift"]
    lines.append(f"isospectral drift: a = {iso['a']}, b = {iso['b']}")
    lines.append(f"mass drift: a = {report['mass_drift']['a']:.3e}, b = {report['mass_drift']['b']:.3e}")
    lines.append("PASS" if not flags else "FAIL: " + ", ".join(flags))
    atomic_write_text(os.path.join(out, "report.txt"), "\n".join(lines) + "\n")
    log(*lines)
    return 0 if not flags else errors.EXIT_TOLERANCE


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_jsonable(v) for v in obj]
    return obj


def cmd_plotdata(cfg, out, base, log):
    from .schrodinger import read_data_json, bound_states
    where = "cli.plotdata"
    inputs = cfg["inputs"]
    if not isinstance(inputs, list) or not inputs:
        raise errors.ConfigError("inputs must be a non-empty list", where=where)
    jobs = []
    for i, item in enumerate(inputs):
        _strict(item, {"path", "series", "label"}, {"path", "series"}, f"{where}.inputs[{i}]")
        if item["series"] not in _SERIES:
            raise errors.ConfigError(f"unknown series {item['series']!r}; one of {', '.join(_SERIES)}",
                                     where=where)
        path = _resolve(item["path"], base)
        if not os.path.exists(path):
            raise errors.ConfigError(f"input not found: {path}", where=where)
        jobs.append((item["series"], path, item.get("label")))
    _prepare_out(out)
    rows = ["series,label,x,re,im"]
    for series, path, label in jobs:
        if series == "field":
            f = read_field_json(path) if path.endswith(".json") else read_field_csv(path)
            lab = label or os.path.basename(path)
            v = np.asarray(f.values, complex)
            rows += [f"field,{lab},{x!r},{z.real!r},{z.imag!r}" for x, z in zip(f.x.tolist(), v.tolist())]
        elif series == "abs_rho":
            d = read_data_json(path)
            lab = label or "abs_rho"
            order = np.argsort(d.k)
            rows += [f"abs_rho,{lab},{k!r},{r!r},0.0" for k, r in
                     zip(d.k[order].tolist(), np.abs(d.rho[order]).tolist())]
        else:
            traj, _ = _load_series(path, where)
            for t, f in traj:
                if series == "trajectory":
                    v = np.asarray(f.values, complex)
                    lab = f"t={t:.6g}"
                    rows += [f"trajectory,{lab},{x!r},{z.real!r},{z.imag!r}"
                             for x, z in zip(f.x.tolist(), v.tolist())]
                else:
                    kap, _ = bound_states(f)
                    rows += [f"kappa_spectrum,kappa_{j + 1},{t!r},{k!r},0.0" for j, k in enumerate(kap.tolist())]
    atomic_write_text(os.path.join(out, "plotdata.csv"), "\n".join(rows) + "\n")
    log(f"wrote {len(rows) - 1} rows")
    return 0


_COMMANDS = {"scatter": cmd_scatter, "solve-ist": cmd_solve_ist, "solve-direct": cmd_solve_direct,
             "nsoliton": cmd_nsoliton, "compare": cmd_compare, "plotdata": cmd_plotdata}


def build_parser():
    p = argparse.ArgumentParser(prog="istlab", description="Inverse scattering laboratory")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        s = sub.add_parser(verb)
        s.add_argument("--config", required=True, help="JSON config document")
        s.add_argument("--out", help="output directory (overrides the config's 'out')")
        s.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    verb = args.verb
    try:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise errors.ConfigError(f"cannot read config: {exc}", where="cli") from exc
        except json.JSONDecodeError as exc:
            raise errors.ConfigError(f"config is not valid JSON: {exc}", where="cli") from exc
        _strict(cfg, _SCHEMAS[verb], _REQUIRED[verb], f"cli.{verb}")
        base = os.path.dirname(os.path.abspath(args.config))
        out = args.out or cfg.get("out")
        if not out:
            raise errors.ConfigError("no output directory (use --out or 'out')", where=f"cli.{verb}")
        out = _resolve(out, os.getcwd() if args.out else base)
        return _COMMANDS[verb](cfg, out, base, _Log(args.quiet))
    except errors.IstError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (KeyError, ValueError) as exc:
        print(f"error: cli.{verb}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
