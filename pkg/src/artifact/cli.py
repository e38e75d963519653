"""Command-line entry point.

    artifact simulate|spectral|predict|verify|bivariate --config FILE --out DIR [--seed N]

Exit codes: 0 success, 2 invalid configuration or input, 3 not representable,
4 too few exceedances for a Monte Carlo estimate.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from .bivariate import (
    UnsupportedConditioning,
    bivar_generic,
    bivar_tail,
    classify_conditioning,
    gamma4_cylinder,
    gamma4_sphere,
)
from .config import Config, load_config
from .model import TruncationError, simulate
from .montecarlo import (
    TailExperiment,
    TooFewExceedances,
    draw_sample,
    empirical_frequencies,
    empirical_scaling,
    nearest_atom,
    observed_tube,
)
from .seminorm import KernelVector
from .spectral import (
    NotRepresentable,
    cylinder_spectral_measure,
    euclidean_spectral_measure,
    is_past_representable,
    to_cylinder,
)
from .tailcond import ZeroConditioningMass, predict

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_REPRESENTABLE = 3
EXIT_TOO_FEW = 4


# ---------------------------------------------------------------- output helpers


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) for v in r])


def _clean(obj):
    """Make a structure JSON-safe: inf/nan become strings, numpy scalars become floats."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), sort_keys=True, indent=1) + "\n")


def _write_measure(out: Path, stem: str, measure) -> None:
    write_json(out / f"{stem}.json", measure.to_dict())
    header, rows = measure.csv_rows()
    with (out / f"{stem}.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------- commands


def cmd_simulate(cfg: Config, out: Path, seed=None) -> int:
    cfg.require("model", "simulate")
    agg = cfg.model.to_aggregate()
    run = cfg.simulate
    seed = run.seed if seed is None else seed
    res = simulate(agg, run.T, cfg.truncation.to_policy(), seed, return_components=run.components)
    header = ["t", "x"]
    if run.components:
        x, parts = res
        header += [f"x_{j}" for j in range(1, agg.J + 1)]
        rows = [[t, x[t], *parts[:, t]] for t in range(run.T)]
    else:
        rows = [[t, v] for t, v in enumerate(res)]
    write_csv(out / "series.csv", header, rows)
    write_json(out / "run.json", {"command": "simulate", "seed": seed, "T": run.T, "model": agg.to_dict()})
    return EXIT_OK


def cmd_spectral(cfg: Config, out: Path, seed=None) -> int:
    cfg.require("model", "seminorm")
    agg = cfg.model.to_aggregate()
    sn = cfg.seminorm.to_seminorm()
    trunc = cfg.truncation.to_policy()
    verdict = is_past_representable(agg, sn.m, sn.h)
    sphere = euclidean_spectral_measure(agg, sn.m, sn.h, trunc)
    _write_measure(out, "sphere", sphere)
    report = {"verdict": verdict.to_dict(), "seminorm": sn.to_dict(), "n_atoms_sphere": sphere.n_atoms,
              "omitted_mass": sphere.omitted_mass,
              "components": [{"j": j, "kind": c.seq.kind, "m0": v}
                             for j, (c, v) in enumerate(zip(agg.components, verdict.m0), start=1)]}
    if verdict:
        cyl = to_cylinder(sphere, sn)
        _write_measure(out, "cylinder", cyl)
        report["n_atoms_cylinder"] = cyl.n_atoms
        report["total_mass_cylinder"] = cyl.total_mass()
    write_json(out / "verdict.json", report)
    if not verdict:
        raise NotRepresentable(verdict.reason)
    return EXIT_OK


def _observed_windows(cfg: Config, observed_path, config_dir: Path):
    pc = cfg.predict
    if observed_path is not None:
        src = Path(observed_path)
    elif pc is not None and pc.observed_csv is not None:
        src = Path(pc.observed_csv)
        if not src.is_absolute():
            src = config_dir / src
    elif pc is not None and pc.observed is not None:
        return np.asarray(pc.observed, dtype=float)
    else:
        raise ValueError("no observed windows: give predict.observed, predict.observed_csv or --observed")
    data = np.loadtxt(src, delimiter=",", ndmin=2, comments="#")
    return data


def cmd_predict(cfg: Config, out: Path, seed=None, observed=None, config_dir: Path = Path(".")) -> int:
    cfg.require("model", "seminorm")
    agg = cfg.model.to_aggregate()
    sn = cfg.seminorm.to_seminorm()
    tol = cfg.predict.tol if cfg.predict is not None else 1e-6
    windows = _observed_windows(cfg, observed, config_dir)
    if windows.shape[1] != sn.m + 1:
        raise ValueError(f"observed windows must have m + 1 = {sn.m + 1} columns, got {windows.shape[1]}")
    measure = cylinder_spectral_measure(agg, sn, cfg.truncation.to_policy())
    results, rows = [], []
    for i, w in enumerate(windows):
        try:
            dist = predict(agg, sn, w, tol, measure=measure)
        except (ZeroConditioningMass, KernelVector) as exc:
            results.append({"window": i, "observed": [float(v) for v in w], "error": str(exc)})
            continue
        results.append({"window": i, **dist.to_dict()})
        _, body = dist.csv_rows()
        rows.extend([[i, *r] for r in body])
    header = ["window", "theta", "j", "k", "probability"] + [f"future_{i}" for i in range(1, sn.h + 1)]
    write_json(out / "predictions.json", {"seminorm": sn.to_dict(), "tol": tol, "predictions": results})
    with (out / "predictions.csv").open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows([[str(r[0]), *r[1:]] for r in rows])
    return EXIT_OK


def cmd_verify(cfg: Config, out: Path, seed=None) -> int:
    cfg.require("model", "seminorm", "verify")
    agg = cfg.model.to_aggregate()
    sn = cfg.seminorm.to_seminorm()
    vc = cfg.verify
    seed = vc.seed if seed is None else seed
    trunc = cfg.truncation.to_policy()
    measure = cylinder_spectral_measure(agg, sn, trunc)
    hit = np.flatnonzero((measure.labels[:, 0] == vc.theta0) & (measure.labels[:, 1] == vc.j0)
                         & (measure.labels[:, 2] == vc.k0))
    if hit.size == 0:
        raise ValueError(f"no atom with label (theta, j, k) = ({vc.theta0}, {vc.j0}, {vc.k0})")
    center = measure.points[hit[0]]
    obs = center[: sn.m + 1]
    theory = predict(agg, sn, obs, tol=1e-9, measure=measure)
    classes = nearest_atom(measure.points)
    index = {tuple(int(v) for v in measure.labels[i]): i for i in range(measure.n_atoms)}
    patterns = {a.key: classes[index[a.key]] for a, _ in theory.entries}
    exp = TailExperiment(agg, sn, A=next(iter(patterns.values())), B=observed_tube(obs, vc.tube), N=vc.N,
                         q=vc.quantile, n_blocks=vc.n_blocks, trunc=trunc)
    sample = draw_sample(agg, sn, vc.N, seed, trunc)
    est = empirical_frequencies(exp, patterns, seed, sample=sample)
    rows, entries = [], []
    for a, p in theory.entries:
        e = est[a.key]
        ok = e.within(p, 3.0)
        rows.append([a.theta, a.j, a.k, p, e.estimate, e.std_error, e.z_score(p), ok])
        entries.append({"theta": a.theta, "j": a.j, "k": a.k, "theory": p, **e.to_dict(),
                        "z": e.z_score(p), "within_3se": ok})
    write_csv(out / "report.csv", ["theta", "j", "k", "theory", "estimate", "std_error", "z", "within_3se"], rows)
    xs = [float(np.quantile(sample.norms, q)) for q in vc.scaling_quantiles]
    curve = empirical_scaling(agg, sn, xs, vc.N, seed, n_blocks=vc.n_blocks, trunc=trunc, sample=sample)
    write_csv(out / "scaling.csv", ["x", "estimate", "lo", "hi", "theory"], curve.rows())
    write_json(out / "report.json", {
        "seed": seed, "N": vc.N, "quantile": vc.quantile, "tube": vc.tube,
        "case": [vc.theta0, vc.j0, vc.k0], "entries": entries,
        "all_within_3se": all(e["within_3se"] for e in entries),
        "scaling": {"x": curve.x.tolist(), "estimate": curve.estimate.tolist(),
                    "std_error": curve.std_error.tolist(), "theory": curve.theory},
    })
    return EXIT_OK


def cmd_bivariate(cfg: Config, out: Path, seed=None) -> int:
    cfg.require("bivariate")
    bc = cfg.bivariate
    model = bc.to_model()
    sphere = gamma4_sphere(model).combined()
    _write_measure(out, "gamma4_sphere", sphere)
    cyl = gamma4_cylinder(model)
    _write_measure(out, "gamma4_cylinder", cyl.combined())
    v0 = bc.v0.to_arc()
    case, theta = classify_conditioning(v0)
    queries = []
    for qi, q in enumerate(bc.queries):
        region = q.to_region()
        queries.append({"name": q.name or f"query_{qi}", "theta": q.theta, "eta": q.eta, "P": q.P,
                        "limit": bivar_tail(model, v0, region), "mass_ratio": bivar_generic(model, v0, region)})
    result = {"model": model.to_dict(), "sigma_alpha": list(model.sigma_alpha),
              "v0": bc.v0.model_dump(), "case": case, "case_theta": theta, "queries": queries}
    if bc.mc is not None and queries:
        mc = bc.mc
        seed = mc.seed if seed is None else seed
        B = lambda z: v0.contains(z[:, :2])
        pats = {i: (lambda z, r=q.to_region(): r.mask(model, z)) for i, q in enumerate(bc.queries)}
        exp = TailExperiment(model, None, A=pats[0], B=B, N=mc.N, q=mc.quantile, n_blocks=mc.n_blocks)
        est = empirical_frequencies(exp, pats, seed)
        for i, qd in enumerate(queries):
            e = est[i]
            qd["mc"] = {**e.to_dict(), "z": e.z_score(qd["limit"]), "within_3se": e.within(qd["limit"])}
        result["mc_seed"] = seed
    write_json(out / "bivariate.json", result)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "spectral": cmd_spectral,
    "predict": cmd_predict,
    "verify": cmd_verify,
    "bivariate": cmd_bivariate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="artifact", description="Tail patterns of stable moving averages.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON configuration file")
        s.add_argument("--out", required=True, help="output directory")
        s.add_argument("--seed", type=int, default=None, help="override the seed in the config")
        if name == "predict":
            s.add_argument("--observed", default=None, help="CSV of observed windows, one per row")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        cfg = load_config(args.config)
        out.mkdir(parents=True, exist_ok=True)
        fn = COMMANDS[args.command]
        if args.command == "predict":
            return fn(cfg, out, args.seed, observed=args.observed, config_dir=Path(args.config).parent)
        return fn(cfg, out, args.seed)
    except ValidationError as exc:
        print(f"invalid configuration:\n{exc}", file=sys.stderr)
        return EXIT_INVALID
    except NotRepresentable as exc:
        print(f"not representable: {exc}", file=sys.stderr)
        return EXIT_NOT_REPRESENTABLE
    except TooFewExceedances as exc:
        print(f"too few exceedances: {exc}", file=sys.stderr)
        return EXIT_TOO_FEW
    except (ValueError, TruncationError, UnsupportedConditioning, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
