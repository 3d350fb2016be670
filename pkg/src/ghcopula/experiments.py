"""
Experiment runners behind the ``ghx`` commands.

Every runner takes a validated config dict, a master seed, an output directory
and a worker count, writes its CSV files and returns a JSON-ready summary.
Random streams are spawned per task from the master seed, and results are
gathered in task order, so the CSV bytes do not depend on ``threads``.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from ._parallel import ordered_map
from .copula import (
    N_PARAMS, CopulaDataset, CopulaParams, FitOptions, copula_sample, fit_mle,
    spearman_matrix, stationary_bootstrap,
)
from .data import read_observations, read_sites, rank_transform, write_sites
from .errors import ConfigError, DataError, DomainError, GhCopulaError, ModelError
from .gh import Subclass
from .spatial import SiteSet, corr
from .taildep import (
    chi_eta_empirical, eta_gh, eta_inverted_br, sample_summaries, simulate_inverted_br,
)

PARAM_COLUMNS = ("lam", "kappa", "psi", "gamma_c", "df", "zeta", "nu")
DEFAULT_MODELS = ("gaussian", "student_t", "hyperbolic", "nig", "full_gh")


# ------------------------------------------------------------------ config


def _require(cfg, key):
    if key not in cfg:
        raise ConfigError(f"missing config key {key!r}")
    return cfg[key]


def _number(cfg, key, default=None, kind=float, lo=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return default
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key!r} must be a number")
    if kind is int and v != int(v):
        raise ConfigError(f"{key!r} must be an integer")
    v = kind(v)
    if lo is not None and v < lo:
        raise ConfigError(f"{key!r} must be >= {lo}")
    return v


def resolve_paths(cfg, base):
    """Copy of ``cfg`` with file references made absolute relative to ``base``."""
    out = json.loads(json.dumps(cfg))
    base = Path(base)

    def fix(d, key):
        if isinstance(d, dict) and isinstance(d.get(key), str):
            d[key] = str((base / d[key]).resolve())

    fix(out, "observations")
    fix(out, "fit")
    fix(out.get("sites"), "file")
    return out


def build_sites(cfg):
    spec = cfg.get("sites", {"grid_size": 5})
    if not isinstance(spec, dict):
        raise ConfigError("'sites' must be an object")
    if "file" in spec:
        return read_sites(spec["file"])
    if "grid" in spec:
        return SiteSet.grid(spec["grid"])
    if "grid_size" in spec:
        k = _number(spec, "grid_size", kind=int, lo=2)
        return SiteSet.grid(np.linspace(0.0, 1.0, k))
    if "coords" in spec:
        return SiteSet(np.asarray(spec["coords"], dtype=float), spec.get("ids"))
    raise ConfigError("'sites' needs one of file, grid, grid_size, coords")


def build_params(spec, d=2):
    """
    ``CopulaParams`` from a config object (``df`` for the t subclass); ``d``
    fixes the hyperbolic shape ``(d + 1) / 2``.
    """
    if not isinstance(spec, dict):
        raise ConfigError("model parameters must be an object")
    try:
        sub = Subclass.parse(spec.get("subclass", "full_gh"))
        zeta, nu = _number(spec, "zeta"), _number(spec, "nu")
        if sub is Subclass.GAUSSIAN:
            return CopulaParams.gaussian(zeta, nu)
        if sub is Subclass.STUDENT_T:
            return CopulaParams.student_t(_number(spec, "df"), zeta, nu)
        if sub is Subclass.CAUCHY:
            return CopulaParams(-0.5, 1.0, 0.0, 0.0, zeta, nu, sub)
        lam = Subclass.fixed(sub, d).get("lam")
        vals = {k: _number(spec, k) for k in ("kappa", "psi", "gamma_c")}
        lam = _number(spec, "lam") if lam is None else lam
        return CopulaParams(lam, zeta=zeta, nu=nu, subclass=sub, **vals)
    except (DomainError, ModelError) as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from None


def build_options(cfg):
    spec = cfg.get("optimizer", {})
    if not isinstance(spec, dict):
        raise ConfigError("'optimizer' must be an object")
    known = FitOptions.__dataclass_fields__
    unknown = set(spec) - set(known)
    if unknown:
        raise ConfigError(f"unknown optimizer settings {sorted(unknown)}")
    return FitOptions(**spec)


def load_dataset(cfg):
    sites = build_sites(cfg)
    obs = _require(cfg, "observations")
    missing = cfg.get("missing", "")
    if not isinstance(missing, str):
        raise ConfigError("'missing' must be a string")
    raw = read_observations(obs, sites, missing)
    if cfg.get("max_missing") is not None:
        raw = raw.drop_sparse(_number(cfg, "max_missing", kind=int, lo=0))
    return rank_transform(raw)


def _subclasses(cfg, key, default):
    names = cfg.get(key, list(default))
    if not isinstance(names, list) or not names:
        raise ConfigError(f"{key!r} must be a non-empty list")
    try:
        return [Subclass.parse(n) for n in names]
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


# ----------------------------------------------------------------- output


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_table(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _param_values(p):
    if p is None:
        return [None] * len(PARAM_COLUMNS)
    df = -2 * p.lam if p.subclass in (Subclass.STUDENT_T, Subclass.CAUCHY) else None
    vals = {"lam": p.lam, "kappa": p.kappa, "psi": p.psi, "gamma_c": p.gamma_c,
            "df": df, "zeta": p.zeta, "nu": p.nu}
    return [vals[k] for k in PARAM_COLUMNS]


def _spawn(seed, n):
    return np.random.SeedSequence(seed).spawn(n)


# ---------------------------------------------------------------- runners


def run_simulate(cfg, seed, out, threads=1):
    """Simulate pseudo-uniform observations (GH-family copula or inverted BR)."""
    sites = build_sites(cfg)
    n = _number(cfg, "n", kind=int, lo=2)
    process = cfg.get("process", "gh_copula")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if process == "gh_copula":
        p = build_params(_require(cfg, "model"), len(sites))
        u = copula_sample(p, sites, n, rng)
        truth = p.as_dict()
    elif process == "inverted_br":
        zeta_br = _number(cfg, "zeta_br", 0.3)
        u = simulate_inverted_br(sites, zeta_br, n, rng)
        truth = {"zeta_br": zeta_br}
    else:
        raise ConfigError(f"unknown process {process!r}")
    write_sites(out / "sites.csv", sites)
    write_table(out / "observations.csv", sites.ids, u)
    return {"process": process, "truth": truth, "n": n, "d": len(sites),
            "outputs": ["sites.csv", "observations.csv"]}


def _fit_task(task):
    data, sub, init, opts = task
    try:
        return fit_mle(data, sub, init=init, opts=opts)
    except GhCopulaError as exc:
        return exc


def _nested_init(fits):
    """Best nested GH-family fit, used to start the full GH search."""
    cands = [f for s, f in fits.items()
             if s in (Subclass.NIG, Subclass.HYPERBOLIC) and not isinstance(f, Exception)]
    if not cands:
        return None
    return max(cands, key=lambda f: f.loglik).params


def fit_models(data, subclasses, opts, threads=1):
    """
    Fit several subclasses; the full GH search starts from the best nested
    fit (NIG or hyperbolic) when one is available, so its likelihood is never
    below that of the nested models.
    """
    first = [s for s in subclasses if s is not Subclass.FULL_GH]
    results = ordered_map(_fit_task, [(data, s, None, opts) for s in first], threads)
    fits = dict(zip(first, results))
    if Subclass.FULL_GH in subclasses:
        fits[Subclass.FULL_GH] = _fit_task(
            (data, Subclass.FULL_GH, _nested_init(fits), opts)
        )
    return {s: fits[s] for s in subclasses}


def run_fit(cfg, seed, out, threads=1):
    """Fit the requested subclasses and write the AIC ranking table."""
    data = load_dataset(cfg)
    subs = _subclasses(cfg, "subclasses", DEFAULT_MODELS)
    opts = build_options(cfg)
    fits = fit_models(data, subs, opts, threads)
    ok = sorted((f for f in fits.values() if not isinstance(f, Exception)),
                key=lambda f: (f.aic, N_PARAMS[f.subclass]))
    if not ok:
        first = next(iter(fits.values()))
        raise first
    best = ok[0].aic
    rows = []
    for rank, f in enumerate(ok, start=1):
        rows.append([rank, f.subclass.value, N_PARAMS[f.subclass], f.loglik, f.aic,
                     f.aic - best, f.converged, f.iterations, *_param_values(f.params)])
    header = ["rank", "subclass", "n_params", "loglik", "aic", "delta_aic", "converged",
              "iterations", *PARAM_COLUMNS]
    write_table(out / "fits.csv", header, rows)
    failures = {s.value: str(f) for s, f in fits.items() if isinstance(f, Exception)}
    fit_doc = {"n": data.n, "d": data.d, "site_ids": list(data.sites.ids),
               "fits": [f.as_dict() for f in ok], "failures": failures}
    (out / "fit.json").write_text(json.dumps(fit_doc, indent=2, sort_keys=True) + "\n")
    return {"n": data.n, "d": data.d, "best": ok[0].subclass.value,
            "failures": failures, "outputs": ["fits.csv", "fit.json"]}


def _model_from_cfg(cfg, d):
    if "model" in cfg:
        return build_params(cfg["model"], d)
    if "fit" not in cfg:
        raise ConfigError("taildep needs either 'model' or a 'fit' file from `ghx fit`")
    path = Path(cfg["fit"])
    if not path.is_file():
        raise DataError(f"prerequisite fit file not found: {path}")
    doc = json.loads(path.read_text())
    fits = doc.get("fits") or []
    want = cfg.get("subclass")
    if want is not None:
        want = Subclass.parse(want).value
        fits = [f for f in fits if f["subclass"] == want]
    if not fits:
        raise DataError(f"{path} has no usable fitted model")
    best = min(fits, key=lambda f: f["aic"])
    return CopulaParams.from_dict(best["params"])


def _thresholds(cfg):
    us = cfg.get("thresholds", [0.95])
    if not isinstance(us, list) or not us or not all(
        isinstance(u, (int, float)) and 0 < u < 1 for u in us
    ):
        raise ConfigError("'thresholds' must be a list of probabilities in (0, 1)")
    return [float(u) for u in us]


def run_taildep(cfg, seed, out, threads=1):
    """
    Pairwise Spearman correlation, ``chi_u`` and ``eta_u``: empirical values
    from the data next to Monte Carlo values of the fitted model.
    """
    data = load_dataset(cfg)
    p = _model_from_cfg(cfg, data.d)
    us = _thresholds(cfg)
    n_mc = _number(cfg, "n_mc", 100000, kind=int, lo=100)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x = copula_sample(p, data.sites, n_mc, rng)
    d = data.d
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    s_obs = spearman_matrix(data.u)
    s_fit = spearman_matrix(x)
    fitted = sample_summaries(x, pairs, us)
    dist = data.sites.distances()
    ids = data.sites.ids
    rows = []
    for (i, j), fit_row in zip(pairs, fitted):
        for u, fe in zip(us, fit_row):
            oe = chi_eta_empirical(data.u, (i, j), u)
            rows.append([ids[i], ids[j], dist[i, j], u, s_obs[i, j], s_fit[i, j],
                         oe.chi_u, fe.chi_u, oe.eta_u, fe.eta_u,
                         oe.joint_exceedances, fe.joint_exceedances])
    header = ["site_i", "site_j", "distance", "u", "spearman_obs", "spearman_fit",
              "chi_obs", "chi_fit", "eta_obs", "eta_fit", "joint_obs", "joint_fit"]
    write_table(out / "taildep.csv", header, rows)
    outputs = ["taildep.csv"]
    subsets = cfg.get("subsets")
    if subsets:
        pos = {sid: k for k, sid in enumerate(ids)}
        try:
            sets = [[pos[str(s)] for s in group] for group in subsets]
        except (KeyError, TypeError):
            raise ConfigError("'subsets' must list known site ids") from None
        fitted = sample_summaries(x, sets, us)
        srows = []
        for group, cols, fit_row in zip(subsets, sets, fitted):
            for u, fe in zip(us, fit_row):
                oe = chi_eta_empirical(data.u, cols, u)
                srows.append([" ".join(map(str, group)), len(cols), u, oe.chi_u, fe.chi_u,
                              oe.eta_u, fe.eta_u])
        write_table(out / "taildep_subsets.csv",
                    ["sites", "dimension", "u", "chi_obs", "chi_fit", "eta_obs", "eta_fit"],
                    srows)
        outputs.append("taildep_subsets.csv")
    return {"model": p.as_dict(), "n_mc": n_mc, "pairs": len(pairs), "outputs": outputs}


def _estimate_error_row(fit, truth):
    est = fit.params.canonical()
    return [getattr(est, k) - getattr(truth, k) for k in ("lam", "kappa", "psi", "gamma_c",
                                                        "zeta", "nu")]


def _sim1_task(task):
    truth, sites, n, _, seq, opts = task
    rng = np.random.default_rng(seq)
    u = copula_sample(truth, sites, n, rng)
    data = CopulaDataset(u, sites)
    try:
        fit = fit_mle(data, Subclass.FULL_GH, opts=opts)
    except GhCopulaError as exc:
        return None, str(exc)
    return fit, None


SIM1_PARAMS = ("lam", "kappa", "psi", "gamma_c", "zeta", "nu")


def run_sim_study_1(cfg, seed, out, threads=1):
    """
    Parameter recovery: simulate from the GH copula on the grid, refit, and
    record estimate minus truth for each replicate and sample size.
    """
    sites = build_sites({"sites": cfg.get("sites", {"grid": [0, 0.25, 0.5, 0.75, 1]})})
    truth = build_params(cfg.get("truth", {"lam": 1, "kappa": 1, "psi": 1, "gamma_c": 1,
                                           "zeta": 0.7, "nu": 1.5}))
    if truth.subclass is not Subclass.FULL_GH:
        raise ConfigError("simulation study 1 uses a full GH truth")
    sizes = cfg.get("sample_sizes", [250, 500, 1000])
    if not isinstance(sizes, list) or not all(isinstance(s, int) and s >= 2 for s in sizes):
        raise ConfigError("'sample_sizes' must be a list of integers >= 2")
    reps = _number(cfg, "replicates", 30, kind=int, lo=1)
    opts = build_options(cfg)
    seqs = _spawn(seed, len(sizes) * reps)
    tasks = [(truth, sites, n, r, seqs[k * reps + r], opts)
             for k, n in enumerate(sizes) for r in range(reps)]
    results = ordered_map(_sim1_task, tasks, threads)
    canon = truth.canonical()
    rows, failures = [], []
    errors = {n: [] for n in sizes}
    for t, (fit, err) in zip(tasks, results):
        n, r = t[2], t[3]
        if fit is None:
            failures.append((n, r, err))
            continue
        e = _estimate_error_row(fit, canon)
        errors[n].append(e)
        rows.append([n, r, *e, fit.loglik, fit.converged])
    write_table(out / "errors.csv",
                ["n", "replicate", *SIM1_PARAMS, "loglik", "converged"], rows)
    summary_rows = []
    for n in sizes:
        e = np.array(errors[n]).reshape(-1, len(SIM1_PARAMS))
        for k, name in enumerate(SIM1_PARAMS):
            col = e[:, k]
            if col.size == 0:
                summary_rows.append([n, name, 0, None, None, None])
                continue
            q1, q3 = np.percentile(col, [25, 75])
            summary_rows.append([n, name, col.size, float(np.median(col)),
                                 float(np.median(np.abs(col))), float(q3 - q1)])
    write_table(out / "summary.csv",
                ["n", "parameter", "fits", "median_error", "median_abs_error", "iqr"],
                summary_rows)
    return {"truth": canon.as_dict(), "sample_sizes": sizes, "replicates": reps,
            "failures": [{"n": n, "replicate": r, "error": e} for n, r, e in failures],
            "outputs": ["errors.csv", "summary.csv"]}


def fitted_eta(p, rho):
    """Limiting residual tail dependence of a fitted copula at correlation ``rho``."""
    rho = np.asarray(rho, dtype=float)
    if p.subclass is Subclass.GAUSSIAN:
        return (1 + rho) / 2
    if p.psi == 0:
        return np.ones_like(rho)
    return np.array([eta_gh(p.psi, p.gamma_c, p.gamma_c, r) for r in rho.ravel()]).reshape(rho.shape)


def run_sim_study_2(cfg, seed, out, threads=1):
    """
    Inverted Brown-Resnick benchmark: true, fitted and empirical ``eta(h)``
    for every distinct inter-site distance.
    """
    k = _number(cfg, "grid_size", 10, kind=int, lo=2)
    sites = build_sites({"sites": cfg.get("sites", {"grid_size": k})})
    zeta_br = _number(cfg, "zeta_br", 0.3)
    n = _number(cfg, "n", 300, kind=int, lo=2)
    u_thr = _number(cfg, "threshold", 0.95)
    if not 0 < u_thr < 1:
        raise ConfigError("'threshold' must lie in (0, 1)")
    subs = _subclasses(cfg, "subclasses", ("full_gh", "nig"))
    opts = build_options(cfg)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    u = simulate_inverted_br(sites, zeta_br, n, rng)
    data = CopulaDataset(u, sites)
    fits = fit_models(data, subs, opts, threads)
    for s, f in fits.items():
        if isinstance(f, Exception):
            raise f
    dist = sites.distances()
    iu = np.triu_indices(len(sites), 1)
    hs = np.round(dist[iu], 12)
    levels = np.unique(hs)
    emp = np.array([
        e.eta_u if (e := chi_eta_empirical(u, (i, j), u_thr)).available else np.nan
        for i, j in zip(*iu)
    ])
    rows = []
    for h in levels:
        sel = hs == h
        vals = emp[sel]
        vals = vals[~np.isnan(vals)]
        row = [h, int(sel.sum()), eta_inverted_br(h, zeta_br)]
        for s in subs:
            p = fits[s].params
            row.append(float(fitted_eta(p, corr(p.corr, h))))
        row.append(float(vals.mean()) if vals.size else None)
        rows.append(row)
    header = ["distance", "pairs", "eta_true", *[f"eta_{s.value}" for s in subs],
              f"eta_empirical_{u_thr:g}"]
    write_table(out / "eta_curve.csv", header, rows)
    fit_rows = [[s.value, f.loglik, f.aic, f.converged, *_param_values(f.params)]
                for s, f in fits.items()]
    write_table(out / "fits.csv", ["subclass", "loglik", "aic", "converged", *PARAM_COLUMNS],
                fit_rows)
    band = [r for r in rows if 0.15 <= r[0] <= 1.0]
    dev = {s.value: max(abs(r[3 + i] - r[2]) for r in band) if band else None
           for i, s in enumerate(subs)}
    return {"zeta_br": zeta_br, "n": n, "d": len(sites),
            "max_abs_deviation_0.15_1.0": dev, "outputs": ["eta_curve.csv", "fits.csv"]}


def run_bootstrap(cfg, seed, out, threads=1):
    """Stationary-bootstrap refits with 2.5% / 97.5% percentile intervals."""
    data = load_dataset(cfg)
    sub = Subclass.parse(cfg.get("subclass", "full_gh"))
    n_boot = _number(cfg, "n_boot", 200, kind=int, lo=1)
    block = _number(cfg, "mean_block_length", 1.0, lo=1.0)
    opts = build_options(cfg)
    base = fit_mle(data, sub, opts=opts)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    reps = stationary_bootstrap(data, block, n_boot, sub, rng, opts=opts,
                                init=base.params, threads=threads)
    rows = []
    for r, f in enumerate(reps):
        p = None if f.params is None else (
            f.params.canonical() if opts.reduce_scale else f.params)
        rows.append([r, f.params is not None, f.converged, f.loglik, *_param_values(p),
                     f.error])
    write_table(out / "bootstrap.csv",
                ["replicate", "ok", "converged", "loglik", *PARAM_COLUMNS, "error"], rows)
    est = base.params.canonical() if opts.reduce_scale else base.params
    est_vals = dict(zip(PARAM_COLUMNS, _param_values(est)))
    good = np.array([row[4:4 + len(PARAM_COLUMNS)] for row in rows if row[1]], dtype=object)
    irows = []
    for k, name in enumerate(PARAM_COLUMNS):
        if est_vals[name] is None:
            continue
        col = np.array([float(v) for v in good[:, k]]) if len(good) else np.array([])
        if col.size:
            lo, hi = np.percentile(col, [2.5, 97.5])
        else:
            lo = hi = None
        irows.append([name, est_vals[name], lo, hi, col.size])
    write_table(out / "intervals.csv", ["parameter", "estimate", "q2.5", "q97.5", "replicates"],
                irows)
    return {"subclass": sub.value, "estimate": est.as_dict(), "loglik": base.loglik,
            "n_boot": n_boot, "failed": sum(1 for r in rows if not r[1]),
            "outputs": ["bootstrap.csv", "intervals.csv"]}


RUNNERS = {
    "simulate": run_simulate,
    "fit": run_fit,
    "taildep": run_taildep,
    "sim-study-1": run_sim_study_1,
    "sim-study-2": run_sim_study_2,
    "bootstrap": run_bootstrap,
}
