"""Seeded numerical studies: method comparison, grouping trajectories,
solution-path nonequivalence, and scale robustness of exact recovery.

All studies are driven by integer seeds through independent per-replication
random streams, so a report is bit-for-bit reproducible from its config.
Reports carry the raw per-replication records next to the aggregated tables
and plain plot-data series (no plotting here).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .grouping import preprocess
from .matrices import DeVoreParams, devore_matrix
from .regularizers import RegularizerSpec
from .solvers import (
    Constrained,
    Lagrangian,
    Problem,
    SolverOptions,
    lambda_zero_threshold,
    solution_path,
    solve_constrained,
)

__all__ = [
    "ScenarioConfig",
    "StudyReport",
    "bootstrap_sd_of_median",
    "builtin_scenario_names",
    "load_builtin_scenario",
    "run_comparison",
    "grouping_fixture",
    "run_grouping_paths",
    "run_path_nonequivalence",
    "SCALING_PRESETS",
    "run_scaling",
]


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class StudyReport:
    name: str
    config: dict
    metadata: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    series: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "name": self.name, "config": self.config, "metadata": self.metadata,
            "tables": self.tables, "records": self.records, "series": self.series,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def write(self, out_dir) -> list:
        """Write report.json plus one CSV per series; returns the paths."""
        import os

        os.makedirs(out_dir, exist_ok=True)
        paths = []
        report_path = os.path.join(out_dir, f"{self.name}_report.json")
        with open(report_path, "w", encoding="utf-8") as handle:
            handle.write(self.to_json())
        paths.append(report_path)
        for series_name, data in self.series.items():
            csv_path = os.path.join(out_dir, f"{self.name}_{series_name}.csv")
            columns = dict(data)
            keys = list(columns)
            length = len(columns[keys[0]])
            with open(csv_path, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle)
                writer.writerow(keys)
                for row in range(length):
                    writer.writerow([columns[k][row] for k in keys])
            paths.append(csv_path)
        return paths


def bootstrap_sd_of_median(values, resamples: int = 200, seed: int = 0) -> float:
    """Standard deviation of the median under resampling with replacement."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, v.size, size=(resamples, v.size))
    medians = np.median(v[idx], axis=1)
    return float(np.std(medians, ddof=1))


# ---------------------------------------------------------------------------
# comparison study
# ---------------------------------------------------------------------------


@dataclass
class ScenarioConfig:
    name: str
    generator: dict
    replications: int
    seed: int
    methods: list
    lambda_grid: dict

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        for key in ("beta", "covariance", "noise_sigma", "n_train", "n_val", "n_test"):
            if key not in self.generator:
                raise ValueError(f"generator config missing {key!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        return cls(name=d["name"], generator=d["generator"], replications=int(d["replications"]),
                   seed=int(d["seed"]), methods=d["methods"], lambda_grid=d["lambda_grid"])

    def to_dict(self) -> dict:
        return {"name": self.name, "generator": self.generator,
                "replications": self.replications, "seed": self.seed,
                "methods": self.methods, "lambda_grid": self.lambda_grid}


def builtin_scenario_names() -> list:
    root = resources.files("clotkit") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_builtin_scenario(name: str) -> ScenarioConfig:
    path = resources.files("clotkit") / "configs" / f"{name}.json"
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValueError(f"no builtin scenario {name!r}; have {builtin_scenario_names()}") from None
    return ScenarioConfig.from_dict(json.loads(text))


def _covariance_matrix(cov: dict, p: int) -> np.ndarray:
    kind = cov.get("kind", "identity")
    if kind == "identity":
        return np.eye(p)
    if kind == "ar1":
        rho = float(cov["rho"])
        idx = np.arange(p)
        return rho ** np.abs(idx[:, None] - idx[None, :])
    if kind == "equi":
        rho = float(cov["rho"])
        return np.full((p, p), rho) + (1.0 - rho) * np.eye(p)
    if kind == "blocks":
        sizes = [int(b["size"]) for b in cov["blocks"]]
        if sum(sizes) != p:
            raise ValueError(f"block sizes sum to {sum(sizes)}, expected {p}")
        sigma = np.zeros((p, p))
        at = 0
        for b in cov["blocks"]:
            s = int(b["size"])
            var = float(b.get("var", 1.0))
            cross = float(b.get("cov", 0.0))
            sigma[at:at + s, at:at + s] = np.full((s, s), cross) + (var - cross) * np.eye(s)
            at += s
        return sigma
    raise ValueError(f"unknown covariance kind {kind!r}")


def _draw_linear_model(gen: dict, rng: np.random.Generator) -> dict:
    beta = np.asarray(gen["beta"], dtype=float)
    p = beta.size
    sigma = float(gen["noise_sigma"])
    cov = _covariance_matrix(gen["covariance"], p)
    chol = np.linalg.cholesky(cov + 1e-12 * np.eye(p))
    sizes = [int(gen["n_train"]), int(gen["n_val"]), int(gen["n_test"])]
    total = sum(sizes)
    X = rng.standard_normal((total, p)) @ chol.T
    y = X @ beta + sigma * rng.standard_normal(total)
    parts = np.split(np.arange(total), np.cumsum(sizes)[:-1])
    out = {"beta": beta}
    for label, idx in zip(("train", "val", "test"), parts):
        out[f"X_{label}"] = X[idx]
        out[f"y_{label}"] = y[idx]
    return out


def _method_spec(kind: str, mu: Optional[float]):
    kind = kind.lower()
    if kind == "lasso":
        return RegularizerSpec.lasso()
    if kind == "en":
        return RegularizerSpec.elastic_net(mu)
    if kind == "clot":
        return RegularizerSpec.clot(mu)
    if kind == "ridge":
        return RegularizerSpec.ridge()
    raise ValueError(f"unsupported comparison method {kind!r}")


def _support_size(beta_hat, rel_tol=1e-6) -> int:
    top = float(np.max(np.abs(beta_hat), initial=0.0))
    if top == 0.0:
        return 0
    return int(np.sum(np.abs(beta_hat) > rel_tol * top))


def run_comparison(config: ScenarioConfig, solver_opts: SolverOptions = None) -> StudyReport:
    """Replicated train/validate/test comparison of the configured methods.

    The multiplier and (where applicable) the mixing parameter are chosen per
    replication by grid search on validation prediction error.  The design
    and response are scaled by ``1/sqrt(n_train)`` before solving so one
    fixed multiplier grid spans useful regularization strengths across
    scenarios.  Reported error is mean squared prediction error against the
    noiseless test signal.
    """
    opts = solver_opts or SolverOptions(kkt_tol=1e-6, max_iters=2500, check_every=10)
    lg = config.lambda_grid
    lam_grid = np.logspace(np.log10(float(lg["hi"])), np.log10(float(lg["lo"])), int(lg["num"]))

    streams = np.random.SeedSequence(config.seed).spawn(config.replications)
    records = []
    failures = []
    for rep in range(config.replications):
        rng = np.random.default_rng(streams[rep])
        data = _draw_linear_model(config.generator, rng)
        scale = np.sqrt(data["X_train"].shape[0])
        A = data["X_train"] / scale
        y = data["y_train"] / scale
        template = Problem(A, y, Lagrangian(1.0, "penalty"))

        for method in config.methods:
            kind = method["kind"]
            mu_grid = method.get("mu_grid", [None])
            best = None
            any_failed = False
            for mu in mu_grid:
                spec = _method_spec(kind, mu)
                path = solution_path(template, spec, lam_grid, opts)
                for point in path:
                    if point.result is None:
                        any_failed = True
                        continue
                    beta_hat = point.result.x_hat
                    val_mse = float(np.mean((data["X_val"] @ beta_hat - data["y_val"]) ** 2))
                    if best is None or val_mse < best["val_mse"]:
                        best = {"val_mse": val_mse, "lambda": point.lam, "mu": mu,
                                "beta": beta_hat, "converged": point.result.converged}
            if best is None:
                failures.append({"rep": rep, "method": kind})
                continue
            err = data["X_test"] @ (best["beta"] - data["beta"])
            records.append({
                "rep": rep,
                "method": kind,
                "mse": float(np.mean(err**2)),
                "nnz": _support_size(best["beta"]),
                "lambda": float(best["lambda"]),
                "mu": None if best["mu"] is None else float(best["mu"]),
                "val_mse": best["val_mse"],
                "converged": bool(best["converged"]),
                "path_failures": bool(any_failed),
            })

    tables = {"median_mse": {}, "bootstrap_sd_of_median_mse": {}, "median_nnz": {}}
    series = {}
    for method in config.methods:
        kind = method["kind"]
        mses = [r["mse"] for r in records if r["method"] == kind]
        nnzs = [r["nnz"] for r in records if r["method"] == kind]
        if not mses:
            continue
        tables["median_mse"][kind] = float(np.median(mses))
        tables["bootstrap_sd_of_median_mse"][kind] = bootstrap_sd_of_median(
            mses, resamples=200, seed=config.seed + 1)
        tables["median_nnz"][kind] = float(np.median(nnzs))
        series[f"mse_{kind}"] = {"replication": list(range(len(mses))), "mse": mses}

    metadata = {
        "true_nnz": _support_size(np.asarray(config.generator["beta"], dtype=float)),
        "mse_definition": "mean((X_test @ (beta_hat - beta_true))^2)",
        "tuning": "validation grid search over the multiplier grid and mu_grid",
        "design_scaling": "train design and response divided by sqrt(n_train)",
        "note": "medians and their orderings are the reported outcome; absolute "
                "values depend on the tuning protocol and are not comparison targets",
        "solver_failures": failures,
    }
    return StudyReport(name=config.name, config=config.to_dict(), metadata=metadata,
                       tables=tables, records=records, series=series)


# ---------------------------------------------------------------------------
# grouping trajectories and path nonequivalence
# ---------------------------------------------------------------------------


def grouping_fixture(seed: int = 0, n_samples: int = 100):
    """Two latent factors, six observed columns.

    Per sample: ``z1, z2 ~ U(0, 20)``, response ``z1 + 0.1*z2`` plus unit
    noise, columns ``(z1, -z1, z1, z2, -z2, z2)`` each perturbed by
    ``N(0, 1/16)`` noise.  Columns 1..3 form a highly correlated trio that a
    grouping-friendly penalty should weight as ``b1 = -b2 = b3``.
    """
    rng = np.random.default_rng(seed)
    z1 = rng.uniform(0.0, 20.0, n_samples)
    z2 = rng.uniform(0.0, 20.0, n_samples)
    y = z1 + 0.1 * z2 + rng.standard_normal(n_samples)
    signs = (1.0, -1.0, 1.0)
    cols = [s * z1 + 0.25 * rng.standard_normal(n_samples) for s in signs]
    cols += [s * z2 + 0.25 * rng.standard_normal(n_samples) for s in signs]
    return np.column_stack(cols), y


def _trio_spread(beta_row) -> float:
    """Relative spread of (b1, -b2, b3); infinite when signs are wrong."""
    trio = np.array([beta_row[0], -beta_row[1], beta_row[2]])
    if np.any(trio <= 0):
        return np.inf
    return float((trio.max() - trio.min()) / trio.mean())


def _path_matrix(A, y, spec, lam_grid, opts) -> np.ndarray:
    template = Problem(A, y, Lagrangian(1.0, "penalty"))
    points = solution_path(template, spec, lam_grid, opts)
    rows = []
    for p in points:
        if p.result is None:
            raise RuntimeError(f"path solve failed at lam={p.lam:g}: {p.error}")
        rows.append(p.result.x_hat)
    return np.asarray(rows)


_PATH_OPTS = SolverOptions(kkt_tol=1e-10, max_iters=20000, check_every=10)


def run_grouping_paths(seed: int = 0, n_samples: int = 100, mu: float = 0.5,
                       n_lambdas: int = 61, decades: float = 4.0) -> StudyReport:
    """Coefficient trajectories of CLOT, EN, and lasso on the two-factor
    fixture, over each method's own descending multiplier grid."""
    X, y = grouping_fixture(seed, n_samples)
    pre = preprocess(X, y)
    methods = {
        "clot": RegularizerSpec.clot(mu),
        "en": RegularizerSpec.elastic_net(mu),
        "lasso": RegularizerSpec.lasso(),
    }
    series = {}
    spread_stats = {}
    window = {}
    for label, spec in methods.items():
        lam_max = lambda_zero_threshold(spec, pre.A, pre.y, "penalty")
        grid = lam_max * np.logspace(0.0, -decades, n_lambdas)
        betas = _path_matrix(pre.A, pre.y, spec, grid, _PATH_OPTS)
        series[label] = {
            "lambda": grid.tolist(),
            **{f"beta{i + 1}": betas[:, i].tolist() for i in range(betas.shape[1])},
        }
        # mid-range: multipliers between 10% and 60% of the zero threshold,
        # i.e. after the trio activates but before weak regularization lets
        # the unpenalized ill-conditioning take over
        mask = (grid >= 0.10 * lam_max) & (grid <= 0.60 * lam_max)
        spreads = [_trio_spread(row) for row, keep in zip(betas, mask) if keep]
        finite = [s for s in spreads if np.isfinite(s)]
        spread_stats[label] = {
            "max": float(np.max(spreads)) if spreads else None,
            "max_finite": float(np.max(finite)) if finite else None,
            "n_infinite": int(sum(1 for s in spreads if not np.isfinite(s))),
            "n_points": len(spreads),
        }
        window[label] = [float(0.10 * lam_max), float(0.60 * lam_max)]

    metadata = {
        "mu": mu, "n_samples": n_samples, "seed": seed,
        "mid_range_window": window,
        "trio_spread": spread_stats,
        "spread_definition": "(max - min)/mean of (b1, -b2, b3); infinite if any sign is wrong",
    }
    return StudyReport(name="grouping_paths", metadata=metadata,
                       config={"seed": seed, "n_samples": n_samples, "mu": mu,
                               "n_lambdas": n_lambdas, "decades": decades},
                       series=series)


def _longest_increasing_run(values, tol=1e-12):
    """Start/end (inclusive) of the longest strictly increasing run."""
    best = (0, 0)
    start = 0
    for i in range(1, len(values)):
        if values[i] <= values[i - 1] + tol:
            start = i
        if i - start > best[1] - best[0]:
            best = (start, i)
    return best


def run_path_nonequivalence(seed: int = 0, n_samples: int = 100, mu: float = 0.5,
                            n_lambdas: int = 81, decades: float = 4.0) -> StudyReport:
    """Test whether the EN path is a reparametrization of the CLOT path.

    The first coefficient is monotone along each path (except at the very
    weakest regularization), so matching first coefficients induces a map
    between the two multiplier scales; the remaining coefficients are then
    compared at the matched points.
    """
    X, y = grouping_fixture(seed, n_samples)
    pre = preprocess(X, y)
    paths = {}
    grids = {}
    for label, spec in (("clot", RegularizerSpec.clot(mu)), ("en", RegularizerSpec.elastic_net(mu))):
        lam_max = lambda_zero_threshold(spec, pre.A, pre.y, "penalty")
        grid = lam_max * np.logspace(0.0, -decades, n_lambdas)
        paths[label] = _path_matrix(pre.A, pre.y, spec, grid, _PATH_OPTS)
        grids[label] = grid

    # grids are descending, so beta1 increases with grid index
    runs = {label: _longest_increasing_run(paths[label][:, 0]) for label in paths}
    for label, (lo, hi) in runs.items():
        if hi - lo < 5:
            raise RuntimeError(f"first coefficient of the {label} path is not monotone "
                               f"over a usable range")

    c_lo, c_hi = runs["clot"]
    e_lo, e_hi = runs["en"]
    beta1_c = paths["clot"][c_lo:c_hi + 1, 0]
    beta1_e = paths["en"][e_lo:e_hi + 1, 0]
    lam_c = grids["clot"][c_lo:c_hi + 1]
    lam_e = grids["en"][e_lo:e_hi + 1]
    lo_val = max(beta1_c.min(), beta1_e.min())
    hi_val = min(beta1_c.max(), beta1_e.max())
    keep = (beta1_c >= lo_val) & (beta1_c <= hi_val)
    if keep.sum() < 5:
        raise RuntimeError("first-coefficient ranges of the two paths barely overlap")

    b1 = beta1_c[keep]
    lam_c_kept = lam_c[keep]
    lam_en_mapped = np.interp(b1, beta1_e, lam_e)
    en_matched = np.column_stack([
        np.interp(b1, beta1_e, paths["en"][e_lo:e_hi + 1, col])
        for col in range(paths["en"].shape[1])
    ])
    clot_matched = paths["clot"][c_lo:c_hi + 1][keep]
    diff = np.linalg.norm(clot_matched - en_matched, axis=1)
    ref = np.linalg.norm(clot_matched, axis=1)

    metadata = {
        "mu": mu, "seed": seed,
        "max_diff": float(diff.max()),
        "max_beta_norm": float(ref.max()),
        "max_first_component_gap": float(np.max(np.abs(clot_matched[:, 0] - en_matched[:, 0]))),
        # matched points run from large to small multipliers, so the mapped
        # multiplier must fall along the sequence
        "lambda_map_monotone": bool(np.all(np.diff(lam_en_mapped) < 0)),
        "n_matched": int(keep.sum()),
    }
    series = {
        "difference": {"lambda_clot": lam_c_kept.tolist(),
                       "norm_diff": diff.tolist(),
                       "clot_norm": ref.tolist()},
        "lambda_map": {"lambda_clot": lam_c_kept.tolist(),
                       "lambda_en": lam_en_mapped.tolist()},
    }
    return StudyReport(name="path_nonequivalence", metadata=metadata,
                       config={"seed": seed, "n_samples": n_samples, "mu": mu,
                               "n_lambdas": n_lambdas, "decades": decades},
                       series=series)


# ---------------------------------------------------------------------------
# scale robustness of exact recovery
# ---------------------------------------------------------------------------


SCALING_PRESETS = {
    # full size keeps m < n/4, as does the CI-friendly small preset
    "full": {"p": 23, "r": 2, "n": 4000},
    "small": {"p": 11, "r": 2, "n": 1000},
}

_SCALING_TRUE = (0.8147, 0.9058, 0.1270)


def run_scaling(c_list: Sequence[int] = (0, 1, 2, 3, 4), preset: str = "small",
                mu: float = 0.2, solver_opts: SolverOptions = None) -> StudyReport:
    """Noise-free recovery of a 3-sparse vector scaled by powers of ten.

    Both methods share the same mixing weight on the l1 term: CLOT uses
    ``(1-mu)*l1 + mu*l2`` and the elastic net uses ``(1-mu)*l1 + mu*l2^2``
    (as an EN spec that means ``mu_en = 1 - mu``).  The CLOT estimate must
    simply scale with the data; the elastic net's quadratic term eventually
    dominates and drags the solution away from the scaled truth.
    """
    if preset not in SCALING_PRESETS:
        raise ValueError(f"unknown preset {preset!r}; have {sorted(SCALING_PRESETS)}")
    params = SCALING_PRESETS[preset]
    opts = solver_opts or SolverOptions()
    A = devore_matrix(DeVoreParams(params["p"], params["r"], params["n"]), normalize=False)
    n = A.shape[1]
    x0 = np.zeros(n)
    x0[:3] = _SCALING_TRUE

    clot_spec = RegularizerSpec.clot(mu)
    en_spec = RegularizerSpec.elastic_net(1.0 - mu)

    records = []
    for c in c_list:
        x_true = (10.0**c) * x0
        y = A @ x_true
        row = {"c": int(c)}
        for label, spec in (("clot", clot_spec), ("en", en_spec)):
            res = solve_constrained(Problem(A, y, Constrained(0.0)), spec, opts)
            rel = float(np.linalg.norm(res.x_hat - x_true) / np.linalg.norm(x_true))
            row[label] = {
                "rel_err": rel,
                "first3": [float(v) for v in res.x_hat[:3]],
                "converged": bool(res.converged),
                "residual": res.residual_l2,
                "iterations": res.iterations,
            }
        records.append(row)

    tables = {
        "clot_rel_err": {str(r["c"]): r["clot"]["rel_err"] for r in records},
        "en_rel_err": {str(r["c"]): r["en"]["rel_err"] for r in records},
        "en_diverged": {str(r["c"]): (not r["en"]["converged"]) for r in records},
    }
    metadata = {
        "preset": preset, "matrix": dict(params), "mu": mu,
        "m": int(A.shape[0]), "n": int(n),
        "m_lt_n_over_4": bool(A.shape[0] < n / 4),
        "true_first3": list(_SCALING_TRUE),
        "en_convention": "elastic net solved as (1-mu)*l1 + mu*l2^2, i.e. an EN spec with mu_en = 1 - mu",
    }
    return StudyReport(name="scaling", metadata=metadata,
                       config={"c_list": [int(c) for c in c_list], "preset": preset, "mu": mu},
                       tables=tables, records=records)
