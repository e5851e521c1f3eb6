"""Experiment runner: dataset -> representation -> GBTO -> spectral clustering -> metrics.

Results are flat dict rows written as CSV. Every seed produces one row; a
failing seed produces an ``error`` row instead of aborting the run.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import multiprocessing
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from threestage import eval as metrics
from threestage.data import SyntheticSpec, check_labels, generate_synthetic, load_labels, load_matrix, normalize_columns, pca_project
from threestage.gbto import ZERO_FLOOR, Transform, fw_blocked, fw_reference, fw_rows, gbto, shortest_paths, wdt
from threestage.selfexpress import build_affinity, lsr_coefficients, omp_coefficients
from threestage.spectral import spectral_clustering

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

REPRESENTATIONS = ("omp", "lsr")
GBTO_MODES = ("off", "hard", "soft")
SWEEP_AXES = ("points_per_subspace", "n_subspaces", "k_max", "lam")

CSV_FIELDS = [
    "run_id", "method", "mode", "transform", "N", "k",
    "accuracy", "nmi", "connectivity",
    "ncut_before", "ncut_after", "sparsity_before", "sparsity_after", "wall_ms",
    "seed", "representation", "connectivity_before",
    "t_represent_ms", "t_gbto_ms", "t_spectral_ms", "status", "error",
    "accuracy_std", "nmi_std", "connectivity_std",
    "ncut_improved_frac", "connectivity_improved_frac", "n_ok",
]
SWEEP_FIELDS = ["axis", "value"] + CSV_FIELDS


@dataclass
class DatasetConfig:
    """Either a synthetic union of subspaces or a data file (``path`` set)."""

    n_subspaces: int = 5
    sub_dim: int = 8
    ambient_dim: int = 12
    points_per_subspace: int = 50
    noise_sigma: float = 0.0
    path: str | None = None
    format: str | None = None
    labels: str | None = None
    pca_dim: int | None = None
    max_points: int | None = None

    @property
    def synthetic(self) -> bool:
        return self.path is None


@dataclass
class ExperimentConfig:
    name: str = "run"
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    representation: str = "omp"
    k_max: int = 8
    residual_tol: float = 1e-6
    lam: float = 1.0
    affinity: str = "sum"
    gbto: str = "hard"
    transform: str = "reciprocal"
    zero_floor: float = ZERO_FLOOR
    k: int | None = None
    kmeans_restarts: int = 10
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    connectivity_scope: str = "cluster"
    nmi_average: str = "geometric"
    timing: bool = True
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        if isinstance(self.dataset, dict):
            self.dataset = DatasetConfig(**self.dataset)
        self.seeds = [int(s) for s in self.seeds]
        self.validate()

    def validate(self) -> None:
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"representation must be one of {REPRESENTATIONS}")
        if self.gbto not in GBTO_MODES:
            raise ValueError(f"gbto must be one of {GBTO_MODES}")
        if self.affinity not in ("sum", "half"):
            raise ValueError("affinity must be 'sum' or 'half'")
        Transform(self.transform)
        if not self.dataset.synthetic and self.k is None and self.dataset.labels is None:
            raise ValueError("file datasets need k or a labels file")
        if self.dataset.synthetic:
            SyntheticSpec(
                self.dataset.n_subspaces, self.dataset.sub_dim, self.dataset.ambient_dim,
                self.dataset.points_per_subspace, self.dataset.noise_sigma,
            )

    @property
    def method(self) -> str:
        base = self.representation.upper()
        return {"off": base, "hard": f"3S-{base}", "soft": f"soft-3S-{base}"}[self.gbto]

    def replace(self, **changes) -> ExperimentConfig:
        data = {k: v for k, v in changes.items() if k not in DATASET_KEYS}
        ds = {k: v for k, v in changes.items() if k in DATASET_KEYS}
        return dataclasses.replace(self, dataset=dataclasses.replace(self.dataset, **ds), **data)


DATASET_KEYS = {f.name for f in dataclasses.fields(DatasetConfig)}
SYNTHETIC_KEYS = {"n_subspaces", "sub_dim", "ambient_dim", "points_per_subspace", "noise_sigma"}


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build a config from the nested TOML layout (tables: dataset, representation, gbto, spectral, metrics)."""
    raw = dict(raw)
    flat: dict = {}
    sections = {
        "representation": {"method": "representation"},
        "gbto": {"mode": "gbto"},
        "spectral": {"restarts": "kmeans_restarts"},
        "metrics": {},
    }
    for section, renames in sections.items():
        for key, value in raw.pop(section, {}).items():
            flat[renames.get(key, key)] = value
    dataset = dict(raw.pop("dataset", {}))
    kind = dataset.pop("kind", "file" if "path" in dataset else "synthetic")
    if kind not in ("synthetic", "file"):
        raise ValueError(f"dataset.kind must be 'synthetic' or 'file', got {kind!r}")
    if (kind == "file") != ("path" in dataset) or ("path" in dataset and SYNTHETIC_KEYS & set(dataset)):
        raise ValueError("dataset: give either synthetic parameters or a file path, not both")
    if "trials" in raw and "seeds" not in raw:
        raw["seeds"] = list(range(int(raw.pop("trials"))))
    raw.pop("trials", None)
    flat.update(raw)
    unknown = set(flat) - {f.name for f in dataclasses.fields(ExperimentConfig)}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(dataset=DatasetConfig(**dataset), **flat)


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh))


# ---------------------------------------------------------------- running


def _load_dataset(cfg: ExperimentConfig, seed: int) -> tuple[np.ndarray, np.ndarray | None]:
    ds = cfg.dataset
    if ds.synthetic:
        spec = SyntheticSpec(ds.n_subspaces, ds.sub_dim, ds.ambient_dim, ds.points_per_subspace, ds.noise_sigma, seed)
        return generate_synthetic(spec)
    X = load_matrix(ds.path, ds.format)
    truth = load_labels(ds.labels) if ds.labels else None
    if ds.max_points is not None:
        X = X[:, : ds.max_points]
        truth = truth[: ds.max_points] if truth is not None else None
    if truth is not None:
        truth = check_labels(truth, X.shape[1])
    if ds.pca_dim is not None:
        X = pca_project(X, ds.pca_dim)
    X, _ = normalize_columns(X)
    return X, truth


def _represent(cfg: ExperimentConfig, X: np.ndarray) -> np.ndarray:
    if cfg.representation == "omp":
        return omp_coefficients(X, min(cfg.k_max, X.shape[1] - 1), cfg.residual_tol)
    return lsr_coefficients(X, cfg.lam)


def _ms(t0: float) -> float:
    return 1000.0 * (time.perf_counter() - t0)


def run_once(cfg: ExperimentConfig, seed: int) -> dict:
    """One seed of the pipeline; returns a CSV row (``status`` is ``ok`` or ``error``)."""
    row = {
        "run_id": f"{cfg.name}:{seed}", "method": cfg.method, "mode": cfg.gbto,
        "transform": cfg.transform, "seed": seed, "representation": cfg.representation,
    }
    try:
        t_start = time.perf_counter()
        X, truth = _load_dataset(cfg, seed)
        k = cfg.k if cfg.k is not None else len(np.unique(truth))
        row.update(N=X.shape[1], k=k)

        t0 = time.perf_counter()
        W = build_affinity(_represent(cfg, X), cfg.affinity)
        t_rep = _ms(t0)

        t0 = time.perf_counter()
        W_opt = W if cfg.gbto == "off" else gbto(W, cfg.gbto, cfg.transform, cfg.zero_floor)
        t_gbto = _ms(t0)

        t0 = time.perf_counter()
        pred = spectral_clustering(W_opt, k, seed=seed, restarts=cfg.kmeans_restarts)
        t_spec = _ms(t0)
        wall = _ms(t_start)

        row.update(
            sparsity_before=metrics.sparsity(W, cfg.zero_floor),
            sparsity_after=metrics.sparsity(W_opt, cfg.zero_floor),
        )
        if truth is not None:
            row.update(
                accuracy=metrics.clustering_accuracy(pred, truth),
                nmi=metrics.nmi(pred, truth, cfg.nmi_average),
                connectivity=metrics.connectivity(W_opt, truth, cfg.connectivity_scope),
                connectivity_before=metrics.connectivity(W, truth, cfg.connectivity_scope),
                ncut_before=metrics.ncut_value(W, truth),
                ncut_after=metrics.ncut_value(W_opt, truth),
            )
        if cfg.timing:
            row.update(wall_ms=wall, t_represent_ms=t_rep, t_gbto_ms=t_gbto, t_spectral_ms=t_spec)
        row["status"] = "ok"
    except Exception as exc:  # per-seed isolation
        log.warning("seed %s failed: %s", seed, exc)
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
    return row


def summarize(cfg: ExperimentConfig, rows: list[dict]) -> dict:
    ok = [r for r in rows if r.get("status") == "ok"]
    summary = {
        "run_id": f"{cfg.name}:summary", "method": cfg.method, "mode": cfg.gbto,
        "transform": cfg.transform, "representation": cfg.representation,
        "status": "summary", "n_ok": len(ok),
    }
    if not ok:
        return summary
    for key in ("N", "k"):
        vals = {r[key] for r in ok}
        summary[key] = vals.pop() if len(vals) == 1 else ""
    mean_keys = [
        "accuracy", "nmi", "connectivity", "connectivity_before", "ncut_before", "ncut_after",
        "sparsity_before", "sparsity_after", "wall_ms", "t_represent_ms", "t_gbto_ms", "t_spectral_ms",
    ]
    for key in mean_keys:
        vals = [r[key] for r in ok if key in r]
        if vals:
            summary[key] = float(np.mean(vals))
            if key in ("accuracy", "nmi", "connectivity"):
                summary[f"{key}_std"] = float(np.std(vals))
    if all("ncut_after" in r for r in ok):
        summary["ncut_improved_frac"] = float(np.mean([r["ncut_after"] < r["ncut_before"] for r in ok]))
        summary["connectivity_improved_frac"] = float(
            np.mean([r["connectivity"] >= r["connectivity_before"] for r in ok])
        )
    return summary


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> list[dict]:
    """Run every seed of ``cfg`` and append a summary row. Rows are ordered by seed."""
    cfg.validate()
    if cfg.workers > 1:
        # spawn: forking after the numba OpenMP runtime has started aborts the child
        with ProcessPoolExecutor(cfg.workers, mp_context=multiprocessing.get_context("spawn")) as pool:
            rows = list(pool.map(run_once, [cfg] * len(cfg.seeds), cfg.seeds))
    else:
        rows = [run_once(cfg, s) for s in cfg.seeds]
    rows.append(summarize(cfg, rows))
    if write and cfg.output:
        write_csv(cfg.output, rows, CSV_FIELDS)
    return rows


def parse_method(spec: str) -> dict:
    """``"lsr:hard"`` -> ``{"representation": "lsr", "gbto": "hard"}``."""
    rep, _, mode = spec.partition(":")
    return {"representation": rep.strip().lower(), "gbto": (mode or "off").strip().lower()}


def sweep(cfg: ExperimentConfig, axis: str, values, methods: list[str] | None = None,
          plot_path=None) -> list[dict]:
    """Run ``cfg`` once per value of ``axis`` (and per method), returning long-form rows.

    ``methods`` entries look like ``"lsr:hard"``; by default the config's own
    representation and GBTO mode are used.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")
    variants = [parse_method(m) for m in methods] if methods else [{}]
    rows = []
    for value in values:
        value = float(value) if axis == "lam" else int(value)
        for variant in variants:
            sub = cfg.replace(**{axis: value}, **variant, output=None)
            sub = dataclasses.replace(sub, name=f"{cfg.name}:{axis}={value}:{sub.method}")
            for row in run_experiment(sub, write=False):
                rows.append({"axis": axis, "value": value, **row})
    if cfg.output:
        write_csv(cfg.output, rows, SWEEP_FIELDS)
    if plot_path is None and cfg.output:
        plot_path = Path(cfg.output).with_suffix(".dat")
    if plot_path:
        write_plot_data(plot_path, rows)
    return rows


def plot_table(rows: list[dict], metric: str = "accuracy") -> tuple[list, list[str], np.ndarray]:
    """Per-method mean and std of ``metric`` against the sweep value."""
    xs = sorted({r["value"] for r in rows})
    methods = list(dict.fromkeys(r["method"] for r in rows))
    table = np.full((len(xs), 2 * len(methods)), np.nan)
    for i, x in enumerate(xs):
        for j, m in enumerate(methods):
            vals = [r[metric] for r in rows if r["value"] == x and r["method"] == m
                    and r.get("status") == "ok" and metric in r]
            if vals:
                table[i, 2 * j] = np.mean(vals)
                table[i, 2 * j + 1] = np.std(vals)
    return xs, methods, table


def write_plot_data(path, rows: list[dict]) -> None:
    """Whitespace-separated columns: x, then mean/std of accuracy and NMI per method."""
    blocks = []
    header = ["x"]
    for metric in ("accuracy", "nmi"):
        xs, methods, table = plot_table(rows, metric)
        blocks.append(table)
        for m in methods:
            header += [f"{m}:{metric}_mean", f"{m}:{metric}_std"]
    data = np.column_stack([np.asarray(xs, dtype=float)] + blocks)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for line in data:
            fh.write(" ".join(_fmt(v) for v in line) + "\n")


# ---------------------------------------------------------------- APSP benchmark


def random_distance_graph(n: int, seed: int, p_missing: float = 0.2) -> np.ndarray:
    """Symmetric simulated-distance matrix from a random affinity with a fraction of missing edges."""
    rng = np.random.default_rng(seed)
    W = rng.uniform(0.01, 1.0, (n, n))
    W[rng.random((n, n)) < p_missing] = 0.0
    W = np.triu(W, 1)
    return wdt(W + W.T)


def bench_apsp(sizes=(128, 512, 1024), kernels=("reference", "rows", "blocked"),
               repeats: int = 3, seed: int = 0) -> list[dict]:
    """Time every shortest-path kernel against the reference triple loop."""
    # compile outside the timed region
    tiny = random_distance_graph(8, seed)
    for fn in (fw_reference, fw_rows):
        fn(tiny.copy(), np.zeros(tiny.shape, dtype=np.bool_))
    fw_blocked(tiny.copy(), 4)

    rows = []
    for n in sizes:
        D = random_distance_graph(n, seed)
        ref = shortest_paths(D, "hard", kernel="reference")
        ref_time = None
        for kernel in kernels:
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                out = shortest_paths(D, "hard", kernel=kernel)
                times.append(time.perf_counter() - t0)
            finite = np.isfinite(ref)
            same_inf = bool((np.isinf(out) == ~finite).all())
            diff = float(np.abs(out[finite] - ref[finite]).max(initial=0.0))
            best = min(times)
            if kernel == "reference":
                ref_time = best
            rows.append({
                "n": n, "kernel": kernel, "seconds": best,
                "speedup": ref_time / best if ref_time else "",
                "max_abs_diff": diff if same_inf else float("inf"),
            })
    return rows


# ---------------------------------------------------------------- output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def rows_to_csv(rows: list[dict], fields: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k)) for k in fields})
    return buf.getvalue()


def write_csv(path, rows: list[dict], fields: list[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rows_to_csv(rows, fields), encoding="utf-8")
