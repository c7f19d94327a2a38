"""Command-line driver: aligned CSV inputs to flow diagram, commonality report,
embedding, baselines and metrics.

Usage::

    geoflow run --config run.cfg
    geoflow synth --suite flat --out data/
    geoflow verify --suite graph
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from contextlib import contextmanager, nullcontext
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import baselines_metrics as bm
from . import cmr_embedding as ce
from . import diffusion_kernel as dk
from . import evfd
from . import graph_oracle as go
from . import spd_geometry as sg
from . import synthetic as sy
from .errors import (ConfigError, GeoflowError, ParseError, RowCountMismatch, StageError, ValidationError)

GEOMETRIES = ("auto", "spd", "spsd")
INPUT_KINDS = ("points", "kernel")
EMBEDDINGS = (ce.TOP_ELL, ce.COMMON_ONLY)
BASELINES = ("linear", "ad")


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[str, ...]
    output: str = "out"
    input_kind: str = "points"
    epsilon: str | tuple[float, ...] = "median"
    epsilon_scale: float = 1.0
    n_t: int = 200
    k: int = 10
    geometry: str = "auto"
    rank: int | None = None
    rank_tol: float = 1e-8
    product_count: int | None = None
    window: int = 3
    p1: float = 0.05
    p2: float = 0.01
    beam: int = 64
    estimator: str = ce.DISPERSION
    threshold: float = ce.DEFAULT_THRESHOLD
    embedding: str = ce.TOP_ELL
    ell: int = 2
    baselines: tuple[str, ...] = ()
    ad_steps: int = 1
    target: str | None = None
    metric_ells: tuple[int, ...] = (1, 2, 5, 10)
    seed: int = 0

    def __post_init__(self):
        if not 2 <= len(self.inputs) <= 3:
            raise ConfigError(f"need 2 or 3 inputs, got {len(self.inputs)}")
        if self.input_kind not in INPUT_KINDS:
            raise ConfigError(f"input_kind must be one of {INPUT_KINDS}")
        if isinstance(self.epsilon, str):
            if self.epsilon != "median":
                raise ConfigError("epsilon must be 'median' or one positive value per view")
        elif len(self.epsilon) != len(self.inputs) or min(self.epsilon) <= 0:
            raise ConfigError("epsilon needs one positive value per input")
        if not self.epsilon_scale > 0:
            raise ConfigError("epsilon_scale must be positive")
        if self.n_t < 2 or self.k < 1:
            raise ConfigError("need n_t >= 2 and k >= 1")
        if self.geometry not in GEOMETRIES:
            raise ConfigError(f"geometry must be one of {GEOMETRIES}")
        if self.rank is not None and self.rank < 1:
            raise ConfigError("rank must be positive")
        if not 0 < self.rank_tol < 1:
            raise ConfigError("rank_tol must lie in (0, 1)")
        if self.product_count is not None and self.product_count < 1:
            raise ConfigError("product_count must be positive")
        if self.window < 2 or self.beam < 1:
            raise ConfigError("need window >= 2 and beam >= 1")
        if not (self.p1 > 0 and self.p2 > 0 and self.p1 + self.p2 < 1):
            raise ConfigError("need p1 > 0, p2 > 0 and p1 + p2 < 1")
        if self.estimator not in (ce.ARCLENGTH, ce.DISPERSION):
            raise ConfigError("estimator must be arclength or dispersion")
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.embedding not in EMBEDDINGS:
            raise ConfigError(f"embedding must be one of {EMBEDDINGS}")
        if self.ell < 1 or self.ad_steps < 1:
            raise ConfigError("need ell >= 1 and ad_steps >= 1")
        unknown = set(self.baselines) - set(BASELINES)
        if unknown:
            raise ConfigError(f"unknown baselines {sorted(unknown)}")
        if any(e < 1 for e in self.metric_ells):
            raise ConfigError("metric_ells must be positive")


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _parse_value(name: str, raw: str, kind):
    try:
        if name in ("inputs",):
            return tuple(_split(raw))
        if name == "baselines":
            return () if raw.strip().lower() in ("", "none") else tuple(_split(raw))
        if name == "metric_ells":
            return () if raw.strip().lower() == "none" else tuple(int(v) for v in _split(raw))
        if name == "epsilon":
            return "median" if raw.strip() == "median" else tuple(float(v) for v in _split(raw))
        if name in ("rank", "product_count", "target"):
            if raw.strip().lower() in ("", "auto", "none"):
                return None
            return raw.strip() if name == "target" else int(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


_KINDS = {"n_t": int, "k": int, "window": int, "beam": int, "ell": int, "ad_steps": int, "seed": int,
          "epsilon_scale": float, "rank_tol": float, "p1": float, "p2": float, "threshold": float}


def parse_config(text: str, base_dir: str | Path | None = None) -> RunConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment. Relative paths are
    taken relative to ``base_dir``."""
    names = {f.name for f in fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in names:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw, _KINDS.get(key, str))
    if "inputs" not in values:
        raise ConfigError("missing required key 'inputs'")
    if base_dir is not None:
        base = Path(base_dir)
        resolve = lambda p: str((base / p).resolve())  # noqa: E731
        values["inputs"] = tuple(resolve(p) for p in values["inputs"])
        for key in ("output", "target"):
            if values.get(key):
                values[key] = resolve(values[key])
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, path.parent)


def _fmt(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value) if value else "none"
    return str(value)


def format_config(cfg: RunConfig) -> str:
    """Inverse of parse_config: the output parses back to an equal config."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if f.name == "target" and value is None:
            value = "none"
        lines.append(f"{f.name} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- CSV


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_numeric_csv(path) -> np.ndarray:
    """Comma-separated numbers with an optional single header row."""
    path = str(path)
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh)]
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc}", path) from exc
    numbered = [(i + 1, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if numbered and not all(_is_number(c) for c in numbered[0][1]):
        numbered = numbered[1:]
    if not numbered:
        raise ParseError("no data rows", path)
    width = len(numbered[0][1])
    out = np.empty((len(numbered), width))
    for i, (lineno, row) in enumerate(numbered):
        if len(row) != width:
            raise ParseError(f"expected {width} columns, found {len(row)}", path, lineno)
        for j, cell in enumerate(row):
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r}", path, lineno, j + 1) from None
    return out


def load_aligned_csv(paths) -> list[np.ndarray]:
    """One array per file; row i of every file belongs to sample i."""
    data = [read_numeric_csv(p) for p in paths]
    counts = [len(d) for d in data]
    if len(set(counts)) > 1:
        raise RowCountMismatch(f"row counts differ across inputs: {counts}")
    return data


def write_csv(path, array, header=None) -> None:
    array = np.atleast_2d(np.asarray(array, dtype=float))
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in array:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


# ---------------------------------------------------------------- pipeline


@dataclass
class RunReport:
    config: RunConfig
    diagram: dict
    embedding: np.ndarray | None
    embedding_header: list[str]
    metrics: list[tuple]
    timings: dict = field(default_factory=dict)
    objects: dict = field(default_factory=dict)  # in-memory results for callers

    @property
    def provenance(self) -> str:
        """Version line plus the config echo. Timings are kept out so that the
        written files are byte-identical across repeated runs."""
        return f"# geoflow {__version__}\n" + format_config(self.config)

    def timing_lines(self) -> str:
        return "".join(f"time {k} = {v:.3f} s\n" for k, v in self.timings.items())


@contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except GeoflowError as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - start


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def view_epsilons(datasets, cfg: RunConfig) -> list[float]:
    if cfg.epsilon == "median":
        return [cfg.epsilon_scale * dk.median_scale(d) for d in datasets]
    return [cfg.epsilon_scale * e for e in cfg.epsilon]


def numerical_rank(matrix: np.ndarray, tol: float) -> int:
    values = sg.evd(matrix).values
    return int(np.sum(values > tol * values[0]))


def select_path(kernels, cfg: RunConfig):
    """Geodesic path for the chosen geometry; ``auto`` switches to the
    fixed-rank curve when either kernel is not numerically positive definite."""
    geometry = cfg.geometry
    if geometry == "auto":
        geometry = "spd" if all(sg.is_positive_definite(k) for k in kernels) else "spsd"
    if geometry == "spd":
        return sg.GeodesicPath(sg.SPDKernel(kernels[0]), sg.SPDKernel(kernels[1])), "spd", None
    rank = cfg.rank if cfg.rank is not None else min(numerical_rank(k, cfg.rank_tol) for k in kernels)
    a, b = (sg.truncate_to_rank(k, rank) for k in kernels)
    return sg.SPSDPath(a, b), "spsd", rank


def _targets(cfg: RunConfig, n: int):
    if cfg.target is None:
        return None
    (target,) = load_aligned_csv([cfg.target])
    if len(target) != n:
        raise RowCountMismatch(f"target has {len(target)} rows, inputs have {n}")
    return target.T


def _metric_rows(kernels_by_name: dict, target, ells, t) -> list[tuple]:
    """Smoothness of every target column under every compared kernel."""
    rows = []
    if target is None:
        return rows
    for name, k in kernels_by_name.items():
        use = [e for e in ells if e <= k.shape[0]]
        for j, signal in enumerate(target):
            scores = bm.smoothness_profile(k, signal, use)
            rows += [(name, t, j, e, float(s)) for e, s in zip(use, scores)]
    return rows


def run_pipeline(cfg: RunConfig) -> RunReport:
    timings: dict = {}
    with _stage("load", timings):
        datasets = load_aligned_csv(cfg.inputs)
        n = len(datasets[0])
        target = _targets(cfg, n)
    with _stage("kernel", timings):
        bundles = None
        if cfg.input_kind == "kernel":
            kernels = [sg.symmetrize(np.asarray(d)) for d in datasets]
            for d in datasets:
                if d.shape[0] != d.shape[1]:
                    raise ValidationError("kernel inputs must be square matrices")
            epsilons = [float("nan")] * len(kernels)
        else:
            epsilons = view_epsilons(datasets, cfg)
            bundles = [dk.build_kernel(d, e) for d, e in zip(datasets, epsilons)]
            kernels = [b.kernel for b in bundles]
    if len(kernels) == 3:
        return _run_hull(cfg, kernels, epsilons, timings)

    with _stage("diagram", timings):
        path, geometry, rank = select_path(kernels, cfg)
        diagram = evfd.diagram_along(path, cfg.n_t, cfg.k, True, geometry, rank)
    with _stage("tracking", timings):
        traj = evfd.track_trajectories(diagram, cfg.window, cfg.p1, cfg.p2, max(cfg.beam, diagram.n_components))
    with _stage("commonality", timings):
        product_passes = None
        if cfg.estimator == ce.ARCLENGTH:
            scores = ce.commonality_arclength(diagram, traj)
            report = ce.cmr_curve(diagram, scores, ce.ARCLENGTH, traj, cfg.threshold)
        else:
            limit = rank if rank is not None else n
            count = cfg.product_count or (rank if rank is not None else 4 * diagram.n_components)
            basis = ce.product_subspace_eigenvectors(path, cfg.n_t, min(count, limit))
            product_passes = basis.passes
            report = ce.cmr_curve(diagram, ce.dispersion_scores(diagram, basis), ce.DISPERSION, traj,
                                  cfg.threshold)
    with _stage("embedding", timings):
        t_embed = report.t_star if report.t_star is not None else 0.5
        gamma = path.at(t_embed)
        embedding, header = None, []
        mode = cfg.embedding
        if mode == ce.COMMON_ONLY and not report.common_set:
            mode = None
        if mode is not None:
            emb = ce.common_embedding(gamma, report, cfg.ell, mode)
            embedding = emb.coordinates
            header = [f"phi{i}" for i in emb.indices]
    with _stage("baselines", timings):
        dense = gamma.matrix if isinstance(gamma, sg.SPSDKernel) else np.asarray(gamma)
        compared = {"geodesic": dense, "view1": kernels[0], "view2": kernels[1]}
        if "linear" in cfg.baselines:
            compared["linear"] = bm.linear_interpolation_point(kernels[0], kernels[1], t_embed).matrix
        if "ad" in cfg.baselines and bundles is not None:
            compared["ad"] = bm.alternating_diffusion_kernel(bundles[0], bundles[1], cfg.ad_steps).kernel
        metrics = _metric_rows(compared, target, cfg.metric_ells, t_embed)

    trajectory_ids = np.argsort(traj.permutations, axis=1)
    diagram_json = {
        "grid": diagram.grid,
        "eigenvalues": diagram.eigenvalues,
        "trajectories": trajectory_ids,
        "w": report.weights,
        "cmr": report.cmr,
        "t_star": report.t_star,
        "common_set": list(report.common_set),
        "meta": {
            "version": __version__,
            "n": n,
            "geometry": geometry,
            "rank": rank,
            "epsilons": epsilons,
            "estimator": report.estimator,
            "threshold": report.threshold,
            "t_star_index": report.t_star_index,
            "noncommon_set": list(report.noncommon_set),
            "embedding_t": t_embed,
            "embedding_mode": mode,
            "product_passes": product_passes,
            "tracking_log_score": traj.log_score,
            "notes": list(traj.notes) + list(report.diagnostics),
            "seed": cfg.seed,
            "indexing": "0-based columns in descending eigenvalue order",
        },
    }
    return RunReport(cfg, _jsonable(diagram_json), embedding, header, metrics, timings,
                     {"diagram": diagram, "report": report, "trajectories": traj, "path": path})


def _run_hull(cfg: RunConfig, kernels, epsilons, timings) -> RunReport:
    with _stage("hull", timings):
        if cfg.geometry == "spsd":
            raise ValidationError("three-input diagrams need the positive-definite geometry")
        spectra = sy.convex_hull_spectra(*kernels, cfg.n_t, cfg.k + 1)
    grid = evfd.uniform_grid(cfg.n_t)
    doc = {
        "grid": grid,
        "eigenvalues": spectra,
        "trajectories": None,
        "w": None,
        "cmr": None,
        "t_star": None,
        "common_set": [],
        "meta": {
            "version": __version__,
            "n": kernels[0].shape[0],
            "geometry": "spd",
            "epsilons": epsilons,
            "layout": "eigenvalues[i][j] lists the spectrum at (t1, t2) = (grid[i], grid[j])",
            "seed": cfg.seed,
        },
    }
    return RunReport(cfg, _jsonable(doc), None, [], [], timings, {"spectra": spectra})


def write_report(report: RunReport, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "diagram.json", "w") as fh:
        json.dump(report.diagram, fh, indent=1, sort_keys=False)
        fh.write("\n")
    if report.embedding is not None:
        write_csv(out / "embedding.csv", report.embedding, report.embedding_header)
    with open(out / "metrics.csv", "w", newline="") as fh:
        fh.write("method,t,signal,ell,smoothness\n")
        for name, t, j, ell, score in report.metrics:
            fh.write(f"{name},{'%.17g' % t},{j},{ell},{'%.17g' % score}\n")
    (out / "provenance.cfg").write_text(report.provenance)
    if "diagram" in report.objects:
        emit_diagram_svg(report.objects["diagram"], report.objects["report"], out / "diagram.svg")


# ---------------------------------------------------------------- SVG

_W, _H, _PAD = 640, 480, 60


def _color(w: float) -> str:
    """Blue for common (w = 0) through red for specific (w = 1)."""
    w = min(max(float(w), 0.0), 1.0)
    r, g, b = int(round(40 + 200 * w)), int(round(90 - 40 * w)), int(round(220 - 180 * w))
    return f"#{r:02x}{g:02x}{b:02x}"


def emit_diagram_svg(diagram, report, path) -> None:
    """Scatter of (log eigenvalue, t), coloured by the commonality weight."""
    values = np.asarray(diagram.eigenvalues, dtype=float)
    if values.size == 0:
        raise ValidationError("empty diagram")
    grid = np.asarray(diagram.grid, dtype=float)
    weights = None if report is None else np.asarray(report.weights)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(values)
    finite = np.isfinite(logs)
    lo, hi = (logs[finite].min(), logs[finite].max()) if finite.any() else (0.0, 1.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    tlo, thi = grid.min(), grid.max()
    if thi - tlo < 1e-12:
        tlo, thi = tlo - 0.5, thi + 0.5

    def sx(v):
        return _PAD + (v - lo) / (hi - lo) * (_W - 2 * _PAD)

    def sy_(t):
        return _H - _PAD - (t - tlo) / (thi - tlo) * (_H - 2 * _PAD)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text x="{_W / 2:.1f}" y="{_H - 20}" text-anchor="middle" font-size="14">log eigenvalue</text>',
        f'<text x="20" y="{_H / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 20 {_H / 2:.1f})">t</text>',
        f'<text x="{_PAD}" y="{_H - _PAD + 16}" font-size="11">{lo:.3f}</text>',
        f'<text x="{_W - _PAD}" y="{_H - _PAD + 16}" text-anchor="end" font-size="11">{hi:.3f}</text>',
        f'<text x="{_PAD - 6}" y="{_H - _PAD}" text-anchor="end" font-size="11">{tlo:.2f}</text>',
        f'<text x="{_PAD - 6}" y="{_PAD + 4}" text-anchor="end" font-size="11">{thi:.2f}</text>',
    ]
    for i, t in enumerate(grid):
        for k in range(values.shape[1]):
            if not finite[i, k]:
                continue
            fill = "#808080" if weights is None else _color(weights[i, k])
            parts.append(f'<circle cx="{sx(logs[i, k]):.2f}" cy="{sy_(t):.2f}" r="2" fill="{fill}"/>')
    if report is not None and report.t_star is not None:
        y = sy_(report.t_star)
        parts.append(f'<line x1="{_PAD}" y1="{y:.2f}" x2="{_W - _PAD}" y2="{y:.2f}" stroke="red" '
                     'stroke-dasharray="4 3"/>')
    if report is None:
        legend = "no commonality report"
    elif report.common_set:
        legend = "common: " + ", ".join(str(c) for c in report.common_set)
    else:
        legend = "no common components"
    parts.append(f'<text x="{_W - _PAD}" y="{_PAD - 20}" text-anchor="end" font-size="12">{legend}</text>')
    parts.append("</svg>")
    try:
        Path(path).write_text("\n".join(parts) + "\n")
    except OSError as exc:
        raise GeoflowError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------- synth / verify


def _write_config(out: Path, text: str) -> None:
    (out / "run.cfg").write_text(text)


def synth_flat(out: Path, n: int, seed: int, scales=(2.0, 2.0, 2.0, 2.0)) -> None:
    s1, s2, lat = sy.gen_flat_2d(n, sy.ScaleSet(*scales), seed)
    write_csv(out / "view1.csv", s1, ["a", "b"])
    write_csv(out / "view2.csv", s2, ["a", "b"])
    write_csv(out / "latent.csv", np.column_stack([lat.x, lat.y, lat.z]), ["x", "y", "z"])
    _write_config(out, "# flat-manifold pair\ninputs = view1.csv, view2.csv\ntarget = latent.csv\n"
                       "epsilon = median\nepsilon_scale = 0.1\nn_t = 200\nk = 20\n"
                       f"seed = {seed}\noutput = result\n")


def synth_torus(out: Path, n: int, seed: int) -> None:
    s1, s2, lat = sy.gen_torus(n, seed=seed)
    write_csv(out / "view1.csv", s1, ["a", "b", "c"])
    write_csv(out / "view2.csv", s2, ["a", "b", "c"])
    write_csv(out / "latent.csv", np.column_stack([lat.x, lat.y, lat.z]), ["x", "y", "z"])
    _write_config(out, "# torus pair sharing one angle\ninputs = view1.csv, view2.csv\ntarget = latent.csv\n"
                       f"epsilon = median\nepsilon_scale = 0.1\nk = 20\nseed = {seed}\noutput = result\n")


def synth_graph(out: Path, seed: int, n: int = 11, m: int = 31) -> None:
    perm = go.Permutation.random(m, np.random.default_rng(seed))
    write_csv(out / "kernel1.csv", go.product_kernel(n, m))
    write_csv(out / "kernel2.csv", go.permuted_kernel(n, m, perm))
    with open(out / "permutation.csv", "w") as fh:
        fh.write("node,image\n" + "".join(f"{i},{j}\n" for i, j in enumerate(perm.images)))
    _write_config(out, "# cycle-graph product kernels\ninputs = kernel1.csv, kernel2.csv\n"
                       f"input_kind = kernel\ngeometry = spd\nk = 20\nseed = {seed}\noutput = result\n")


def _threads(count):
    if not count:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=count)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoflow", description=__doc__.split("\n")[0])
    parser.add_argument("--seed", type=int, default=None, help="override the random seed")
    parser.add_argument("--threads", type=int, default=None, help="cap BLAS threads")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the pipeline on a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None, help="output directory (overrides the config)")
    synth = sub.add_parser("synth", help="write a synthetic suite as CSV plus a config")
    synth.add_argument("--suite", choices=("flat", "torus", "graph"), required=True)
    synth.add_argument("--out", required=True)
    synth.add_argument("--n", type=int, default=1000)
    synth.add_argument("--scales", default="2,2,2,2", help="flat suite: lx1,lx2,ly1,lz2")
    verify = sub.add_parser("verify", help="check closed-form results")
    verify.add_argument("--suite", choices=("graph",), required=True)
    verify.add_argument("--trials", type=int, default=2000)
    verify.add_argument("--out", default=None, help="write the JSON report here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _threads(args.threads):
            if args.command == "run":
                cfg = load_config(args.config)
                if args.seed is not None:
                    cfg = replace(cfg, seed=args.seed)
                if args.out is not None:
                    cfg = replace(cfg, output=str(Path(args.out).resolve()))
                report = run_pipeline(cfg)
                write_report(report, cfg.output)
                sys.stderr.write(report.timing_lines())
                print(f"wrote {cfg.output}")
            elif args.command == "synth":
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                seed = 0 if args.seed is None else args.seed
                if args.suite == "flat":
                    try:
                        scales = tuple(float(s) for s in args.scales.split(","))
                    except ValueError:
                        raise ValidationError(f"bad scales {args.scales!r}") from None
                    if len(scales) != 4:
                        raise ValidationError("flat suite needs four scales")
                    synth_flat(out, args.n, seed, scales)
                elif args.suite == "torus":
                    synth_torus(out, args.n, seed)
                else:
                    synth_graph(out, seed)
                print(f"wrote {out}")
            else:
                seed = 0 if args.seed is None else args.seed
                result = go.verify_graph(trials=args.trials, seed=seed)
                text = json.dumps(_jsonable(result), indent=1) + "\n"
                if args.out:
                    Path(args.out).write_text(text)
                sys.stdout.write(text)
                if not result["all_passed"]:
                    failed = [k for k, v in result["checks"].items() if not v["passed"]]
                    print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
                    return 3
    except GeoflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
