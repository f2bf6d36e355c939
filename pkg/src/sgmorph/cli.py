"""Command-line pipelines: extract, compare, cluster, classify, gw, synth.

Exit codes: 0 success, 1 unusable data or parameters, 2 unreadable input.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import ShapeGraphError
from .features import FEATURE_NAMES, extract_features
from .gw import gw_matrix
from .ingest import DEFAULT_SWC_TYPES, load_graph, write_graph_json
from .learn import agglomerative_cluster, pairwise_feature_distances, split_runs, tsne_embed
from .plots import heatmap_svg, scatter_svg
from .popstats import (
    ClampWarning,
    FeatureMatrix,
    adjusted_rand_index,
    distance_matrices,
    group_histograms,
    normalize_features,
    spearman_matrix,
)
from .synth import KINDS, synth_graph
from .tables import read_features, write_features, write_json, write_matrix, write_table

log = logging.getLogger("sgmorph")

SUFFIXES = {"swc": (".swc",), "json": (".json",), "mask": (".png", ".pgm")}
MIN_CLASS_COUNT = 3


class InputError(Exception):
    """Unreadable input (exit code 2)."""


class DataError(Exception):
    """Input readable but unusable for the requested pipeline (exit code 1)."""


@dataclass
class PipelineConfig:
    input: list = field(default_factory=list)
    format: str = "json"
    seed: int = 0
    bins: int = 20
    perplexity: float = 30.0
    iterations: int = 1000
    k: int = 3
    trees: int = 100
    max_depth: Optional[int] = None
    train_frac: float = 0.7
    runs: int = 10
    out: str = "."
    labels: Optional[str] = None
    gw_iters: int = 200
    gw_tol: float = 1e-7
    starts: int = 1
    workers: int = 1
    kind: str = "grid"
    count: int = 10

    POSITIVE = ("bins", "perplexity", "iterations", "k", "trees", "runs", "gw_iters", "gw_tol",
                "starts", "workers", "count")

    def validate(self) -> "PipelineConfig":
        if self.format not in SUFFIXES:
            raise DataError(f"unknown format {self.format!r}; expected swc, json or mask")
        for name in self.POSITIVE:
            if not getattr(self, name) > 0:
                raise DataError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.max_depth is not None and self.max_depth < 1:
            raise DataError("max_depth must be positive")
        if not 0.0 < self.train_frac < 1.0:
            raise DataError(f"train_frac must lie in (0, 1), got {self.train_frac!r}")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if isinstance(d.get("input"), str):
            d["input"] = [d["input"]]
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        return cls.from_dict(json.loads(text))


def _meta(command: str, cfg: PipelineConfig, **params) -> dict:
    return {"tool": "sgmorph", "version": __version__, "command": command, "seed": cfg.seed,
            "params": params}


# -- inputs ---------------------------------------------------------------------

def collect_files(paths, fmt: str) -> list:
    """``(path, default_label)`` for every input file, in sorted order.

    Files found in a subdirectory of an input directory take that
    subdirectory's name as their default label.
    """
    if not paths:
        raise InputError("no --input given")
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            for f in sorted(p.rglob("*")):
                if f.is_file() and f.suffix.lower() in SUFFIXES[fmt]:
                    rel = f.relative_to(p)
                    label = rel.parts[0] if len(rel.parts) > 1 else None
                    out.append((f, label))
        elif p.is_file():
            out.append((p, None))
        else:
            raise InputError(f"cannot read input {str(p)!r}")
    return out


def _extract_one(job):
    path, label, fmt = job
    try:
        g = load_graph(path, fmt, keep_types=DEFAULT_SWC_TYPES, label=label)
    except (ShapeGraphError, ValueError, OSError) as exc:
        return path, None, None, f"{type(exc).__name__}: {exc}"
    if not g.id:
        g = g.replace(id=path.stem)
    fv = extract_features(g)
    return path, g.label, fv, None


# -- shared steps ---------------------------------------------------------------

def _complete_rows(m: FeatureMatrix):
    ok = np.all(np.isfinite(m.values), axis=1)
    excluded = [m.ids[i] for i in np.flatnonzero(~ok)]
    if excluded:
        log.warning("excluding %d samples with missing features: %s", len(excluded), excluded)
    keep = np.flatnonzero(ok)
    labels = None if m.labels is None else tuple(m.labels[i] for i in keep)
    return FeatureMatrix(m.values[keep], tuple(m.ids[i] for i in keep), labels), excluded


def _load_matrix(cfg: PipelineConfig):
    if len(cfg.input) != 1:
        raise InputError("expected exactly one features CSV as --input")
    path = Path(cfg.input[0])
    if not path.is_file():
        raise InputError(f"cannot read features file {str(path)!r}")
    try:
        m = read_features(path, cfg.labels)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from None
    return _complete_rows(m)


def _cluster_outputs(D, ids, truth, cfg: PipelineConfig, out: Path, meta: dict) -> dict:
    n = len(ids)
    if n < 4:
        raise DataError(f"clustering needs at least 4 samples, got {n}")
    if cfg.k > n:
        raise DataError(f"k={cfg.k} exceeds the number of samples ({n})")
    emb = tsne_embed(D, perplexity=cfg.perplexity, iterations=cfg.iterations, seed=cfg.seed)
    labels = agglomerative_cluster(emb, cfg.k)
    meta = dict(meta, params=dict(meta["params"], perplexity_used=emb.perplexity))
    write_table(out / "embedding.csv", ["id", "x", "y", "cluster", "label"],
                [[i, x, y, c, "" if truth is None else t]
                 for i, (x, y), c, t in zip(ids, emb.coords, labels,
                                            truth if truth is not None else [None] * n)],
                meta)
    write_table(out / "clusters.csv", ["id", "cluster"], list(zip(ids, labels)), meta)
    (out / "scatter.svg").write_text(
        scatter_svg(emb.coords, [f"cluster {c}" for c in labels], "t-SNE embedding", ids))
    result = {"final_kl": float(emb.kl_history[-1])}
    ari_path = out / "ari.json"
    if truth is not None:
        ari = adjusted_rand_index(labels, truth)
        write_json(ari_path, dict(meta, ari=ari, k=cfg.k, n=n))
        result["ari"] = ari
    elif ari_path.exists():
        ari_path.unlink()
    return result


# -- commands -------------------------------------------------------------------

def cmd_extract(cfg: PipelineConfig) -> int:
    files = collect_files(cfg.input, cfg.format)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(p, lab, cfg.format) for p, lab in files]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_extract_one, jobs))
    else:
        results = [_extract_one(j) for j in jobs]
    ok, labels, failures, per_graph = [], [], [], {}
    for path, label, fv, err in results:
        if err is not None:
            failures.append({"file": str(path), "reason": err})
        elif fv.missing:
            failures.append({"file": str(path), "id": fv.id,
                             "reason": "; ".join(f"{k}: {v}" for k, v in fv.missing.items())})
        else:
            ok.append(fv)
            labels.append(label)
            per_graph[fv.id] = fv.meta
    for f in failures:
        log.warning("failed %s: %s", f["file"], f["reason"])
    meta = _meta("extract", cfg, format=cfg.format, inputs=len(files))
    if not ok:
        write_json(out / "metadata.json", dict(meta, graphs={}, failures=failures))
        log.error("no graph could be processed")
        return 1
    write_features(out / "features.csv", ok, labels, meta)
    write_json(out / "metadata.json", dict(meta, graphs=per_graph, failures=failures))
    log.info("extracted %d graphs (%d failures)", len(ok), len(failures))
    return 0


def cmd_compare(cfg: PipelineConfig) -> int:
    m, excluded = _load_matrix(cfg)
    if m.labels is None:
        raise DataError("compare needs a label for every sample")
    groups = sorted(set(m.labels))
    if len(groups) < 2:
        raise DataError("compare needs at least 2 groups")
    if m.n_samples < 3:
        raise DataError("compare needs at least 3 samples")
    out = Path(cfg.out)
    (out / "w1_per_feature").mkdir(parents=True, exist_ok=True)
    norm = normalize_features(m)
    R = spearman_matrix(norm)
    summaries = group_histograms(norm, bins=cfg.bins)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ClampWarning)
        md, w1 = distance_matrices(summaries, R)
    clamped = sum(issubclass(w.category, ClampWarning) for w in caught)
    names = [s.group for s in summaries]
    peak = md.max()
    md_norm = md / peak if peak > 0 else md
    meta = _meta("compare", cfg, bins=cfg.bins, excluded=excluded, clamped=clamped,
                 md_max=float(peak), groups={s.group: s.count for s in summaries})
    write_matrix(out / "md_matrix.csv", names, md_norm, meta)
    write_matrix(out / "md_matrix_raw.csv", names, md, meta)
    for f, name in enumerate(FEATURE_NAMES):
        write_matrix(out / "w1_per_feature" / f"{name}.csv", names, w1[f], meta)
    write_matrix(out / "spearman.csv", list(FEATURE_NAMES), R, meta)
    (out / "md_heatmap.svg").write_text(heatmap_svg(md_norm, names, "Normalized MD"))
    return 0


def cmd_cluster(cfg: PipelineConfig) -> int:
    m, excluded = _load_matrix(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    norm = normalize_features(m)
    D = pairwise_feature_distances(norm)
    meta = _meta("cluster", cfg, k=cfg.k, perplexity=cfg.perplexity, iterations=cfg.iterations,
                 excluded=excluded)
    _cluster_outputs(D, list(m.ids), m.labels, cfg, out, meta)
    return 0


def cmd_classify(cfg: PipelineConfig) -> int:
    m, excluded = _load_matrix(cfg)
    if m.labels is None:
        raise DataError("classify needs a label for every sample")
    classes, counts = np.unique(np.array(m.labels, dtype=str), return_counts=True)
    if classes.size < 2:
        raise DataError("classify needs at least 2 classes")
    if counts.min() < MIN_CLASS_COUNT:
        c = classes[np.argmin(counts)]
        raise DataError(f"class {c!r} has {counts.min()} samples; each class needs at least "
                        f"{MIN_CLASS_COUNT} for a stratified split")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    norm = normalize_features(m)
    try:
        rep = split_runs(norm.values, m.labels, train_frac=cfg.train_frac, runs=cfg.runs,
                         seed=cfg.seed, trees=cfg.trees, max_depth=cfg.max_depth)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    meta = _meta("classify", cfg, trees=cfg.trees, max_depth=cfg.max_depth,
                 train_frac=cfg.train_frac, runs=cfg.runs, excluded=excluded,
                 max_features=int(np.sqrt(len(FEATURE_NAMES))), oversampling="smote-center")
    write_json(out / "report.json", dict(meta, report=rep.as_dict()))
    write_table(out / "importances.csv", ["rank", "feature", "mean", "std"],
                [[r + 1, f, mu, sd] for r, (f, mu, sd) in enumerate(rep.ranking())], meta)
    log.info("overall accuracy %.4f +- %.4f", rep.mean["overall_accuracy"],
             rep.std["overall_accuracy"])
    return 0


def cmd_gw(cfg: PipelineConfig, cluster: bool = False) -> int:
    files = collect_files(cfg.input, cfg.format)
    graphs, failures = [], []
    for path, label in files:
        try:
            g = load_graph(path, cfg.format, label=label)
        except (ShapeGraphError, ValueError, OSError) as exc:
            failures.append({"file": str(path), "reason": str(exc)})
            continue
        graphs.append(g if g.id else g.replace(id=path.stem))
    if len(graphs) < 2:
        raise DataError("gw needs at least 2 readable graphs")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    res = gw_matrix(graphs, max_iters=cfg.gw_iters, tol=cfg.gw_tol, seed=cfg.seed,
                    starts=cfg.starts, workers=cfg.workers)
    ids = list(res.ids)
    meta = _meta("gw", cfg, max_iters=cfg.gw_iters, tol=cfg.gw_tol, starts=cfg.starts,
                 failures=failures)
    write_matrix(out / "gw_matrix.csv", ids, res.distances, meta)
    write_matrix(out / "gw_costs.csv", ids, res.costs, meta)
    write_matrix(out / "gw_iterations.csv", ids, res.iterations, meta)
    if cluster:
        labels = [g.label for g in graphs]
        truth = labels if all(lab is not None for lab in labels) else None
        _cluster_outputs(res.distances, ids, truth, cfg, out,
                         dict(meta, params=dict(meta["params"], k=cfg.k,
                                                perplexity=cfg.perplexity)))
    return 0


def cmd_synth(cfg: PipelineConfig) -> int:
    if cfg.kind not in KINDS:
        raise DataError(f"unknown kind {cfg.kind!r}; expected one of {', '.join(KINDS)}")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(cfg.count):
        g = synth_graph(cfg.kind, cfg.seed, i)
        (out / f"{g.id}.json").write_text(write_graph_json(g))
    return 0


# -- argument handling ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", nargs="+", help="input files or directories")
    common.add_argument("--format", choices=sorted(SUFFIXES), help="input format")
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--labels", help="CSV with columns id,label")
    common.add_argument("--workers", type=int)
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="sgmorph", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"sgmorph {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("extract", parents=[common], help="compute the 19 features per graph")
    c = sub.add_parser("compare", parents=[common], help="group distances and correlations")
    c.add_argument("--bins", type=int)
    c = sub.add_parser("cluster", parents=[common], help="t-SNE + agglomerative clustering")
    c.add_argument("--k", type=int)
    c.add_argument("--perplexity", type=float)
    c.add_argument("--iterations", type=int)
    c = sub.add_parser("classify", parents=[common], help="one-vs-rest random forest runs")
    c.add_argument("--trees", type=int)
    c.add_argument("--max-depth", type=int)
    c.add_argument("--train-frac", type=float)
    c.add_argument("--runs", type=int)
    c = sub.add_parser("gw", parents=[common], help="Gromov-Wasserstein distance matrix")
    c.add_argument("--cluster", action="store_true", help="also embed and cluster the matrix")
    c.add_argument("--k", type=int)
    c.add_argument("--perplexity", type=float)
    c.add_argument("--iterations", type=int)
    c.add_argument("--gw-iters", type=int)
    c.add_argument("--starts", type=int)
    c = sub.add_parser("synth", parents=[common], help="write synthetic graphs as JSON")
    c.add_argument("--kind")
    c.add_argument("--count", type=int)
    return p


def config_from_args(args) -> PipelineConfig:
    base = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise InputError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"config is not valid JSON: {exc}") from None
    cfg = PipelineConfig.from_dict(base)
    names = {f.name for f in dataclasses.fields(PipelineConfig)}
    for key, value in vars(args).items():
        if key in names and value is not None:
            setattr(cfg, key, value)
    return cfg.validate()


COMMANDS = {"extract": cmd_extract, "compare": cmd_compare, "cluster": cmd_cluster,
            "classify": cmd_classify, "synth": cmd_synth}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "gw":
            return cmd_gw(cfg, cluster=args.cluster)
        return COMMANDS[args.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
