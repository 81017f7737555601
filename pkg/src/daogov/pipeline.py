"""Pipeline stages: each reads earlier stage outputs and writes its own directory atomically."""
from __future__ import annotations

import dataclasses
import hashlib
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import atomic_dir, json_text, read_csv, read_json, write_csv, write_json
from .covote import (
    VARIANTS,
    build_bipartite,
    centralities,
    communities_and_concentration,
    contributors_network,
    group_summaries,
    network_stats,
    project,
    top_spaces_by_tvl,
    welch_test,
)
from .covote.centrality import MEASURES
from .covote.contributors import component_size_rows
from .covote.export import write_edges, write_nodes, write_stats
from .covote.stats import TABLE_ROWS
from .errors import ConfigurationError, PrerequisiteError
from .ingestion import FILES, DatasetBundle, clean, dump_bundle, load_bundle, match_tvl
from .metrics import DISPLAY_THRESHOLD, SPACE_METRIC_COLUMNS, space_metrics
from .model import VoteIndex, rank_outcome
from .shifts import aggregate_shifts, detect_all, per_space_counts, write_histogram, write_series
from .strategy import STATUSES, FixtureBalanceProvider, RpcBalanceProvider, validate

log = logging.getLogger(__name__)

STAGES = ("ingest", "clean", "metrics", "network", "validate", "shifts", "report")
REQUIRES = {
    "ingest": (),
    "clean": ("ingest",),
    "metrics": ("clean",),
    "network": ("clean",),
    "validate": ("clean",),
    "shifts": ("validate",),
    "report": ("metrics", "network"),
}
OPTIONAL = {"report": ("validate", "shifts")}
MARKER = "stage.json"
BALANCES = "balances.jsonl"


@dataclass(frozen=True)
class RunConfig:
    input_dir: Path
    out_dir: Path
    threshold: int = 10
    lookback_days: int = 100
    seed: int = 0
    workers: int = 1
    provider: str = "fixture"
    rpc_endpoint: str | None = None
    balances: Path | None = None
    min_tvl: float = 100_000.0
    top_k: int = 500
    top_tvl: int = 100
    sw_replicates: int = 5
    swaps_per_edge: int = 10
    apl_exact_below: int = 100_000
    apl_sources: int = 1000
    betweenness_exact_below: int = 10_000
    betweenness_pivots: int = 500
    bootstrap_replicates: int = 100_000
    variants: tuple[str, ...] = VARIANTS
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        positive = ("lookback_days", "workers", "top_k", "top_tvl", "sw_replicates", "swaps_per_edge",
                    "apl_exact_below", "apl_sources", "betweenness_exact_below", "betweenness_pivots",
                    "bootstrap_replicates")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.threshold < 0 or self.seed < 0 or self.min_tvl < 0:
            raise ConfigurationError("threshold, seed and min_tvl must be non-negative")
        if self.provider not in ("fixture", "rpc"):
            raise ConfigurationError(f"unknown provider {self.provider!r}")
        bad = set(self.variants) - set(VARIANTS)
        if bad:
            raise ConfigurationError(f"unknown variants {sorted(bad)}")

    def knobs(self) -> dict:
        """Settings that change results; paths and the endpoint are excluded."""
        skip = {"input_dir", "out_dir", "balances", "rpc_endpoint", "extra", "workers"}
        out = {}
        for f in dataclasses.fields(self):
            if f.name not in skip:
                v = getattr(self, f.name)
                out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(json_text(self.knobs(), indent=None).encode()).hexdigest()[:16]

    def meta(self, stage: str, **more) -> dict:
        m = {"config_hash": self.config_hash, "seed": self.seed, "stage": stage, "tool": f"daogov {__version__}"}
        m.update(more)
        return m

    def stage_dir(self, stage: str) -> Path:
        return self.out_dir / stage


def require(cfg: RunConfig, stage: str) -> None:
    for dep in REQUIRES[stage]:
        if not (cfg.stage_dir(dep) / MARKER).exists():
            raise PrerequisiteError(stage, dep)


def _finish(cfg: RunConfig, stage: str, tmp: Path, summary: dict) -> None:
    files = sorted(str(p.relative_to(tmp)) for p in tmp.rglob("*") if p.is_file())
    write_json(tmp / MARKER, {"files": files, "config": cfg.knobs(), "summary": summary}, cfg.meta(stage))


def _bundle(cfg: RunConfig, stage: str) -> DatasetBundle:
    return load_bundle(cfg.stage_dir(stage) / "bundle")


def _tvl(cfg: RunConfig) -> dict[str, float]:
    _, data = read_json(cfg.stage_dir("ingest") / "tvl_match.json")
    return data["tvl"]


def input_digest(cfg: RunConfig) -> str:
    h = hashlib.sha256()
    for name in sorted(FILES.values()):
        p = cfg.input_dir / name
        h.update(name.encode())
        h.update(p.read_bytes() if p.exists() else b"")
    return h.hexdigest()[:16]


# --- stages -------------------------------------------------------------------


def stage_ingest(cfg: RunConfig) -> dict:
    if not cfg.input_dir.is_dir():
        raise ConfigurationError(f"input directory {cfg.input_dir} does not exist")
    bundle = load_bundle(cfg.input_dir)
    tvl = match_tvl(bundle.spaces, bundle.tvl_records)
    summary = {"counts": bundle.counts(), "tvl_records": len(bundle.tvl_records), "input_digest": input_digest(cfg)}
    meta = cfg.meta("ingest", input_digest=summary["input_digest"])
    with atomic_dir(cfg.stage_dir("ingest")) as tmp:
        dump_bundle(bundle, tmp / "bundle", meta)
        write_json(tmp / "tvl_match.json", tvl.to_json(), meta)
        _finish(cfg, "ingest", tmp, summary)
    return summary


def stage_clean(cfg: RunConfig) -> dict:
    require(cfg, "clean")
    bundle = _bundle(cfg, "ingest")
    cleaned, report = clean(bundle, _tvl(cfg), min_tvl=cfg.min_tvl, top_k=cfg.top_k)
    meta = cfg.meta("clean")
    with atomic_dir(cfg.stage_dir("clean")) as tmp:
        dump_bundle(cleaned, tmp / "bundle", meta)
        write_json(tmp / "cleaning_report.json", report.to_json(), meta)
        _finish(cfg, "clean", tmp, {"after": report.after})
    return report.to_json()


def stage_metrics(cfg: RunConfig) -> dict:
    require(cfg, "metrics")
    b = _bundle(cfg, "clean")
    results = space_metrics(b.proposals, b.votes, b.contributions)
    rows = [m.row() for m in results]
    meta = cfg.meta("metrics")
    other_rows = []
    for m in results:
        for pid, flag in sorted(m.other.flags.items()):
            other_rows.append({"space": m.space, "proposal": pid, "other_decided": int(flag)})
    with atomic_dir(cfg.stage_dir("metrics")) as tmp:
        write_csv(tmp / "space_metrics.csv", SPACE_METRIC_COLUMNS, rows, meta)
        write_csv(tmp / "other_decisions.csv", ("space", "proposal", "other_decided"), other_rows, meta)
        _finish(cfg, "metrics", tmp, {"spaces": len(rows)})
    return {"spaces": len(rows)}


def _outcomes(b: DatasetBundle):
    index = VoteIndex.build(b.votes)
    return {p.id: rank_outcome(index.get(p.id), p.n_options) for p in b.proposals}


def stage_network(cfg: RunConfig) -> dict:
    require(cfg, "network")
    b = _bundle(cfg, "clean")
    tvl = {s.id: (s.tvl_usd or 0.0) for s in b.spaces}
    tvl.update(_tvl(cfg))
    top = top_spaces_by_tvl({s: tvl[s] for s in {p.space for p in b.proposals} if s in tvl}, cfg.top_tvl)
    bip = build_bipartite(b.votes, b.proposals)
    outcomes = _outcomes(b)
    contributors = {c.user for c in b.contributions}
    meta = cfg.meta("network")
    table = {}
    summary = {}
    with atomic_dir(cfg.stage_dir("network")) as tmp:
        for variant in cfg.variants:
            g = project(bip, variant, cfg.threshold, outcomes, top, contributors)
            d = tmp / variant
            d.mkdir()
            write_edges(d / "edges.csv", g, meta)
            summary[variant] = {"nodes": g.n_nodes, "edges": g.n_edges}
            if g.n_nodes == 0:
                write_json(d / "stats.json", None, {**meta, "notice": "empty graph"})
                table[variant] = {}
                continue
            stats = network_stats(
                g, cfg.seed, cfg.sw_replicates, cfg.swaps_per_edge, cfg.apl_exact_below, cfg.apl_sources,
            )
            write_stats(d / "stats.json", stats, {**meta, "apl_exact": stats.apl_exact})
            table[variant] = stats.to_json()
            giant = g.giant_component()
            cent = centralities(giant, cfg.seed, cfg.betweenness_exact_below, cfg.betweenness_pivots)
            conc = communities_and_concentration(g, cfg.seed, cfg.bootstrap_replicates)
            write_nodes(d / "nodes.csv", cent, conc.assignment.membership, meta)
            write_json(d / "concentration.json", conc.to_json(), meta)
            crow = []
            for s in group_summaries(cent):
                crow.append(s.row())
            write_csv(d / "centrality_summary.csv", ("measure", "group", "statistic", "n", "estimate", "ci_low",
                                                     "ci_high"), crow, meta)
            tests = [{"measure": m, "welch_p": welch_test(cent, m)} for m in MEASURES]
            write_csv(d / "centrality_tests.csv", ("measure", "welch_p"), tests, meta)
            write_csv(d / "communities.csv", ("community", "n_nodes", "n_contributors", "n_noncontributors"),
                      _community_rows(conc.assignment.membership, giant.contributor), meta)
        rows = [{"statistic": name, **{v: table[v].get(name) for v in cfg.variants}} for name in TABLE_ROWS.values()]
        write_csv(tmp / "stats_table.csv", ("statistic", *cfg.variants), rows, meta)
        net, proj = contributors_network(b.contributions)
        write_csv(tmp / "contributors_component_sizes.csv", ("component_size", "n_components"),
                  component_size_rows(net), meta)
        write_csv(tmp / "contributors_space_projection.csv", ("src", "dst", "weight"), proj.rows(), meta)
        _finish(cfg, "network", tmp, summary)
    return summary


def _community_rows(membership: np.ndarray, contributor: np.ndarray) -> list[dict]:
    n = int(membership.max()) + 1 if len(membership) else 0
    sizes = np.bincount(membership, minlength=n)
    contrib = np.bincount(membership[contributor.astype(bool)], minlength=n)
    return [
        {"community": c, "n_nodes": int(sizes[c]), "n_contributors": int(contrib[c]),
         "n_noncontributors": int(sizes[c] - contrib[c])}
        for c in range(n)
    ]


def make_provider(cfg: RunConfig):
    if cfg.provider == "rpc":
        return RpcBalanceProvider(cfg.rpc_endpoint)
    path = cfg.balances or cfg.input_dir / BALANCES
    if not Path(path).exists():
        raise ConfigurationError(f"fixture provider needs a balances file; {path} not found")
    return FixtureBalanceProvider.from_jsonl(path)


def stage_validate(cfg: RunConfig, provider=None) -> dict:
    require(cfg, "validate")
    b = _bundle(cfg, "clean")
    provider = provider or make_provider(cfg)
    out = validate(b.votes, b.proposals, provider, workers=cfg.workers)
    meta = cfg.meta("validate", provider=cfg.provider)
    per_space = [{"space": s, **row} for s, row in out.per_space().items()]
    counts = {s: out.counts().get(s, 0) for s in STATUSES}
    with atomic_dir(cfg.stage_dir("validate")) as tmp:
        write_csv(tmp / "vote_status.csv", ("proposal", "user", "space", "status", "recomputed", "reported"),
                  sorted((c.row() for c in out.checks), key=lambda r: (r["proposal"], r["user"])), meta)
        write_csv(tmp / "per_space.csv", ("space", *STATUSES), per_space, meta)
        write_csv(tmp / "mismatch_table.csv", ("space", "token", "error", "count"), out.mismatch_table(), meta)
        write_json(tmp / "validated.json", {
            "spaces": out.validated_spaces(),
            "proposals": out.validated_proposals(),
            "excluded_proposals": out.excluded_proposals,
            "counts": counts,
        }, meta)
        _finish(cfg, "validate", tmp, counts)
    return counts


def stage_shifts(cfg: RunConfig, provider=None) -> dict:
    require(cfg, "shifts")
    require(cfg, "validate")
    b = _bundle(cfg, "clean")
    _, validated = read_json(cfg.stage_dir("validate") / "validated.json")
    keep = set(validated["proposals"])
    provider = provider or make_provider(cfg)
    props = [p for p in b.proposals if p.id in keep]
    votes = [v for v in b.votes if v.proposal in keep]
    series = detect_all(props, votes, provider, cfg.lookback_days, b.contributions, cfg.workers)
    summary = aggregate_shifts(series, cfg.lookback_days)
    meta = cfg.meta("shifts", provider=cfg.provider)
    with atomic_dir(cfg.stage_dir("shifts")) as tmp:
        write_histogram(tmp / "histogram.csv", summary, meta)
        write_series(tmp / "series.json", series, meta)
        write_json(tmp / "summary.json", summary.to_json(), meta)
        write_csv(tmp / "per_space.csv", ("space", "n_proposals", "n_shifted", "n_shifts"),
                  per_space_counts(series), meta)
        _finish(cfg, "shifts", tmp, summary.to_json())
    return summary.to_json()


def monthly_activity(b: DatasetBundle) -> list[dict]:
    """Proposals created per calendar month (UTC) and their mean vote count."""
    index = VoteIndex.build(b.votes)
    acc: dict[str, list[int]] = defaultdict(list)
    for p in b.proposals:
        if p.created is None:
            continue
        month = datetime.fromtimestamp(p.created, tz=timezone.utc).strftime("%Y-%m")
        acc[month].append(len(index.get(p.id)))
    return [
        {"month": m, "n_proposals": len(v), "avg_votes": sum(v) / len(v)}
        for m, v in sorted(acc.items())
    ]


def stage_report(cfg: RunConfig) -> dict:
    require(cfg, "report")
    meta = cfg.meta("report")
    _, rows = read_csv(cfg.stage_dir("metrics") / "space_metrics.csv")
    involvement = sorted((r for r in rows if r["mean"] != ""), key=lambda r: (-float(r["mean"]), r["space"]))
    self_dec = sorted(
        (r for r in rows if float(r["self_decisions"]) > DISPLAY_THRESHOLD),
        key=lambda r: (-float(r["self_decisions"]), r["space"]),
    )
    notes = []
    with atomic_dir(cfg.stage_dir("report")) as tmp:
        write_csv(tmp / "involvement_ranking.csv", ("space", "mean", "median", "std", "min", "max", "n_proposals"),
                  involvement, meta)
        write_csv(tmp / "self_decision_ranking.csv", ("space", "self_decisions", "n_self_decided", "n_decidable"),
                  self_dec, {**meta, "display_threshold": DISPLAY_THRESHOLD})
        net = cfg.stage_dir("network")
        _, table = read_csv(net / "stats_table.csv")
        write_csv(tmp / "network_stats.csv", ("statistic", *cfg.variants), table, meta)
        donut, conc_all = [], {}
        for v in cfg.variants:
            cpath = net / v / "concentration.json"
            if not cpath.exists():
                continue
            _, conc = read_json(cpath)
            conc_all[v] = conc
            _, comms = read_csv(net / v / "communities.csv")
            n_contrib = sum(int(r["n_contributors"]) for r in comms)
            n_other = sum(int(r["n_noncontributors"]) for r in comms)
            for r in comms:
                donut.append({
                    "variant": v, "community": r["community"],
                    "contributor_share": int(r["n_contributors"]) / n_contrib if n_contrib else 0.0,
                    "noncontributor_share": int(r["n_noncontributors"]) / n_other if n_other else 0.0,
                })
        write_csv(tmp / "hhi_donut.csv", ("variant", "community", "contributor_share", "noncontributor_share"),
                  donut, meta)
        write_json(tmp / "concentration.json", conc_all, meta)
        if (cfg.stage_dir("validate") / MARKER).exists():
            _, mm = read_csv(cfg.stage_dir("validate") / "mismatch_table.csv")
            write_csv(tmp / "mismatch_table.csv", ("space", "token", "error", "count"), mm, meta)
        else:
            notes.append("validate stage not run; mismatch table omitted")
        if (cfg.stage_dir("shifts") / MARKER).exists():
            _, hist = read_csv(cfg.stage_dir("shifts") / "histogram.csv")
            write_csv(tmp / "shift_histogram.csv", ("day_offset", "shift_count"), hist, meta)
        else:
            notes.append("shifts stage not run; shift histogram omitted")
        write_csv(tmp / "monthly_activity.csv", ("month", "n_proposals", "avg_votes"),
                  monthly_activity(_bundle(cfg, "ingest")), meta)
        _finish(cfg, "report", tmp, {"notes": notes})
    for n in notes:
        log.warning(n)
    return {"notes": notes}


RUNNERS = {
    "ingest": stage_ingest,
    "clean": stage_clean,
    "metrics": stage_metrics,
    "network": stage_network,
    "validate": stage_validate,
    "shifts": stage_shifts,
    "report": stage_report,
}


def run(stage: str, cfg: RunConfig) -> dict:
    if stage == "all":
        return {s: RUNNERS[s](cfg) for s in STAGES}
    if stage not in RUNNERS:
        raise ConfigurationError(f"unknown stage {stage!r}")
    return RUNNERS[stage](cfg)


__all__ = ["RunConfig", "STAGES", "run"]
