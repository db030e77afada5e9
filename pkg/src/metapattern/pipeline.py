"""End-to-end orchestration with file artifacts between stages.

Stages run in order and each one reads only the corpus, the inputs and the
artifacts of earlier stages, so any stage can be re-run on its own:

    mine      candidates.tsv
    train-q   model.bin
    segment   model.final.bin scores.tsv segmented.txt quality_patterns.tsv extractions.tsv
    group     synonym_model.bin groups.tsv            (modes TS, BS)
    adjust    adjusted_groups.jsonl                   (modes TS, BS)
    extract   eav.tsv
    eval      metrics.txt pr_curve.csv
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import asdict, dataclass, fields, replace

from .candidates import CandidateSet, mine_candidates, parse_pattern, read_candidates_tsv, render
from .corpus import Corpus, TypeOntology, load_stopwords, read_corpus, read_ontology, tag_corpus, validate_corpus
from .eav import assign_attributes, evaluate, extract_eav, read_assignments, read_catalog, read_gold, write_eav
from .embeddings import embed_tokens
from .errors import ConfigError, MetaPatternError, ParseError
from .quality import QualityModel, read_labels, train_quality_model
from .segmentation import (
    Extraction,
    emit_extractions,
    extraction_from_span,
    format_segmentation,
    run_feedback_loop,
)
from .synonyms import (
    PatternGroup,
    build_synonym_graph,
    extraction_index,
    find_cliques,
    group_patterns,
    read_pair_labels,
    singleton_groups,
    train_from_pair_labels,
)
from .typeadjust import adjust_bottom_up, adjust_top_down

log = logging.getLogger(__name__)

MODES = ("T", "TS", "B", "BS")
CONFIG_ENV = "METAPATTERN_CONFIG"
STAGES = ("mine", "train-q", "segment", "group", "adjust", "extract", "eval")


@dataclass(frozen=True)
class PipelineConfig:
    min_sup: int = 5
    max_len: int = 20
    q_min: float = 0.5
    delta: float = 0.05
    tau: float = 0.5
    theta: float = 0.8
    gamma: float = 0.1
    mode: str = "TS"
    embedding_dim: int = 50
    window: int = 2
    seed: int = 0
    n_trees: int = 100
    clique_budget: int = 100_000
    confidence: str = "max"
    stopwords: str | None = None
    ontology: str | None = None

    def __post_init__(self):
        checks = [
            (self.min_sup >= 1, "min_sup must be >= 1"),
            (self.max_len >= 1, "max_len must be >= 1"),
            (0 <= self.q_min <= 1, "q_min must lie in [0, 1]"),
            (0 < self.delta < self.q_min or self.q_min == 0, "delta must lie in (0, q_min)"),
            (0 < self.tau < 1, "tau must lie in (0, 1)"),
            (0 < self.theta < 1, "theta must lie in (0, 1)"),
            (0 < self.gamma < 1, "gamma must lie in (0, 1)"),
            (self.mode in MODES, f"mode must be one of {MODES}"),
            (self.embedding_dim >= 0, "embedding_dim must be >= 0 (0 keeps full PPMI rows)"),
            (self.window >= 1, "window must be >= 1"),
            (self.n_trees >= 1, "n_trees must be >= 1"),
            (self.clique_budget >= 1, "clique_budget must be >= 1"),
            (self.confidence in ("max", "mean", "weighted"), "confidence must be max, mean or weighted"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @property
    def level(self) -> str:
        return "coarse" if self.mode in ("T", "TS") else "fine"

    @property
    def grouped(self) -> bool:
        return self.mode in ("TS", "BS")

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged = {**d, **{k: v for k, v in overrides.items() if v is not None}}
        try:
            return cls(**merged)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def load(cls, path=None, **overrides) -> "PipelineConfig":
        path = path or os.environ.get(CONFIG_ENV)
        if not path:
            return cls.from_dict({}, **overrides)
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d, **overrides)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"


@dataclass(frozen=True)
class Inputs:
    corpus: str
    labels: str | None = None
    pair_labels: str | None = None
    catalog: str | None = None
    assignments: str | None = None
    gold: str | None = None

    def need(self, name):
        path = getattr(self, name)
        if path is None:
            raise ConfigError(f"missing input: --{name.replace('_', '-')}")
        if not os.path.exists(path):
            raise ConfigError(f"input {name} not found: {path}")
        return path


class StageError(MetaPatternError):
    def __init__(self, stage: str, err: MetaPatternError):
        super().__init__(f"stage {stage} failed: {err}")
        self.stage = stage
        self.exit_code = err.exit_code


class Run:
    """Shared, lazily loaded state of one pipeline directory."""

    def __init__(self, config: PipelineConfig, inputs: Inputs, outdir: str, threads: int = 1):
        self.config = config
        self.inputs = inputs
        self.outdir = outdir
        self.threads = max(1, int(threads))
        self._corpus = None
        self._ontology = None
        self._cands = None
        os.makedirs(outdir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.outdir, name)

    def write(self, name, text: str):
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    @property
    def ontology(self) -> TypeOntology | None:
        if self._ontology is None and self.config.ontology:
            self._ontology = read_ontology(self.config.ontology)
        return self._ontology

    @property
    def stopwords(self):
        return load_stopwords(self.config.stopwords)

    @property
    def corpus(self) -> Corpus:
        if self._corpus is None:
            corpus = read_corpus(self.inputs.need("corpus"), self.ontology)
            self._corpus = tag_corpus(corpus)
        return self._corpus

    @property
    def cands(self) -> CandidateSet:
        if self._cands is None:
            self._cands = read_candidates_tsv(self.path("candidates.tsv"), self.corpus)
        return self._cands

    def read_quality(self) -> dict:
        out = {}
        for parts in _rows(self.path("quality_patterns.tsv"), 4):
            out[parse_pattern(parts[1])] = float(parts[2])
        return out

    def read_extractions(self) -> list[Extraction]:
        index = self.corpus.index()
        out = []
        with open(self.path("extractions.tsv"), encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if line.startswith("#") or not line.strip():
                    continue
                parts = line.rstrip("\n").split("\t")
                pattern = parse_pattern(parts[0])
                try:
                    doc, sent, start = parts[-1].rsplit(":", 2)
                    sentence = index[(doc, int(sent))]
                except (ValueError, KeyError):
                    raise ParseError(f"extraction provenance {parts[-1]!r} does not match the corpus", lineno) from None
                ext = extraction_from_span(pattern, sentence, int(start))
                if list(ext.bindings) != parts[1:-1]:
                    raise ParseError("extraction bindings do not match the corpus", lineno)
                out.append(ext)
        return out

    def read_groups(self, name) -> list[PatternGroup]:
        exts = self.read_extractions()
        if name == "groups.tsv":
            by_id = {cid: p for p, cid in self.cands.ids().items()}
            cliques = [frozenset(by_id[c] for c in parts[1].split(",")) for parts in _rows(self.path(name), 2)]
            return group_patterns(cliques, exts)
        ref = {(render(e.pattern), e.provenance): e for e in exts}
        groups = []
        with open(self.path(name), encoding="utf-8") as fh:
            for line in fh:
                d = json.loads(line)
                members = tuple(parse_pattern(m) for m in d["members"])
                pooled = tuple(ref[(p, prov)] for p, prov in d["extractions"])
                groups.append(PatternGroup(members, pooled))
        return groups


def _rows(path, width):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != width:
                raise ParseError(f"{os.path.basename(path)}: expected {width} columns", lineno)
            yield parts


# ---------------------------------------------------------------- stages


def stage_mine(run: Run):
    cfg = run.config
    if run.ontology is not None:
        validate_corpus(run.corpus, run.ontology)
    t0 = time.perf_counter()
    cands = mine_candidates(run.corpus, cfg.min_sup, cfg.max_len, cfg.level)
    dt = time.perf_counter() - t0
    log.info("mined %d candidates from %d tokens (%.0f tokens/s)", len(cands), run.corpus.total_tokens,
             run.corpus.total_tokens / max(dt, 1e-9))
    run.write("candidates.tsv", cands.to_tsv())
    run._cands = None


def stage_train_q(run: Run):
    cfg = run.config
    labels = read_labels(run.inputs.need("labels"))
    model = train_quality_model(labels, run.cands, cfg.seed, run.stopwords, rectified=False, n_trees=cfg.n_trees)
    with open(run.path("model.bin"), "wb") as fh:
        model.save(fh)


def stage_segment(run: Run):
    cfg = run.config
    cands = run.cands
    labels = read_labels(run.inputs.need("labels"))
    with open(run.path("model.bin"), "rb") as fh:
        model0 = QualityModel.load(fh)
    t0 = time.perf_counter()
    res = run_feedback_loop(run.corpus, labels, cands, cfg.seed, cfg.q_min, cfg.delta, run.stopwords,
                            run.threads, cfg.n_trees, initial_model=model0)
    dt = time.perf_counter() - t0
    log.info("segmentation + feedback: %.0f tokens/s", 2 * run.corpus.total_tokens / max(dt, 1e-9))
    with open(run.path("model.final.bin"), "wb") as fh:
        res.model.save(fh)
    ids = cands.ids()
    rows = ["# id\tpattern\traw\trectified\tq_initial\tq_final"]
    for p in cands.ordered():
        rows.append(f"{ids[p]}\t{render(p)}\t{cands[p].raw_count}\t{res.rectified.get(p, 0)}\t"
                    f"{res.initial_scores[p]!r}\t{res.scores[p]!r}")
    run.write("scores.tsv", "\n".join(rows) + "\n")
    run.write("segmented.txt", "".join(format_segmentation(s, ids) + "\n" for s in res.segmentations))
    qrows = ["# id\tpattern\tquality\trectified"]
    for p in sorted(res.quality_patterns, key=lambda p: (-res.quality_patterns[p], ids[p])):
        qrows.append(f"{ids[p]}\t{render(p)}\t{res.quality_patterns[p]!r}\t{res.rectified[p]}")
    run.write("quality_patterns.tsv", "\n".join(qrows) + "\n")
    erows = ["# pattern\tbindings...\tdoc:sentence:start"]
    for ext in emit_extractions(res.segmentations):
        if ext.pattern in res.quality_patterns:
            erows.append("\t".join([render(ext.pattern), *ext.bindings, ext.provenance]))
    run.write("extractions.tsv", "\n".join(erows) + "\n")


def _embeddings(run: Run):
    cfg = run.config
    return embed_tokens(run.corpus, cfg.embedding_dim or None, cfg.window, cfg.seed, cfg.level)


def stage_group(run: Run):
    cfg = run.config
    exts = run.read_extractions()
    quality = run.read_quality()
    index = extraction_index(exts)
    emb = _embeddings(run)
    pairs = [(a, b, y) for a, b, y in read_pair_labels(run.inputs.need("pair_labels"))
             if a in index and b in index]
    model = train_from_pair_labels(pairs, index, emb, run.stopwords)
    with open(run.path("synonym_model.bin"), "wb") as fh:
        model.save(fh)
    patterns = [p for p in quality if any(s.startswith("$") for s in p)]
    graph = build_synonym_graph(patterns, model, cfg.tau, index, emb, run.stopwords)
    cliques = find_cliques(graph, cfg.clique_budget)
    ids = run.cands.ids()
    groups = group_patterns(cliques, exts)
    run.write("groups.tsv", "".join(f"g{k}\t{','.join(ids[m] for m in g.members)}\n"
                                    for k, g in enumerate(groups, 1)))
    log.info("%d synonym groups over %d patterns", len(groups), len(patterns))


def _require_ontology(run: Run) -> TypeOntology:
    if run.ontology is None:
        raise ConfigError("type adjustment needs an ontology (config key 'ontology')")
    return run.ontology


def stage_adjust(run: Run):
    cfg = run.config
    ontology = _require_ontology(run)
    groups = run.read_groups("groups.tsv")
    if cfg.mode == "TS":
        adjusted = adjust_top_down(groups, ontology, cfg.theta, cfg.gamma)
    else:
        adjusted = adjust_bottom_up(groups, ontology, cfg.theta, cfg.gamma)
    lines = []
    for k, g in enumerate(adjusted, 1):
        diag = [{"slot": slot, "considered": [[t, round(gv, 12), round(sv, 12)] for t, gv, sv in d]}
                for slot, d in g.diagnostics]
        lines.append(json.dumps({
            "id": f"g{k}",
            "members": [render(m) for m in g.members],
            "slot_types": list(g.signature),
            "diagnostics": diag,
            "extractions": sorted([render(e.pattern), e.provenance] for e in g.extractions),
        }, sort_keys=True))
    run.write("adjusted_groups.jsonl", "".join(line + "\n" for line in lines))


def stage_extract(run: Run):
    cfg = run.config
    quality = run.read_quality()
    if cfg.grouped:
        groups = run.read_groups("adjusted_groups.jsonl")
    else:
        exts = run.read_extractions()
        groups = singleton_groups([p for p in quality if any(s.startswith("$") for s in p)], exts)
    catalog = read_catalog(run.inputs.need("catalog"))
    assigned = assign_attributes(groups, read_assignments(run.inputs.need("assignments")), catalog, run.ontology)
    tuples = extract_eav(assigned, quality, catalog, cfg.confidence, run.ontology)
    with open(run.path("eav.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        write_eav(tuples, fh)
    return tuples


def stage_eval(run: Run):
    from .eav import read_eav

    gold = read_gold(run.inputs.need("gold"))
    m = evaluate(read_eav(run.path("eav.tsv")), gold)
    run.write("metrics.txt", m.as_text())
    run.write("pr_curve.csv", m.curve_csv())
    return m


STAGE_FUNCS = {
    "mine": stage_mine,
    "train-q": stage_train_q,
    "segment": stage_segment,
    "group": stage_group,
    "adjust": stage_adjust,
    "extract": stage_extract,
    "eval": stage_eval,
}


def run_stage(name: str, run: Run):
    if name in ("group", "adjust") and not run.config.grouped:
        log.info("mode %s: skipping %s", run.config.mode, name)
        return None
    try:
        return STAGE_FUNCS[name](run)
    except ConfigError:
        raise
    except MetaPatternError as e:
        raise StageError(name, e) from e
    except (OSError, KeyError, ValueError) as e:
        if isinstance(e, FileNotFoundError):
            err = ConfigError(f"missing artifact or input: {e.filename}")
        else:
            err = MetaPatternError(f"{type(e).__name__}: {e}")
        raise StageError(name, err) from e


def run_pipeline(config: PipelineConfig, inputs: Inputs, outdir: str, threads: int = 1):
    """Run every stage; returns the evaluation metrics when gold is given."""
    run = Run(config, inputs, outdir, threads)
    run.write("config.json", config.to_json())
    t0 = time.perf_counter()
    metrics = None
    for name in STAGES:
        if name == "eval" and inputs.gold is None:
            break
        t = time.perf_counter()
        out = run_stage(name, run)
        log.info("stage %s: %.2fs", name, time.perf_counter() - t)
        if name == "eval":
            metrics = out
    dt = time.perf_counter() - t0
    log.info("pipeline: %d tokens in %.2fs (%.0f tokens/s)", run.corpus.total_tokens, dt,
             run.corpus.total_tokens / max(dt, 1e-9))
    return metrics


def with_overrides(config: PipelineConfig, **kw) -> PipelineConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
