"""Batch entry points: the whole analysis suite, headless.

Exit codes: 0 success, 1 usage error, 2 data error. Errors go to stderr.
"""

from __future__ import annotations

import json
import sys

import click

from . import demo as demo_mod
from . import dynamics as dyn
from . import levels, provenance, retrieval, thematic
from .corpus import (CorpusError, IngestReport, ingest, iter_csv, iter_jsonl,
                     load_corpus, save_corpus)

USAGE_ERROR = 1
DATA_ERROR = 2


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(path: str):
    try:
        return load_corpus(path)
    except (CorpusError, OSError, ValueError) as exc:
        _fail(DATA_ERROR, f"cannot load corpus {path}: {exc}")


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except (OSError, ValueError) as exc:
        _fail(USAGE_ERROR, f"bad config file: {exc}")


@click.group()
def main():
    """Communication corpus analysis toolkit."""


@main.command("ingest")
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), required=True)
@click.option("--map", "mapping", default="",
              help="field mapping, e.g. sender=from,receiver=to,time=date,content=body")
@click.option("--out", required=True, type=click.Path())
@click.argument("source", type=click.Path(exists=True))
def ingest_cmd(fmt, mapping, out, source):
    """Build a corpus file from delimiter-separated or line-delimited records."""
    schema = {}
    if mapping:
        for part in mapping.split(","):
            key, _, value = part.partition("=")
            if not value:
                _fail(USAGE_ERROR, f"bad --map entry: {part!r}")
            schema[key.strip()] = value.strip()
    report = IngestReport()
    with open(source, encoding="utf-8") as f:
        records = iter_csv(f) if fmt == "csv" else iter_jsonl(f)
        try:
            corpus = ingest(records, schema, report)
        except (CorpusError, ValueError) as exc:
            _fail(DATA_ERROR, str(exc))
    save_corpus(corpus, out)
    click.echo(f"ingested {report.accepted} records "
               f"({len(corpus.messages)} messages, "
               f"{len(corpus.participants)} participants), "
               f"rejected {report.rejected}")
    for lineno, reason in report.reject_lines[:20]:
        click.echo(f"  rejected line {lineno}: {reason}", err=True)


@main.command("annotate")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--gazetteer", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def annotate_cmd(corpus_path, gazetteer, out):
    """Annotate message content with entity categories (gazetteer tagger)."""
    corpus = _load(corpus_path)
    try:
        gaz = thematic.load_gazetteer(gazetteer)
        tagger = thematic.GazetteerTagger(gaz)
    except ValueError as exc:
        _fail(DATA_ERROR, str(exc))
    index = thematic.annotate(corpus, tagger)
    with open(out, "w", encoding="utf-8") as f:
        for mid in sorted(index):
            for a in index[mid]:
                f.write(json.dumps({
                    "messageId": a.message_id, "start": a.start_word,
                    "end": a.end_word, "category": a.category, "surface": a.surface,
                }, sort_keys=True) + "\n")
    total = sum(len(v) for v in index.values())
    click.echo(f"annotated {len(corpus.messages)} messages, {total} entities")


@main.command("query")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--gazetteer", required=True, type=click.Path(exists=True))
@click.option("--q", "query_text", required=True)
def query_cmd(corpus_path, gazetteer, query_text):
    """Print ids of messages matching a concept query."""
    corpus = _load(corpus_path)
    try:
        gaz = thematic.load_gazetteer(gazetteer)
        ast = thematic.parse_query(query_text)
    except (ValueError, thematic.QueryParseError) as exc:
        _fail(USAGE_ERROR, str(exc))
    index = thematic.annotate(corpus, thematic.GazetteerTagger(gaz))
    for m in corpus.messages:
        if thematic.matches(ast, index.get(m.id, [])):
            click.echo(m.id)


@main.command("episodes")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="JSON config with a 'dynamics' section (mu, sigma, h, theta, minMessages)")
def episodes_cmd(corpus_path, config_path):
    """Emit one record per communication episode, tab-separated."""
    corpus = _load(corpus_path)
    cfg = _load_config(config_path)
    try:
        params = dyn.DynamicsParams.from_dict(cfg.get("dynamics", {}))
    except dyn.DynamicsError as exc:
        _fail(USAGE_ERROR, str(exc))
    click.echo("pairA\tpairB\tstart\tend\tcount\tbalance\tpeak")
    done = set()
    for (a, b) in sorted(corpus.pair_index):
        key = (min(a, b), max(a, b))
        if key in done:
            continue
        done.add(key)
        for ep in dyn.segment_episodes(corpus, key, params):
            feats = dyn.episode_features(ep, corpus)
            click.echo(f"{key[0]}\t{key[1]}\t{ep.start}\t{ep.end}\t{ep.count}"
                       f"\t{feats[2]:.4f}\t{ep.peak_density:.4f}")


@main.command("train")
@click.option("--examples", "examples_path", required=True, type=click.Path(exists=True),
              help="JSONL of {targetId, label, features}")
@click.option("--out", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
def train_cmd(examples_path, out, config_path):
    """Train the relevance forest from labeled feature vectors."""
    cfg = _load_config(config_path).get("forest", {})
    config = retrieval.ForestConfig(
        tree_count=int(cfg.get("treeCount", 100)), max_depth=int(cfg.get("maxDepth", 8)),
        min_leaf=int(cfg.get("minLeaf", 1)), seed=int(cfg.get("seed", 0)))
    examples = []
    with open(examples_path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                d = json.loads(line)
                examples.append(retrieval.LabeledExample(
                    target_id=d["targetId"], label=d["label"],
                    features=tuple(float(v) for v in d["features"])))
    try:
        model = retrieval.train(examples, config)
    except retrieval.TrainingError as exc:
        _fail(DATA_ERROR, str(exc))
    with open(out, "w", encoding="utf-8") as f:
        f.write(model.to_text())
    click.echo(f"trained {config.tree_count} trees on {len(examples)} examples")


@main.command("score")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--targets", "targets_path", required=True, type=click.Path(exists=True),
              help="JSONL of {targetId, features}")
def score_cmd(model_path, targets_path):
    """Score feature vectors with a trained model (tab-separated output)."""
    with open(model_path, encoding="utf-8") as f:
        try:
            model = retrieval.RelevanceModel.from_text(f.read())
        except (retrieval.TrainingError, ValueError) as exc:
            _fail(DATA_ERROR, str(exc))
    click.echo("targetId\tp\tuncertainty")
    with open(targets_path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            d = json.loads(line)
            try:
                s = model.score([float(v) for v in d["features"]])
            except retrieval.TrainingError as exc:
                _fail(DATA_ERROR, str(exc))
            click.echo(f"{d['targetId']}\t{s['p']:.4f}\t{s['uncertainty']:.4f}")


@main.command("report")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def report_cmd(corpus_path, out):
    """Export an (empty-session) provenance report for the corpus."""
    corpus = _load(corpus_path)
    session = provenance.Session(corpus)
    session.export_report(out)
    click.echo(f"wrote report to {out}")


@main.command("serve")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--gazetteer", type=click.Path(exists=True))
@click.option("--port", default=8000, type=int)
@click.option("--host", default="127.0.0.1")
def serve_cmd(corpus_path, gazetteer, port, host):
    """Start the matrix HTTP backend."""
    import uvicorn

    from .server import create_app
    corpus = _load(corpus_path)
    gaz = thematic.load_gazetteer(gazetteer) if gazetteer else {}
    uvicorn.run(create_app(corpus, gaz), host=host, port=port)


@main.command("demo")
@click.option("--out", required=True, type=click.Path())
@click.option("--gazetteer-out", "gaz_out", type=click.Path())
@click.option("--truth-out", type=click.Path())
@click.option("--seed", default=demo_mod.DEMO_SEED, type=int)
@click.option("--messages", default=5000, type=int)
def demo_cmd(out, gaz_out, truth_out, seed, messages):
    """Materialize the synthetic fraud-scenario fixture (seeded)."""
    corpus, truth = demo_mod.generate_demo_corpus(seed=seed, message_count=messages)
    save_corpus(corpus, out)
    if gaz_out:
        with open(gaz_out, "w", encoding="utf-8") as f:
            for cat, terms in sorted(demo_mod.DEMO_GAZETTEER.items()):
                for term in terms:
                    f.write(f"{cat}:{term}\n")
    if truth_out:
        with open(truth_out, "w", encoding="utf-8") as f:
            json.dump(truth, f, indent=2, sort_keys=True)
    click.echo(f"demo corpus: {len(corpus.messages)} messages, "
               f"{len(corpus.participants)} participants")


if __name__ == "__main__":
    main()
