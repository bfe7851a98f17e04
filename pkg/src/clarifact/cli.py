"""Command-line interface: batch runs, reply analyses, stored-run reports, serving.

Exit codes: 0 success, 2 configuration problem, 3 data problem, 4 backend
problem. Batch runs land in a run store directory (runs/, cache/, sessions/)
so they are resumable and greppable after the process exits.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path
from typing import Optional

import click

from clarifact.analysis import (
    EmbeddingStore,
    TokenizeConfig,
    default_seed_words,
    expand_seed_lexicon,
    ngram_frequencies,
    uncertainty_term_frequencies,
)
from clarifact.dataset import SchemaConfig, attach_annotations, load_corpus
from clarifact.errors import ClarifactError, DataError, GatewayError, MalformedRow
from clarifact.gateway import LlmGateway, OpenAIBackend, ScriptFixture
from clarifact.metrics import AbstainPolicy, AgreementFilter, category_accuracy, render_table, routing_share
from clarifact.pipeline import (
    ClarifyService,
    RouterKind,
    RunConfig,
    UncertaintyResolver,
    run_strategy,
)
from clarifact.records import StatementRecord, Strategy
from clarifact.server import create_app
from clarifact.store import DiskCache, RunStore, SessionStore

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_BACKEND = 4

DEFAULT_STORE = "clarifact-runs"

log = logging.getLogger(__name__)


def _fail(exit_code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(exit_code)


def translating_errors(fn):
    """Map domain error families onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GatewayError as exc:
            _fail(EXIT_BACKEND, str(exc))
        except DataError as exc:
            _fail(EXIT_DATA, str(exc))
        except ClarifactError as exc:
            _fail(EXIT_DATA, str(exc))
        except ValueError as exc:
            _fail(EXIT_CONFIG, str(exc))

    return wrapper


def _read_json_file(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        _fail(EXIT_CONFIG, f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_CONFIG, f"config {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        _fail(EXIT_CONFIG, f"config {path} must hold a JSON object")
    return raw


def _parse_schema_arg(value) -> SchemaConfig:
    """Schema comes as a dict (config file), inline JSON, or @file reference."""
    if value is None:
        return SchemaConfig()
    if isinstance(value, dict):
        return SchemaConfig.from_dict(value)
    text = value.strip()
    if text.startswith("@"):
        return SchemaConfig.from_dict(_read_json_file(text[1:]))
    try:
        parsed = json.loads(text)
    except json.JSONDecodeError as exc:
        _fail(EXIT_CONFIG, f"--schema is not valid JSON: {exc}")
    if not isinstance(parsed, dict):
        _fail(EXIT_CONFIG, "--schema must be a JSON object")
    return SchemaConfig.from_dict(parsed)


def build_backend(spec: str):
    """Resolve a backend spec: ``fixture:PATH`` or ``openai``."""
    if spec.startswith("fixture:"):
        path = spec[len("fixture:") :]
        if not Path(path).is_file():
            _fail(EXIT_CONFIG, f"fixture file not found: {path}")
        try:
            return ScriptFixture.from_file(path)
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            _fail(EXIT_CONFIG, f"fixture file {path} is malformed: {exc}")
    if spec == "openai":
        api_key = os.environ.get("CLARIFACT_OPENAI_API_KEY", "")
        if not api_key:
            _fail(
                EXIT_CONFIG,
                "the openai backend needs CLARIFACT_OPENAI_API_KEY in the environment",
            )
        base_url = os.environ.get(
            "CLARIFACT_OPENAI_BASE_URL", "https://api.openai.com/v1"
        )
        return OpenAIBackend(base_url=base_url, api_key=api_key)
    _fail(EXIT_CONFIG, f"unknown backend {spec!r}; use fixture:PATH or openai")


def _load_records_file(path: str) -> list[StatementRecord]:
    records = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise MalformedRow(0, f"cannot read records file {path}: {exc}") from exc
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(StatementRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise MalformedRow(number, f"bad record line: {exc}") from exc
    return records


def _load_documents(path: str) -> list[str]:
    """Documents for analysis: run records (verdict reply text) or plain text lines."""
    if path.endswith(".jsonl"):
        documents = []
        for record in _load_records_file(path):
            if record.score.reply_text:
                documents.append(record.score.reply_text)
        return documents
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise MalformedRow(0, f"cannot read documents file {path}: {exc}") from exc
    return [line for line in lines if line.strip()]


@click.group()
@click.option("--verbose", is_flag=True, default=False, help="Debug logging.")
def main(verbose: bool):
    """Claim-verification toolkit: resolve missing information, then score."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@main.command()
@click.option("--config", "config_path", default=None, help="JSON run settings; flags override.")
@click.option("--strategy", "strategy_raw", default=None, help="One of: " + ", ".join(s.value for s in Strategy) + ".")
@click.option("--corpus", "corpus_path", default=None, help="CSV or JSONL corpus file.")
@click.option("--schema", "schema_arg", default=None, help="Corpus column map: inline JSON or @file.")
@click.option("--backend", "backend_spec", default=None, help="fixture:PATH or openai.")
@click.option("--model", default=None)
@click.option("--temperature", type=float, default=None)
@click.option("--max-tokens", type=int, default=None)
@click.option("--router", type=click.Choice([r.value for r in RouterKind]), default=None)
@click.option("--enforce-routing", is_flag=True, default=False, help="Only user-routed questions get answers.")
@click.option("--workers", type=int, default=None)
@click.option("--abstain-policy", type=click.Choice([p.value for p in AbstainPolicy]), default=None)
@click.option("--store", "store_root", default=None, help=f"Run store directory [default: {DEFAULT_STORE}].")
@click.option("--resume", is_flag=True, default=False, help="Reuse records already stored for this run id.")
@click.option("--no-cache", is_flag=True, default=False, help="Bypass the completion cache.")
@translating_errors
def run(
    config_path,
    strategy_raw,
    corpus_path,
    schema_arg,
    backend_spec,
    model,
    temperature,
    max_tokens,
    router,
    enforce_routing,
    workers,
    abstain_policy,
    store_root,
    resume,
    no_cache,
):
    """Run one strategy over a corpus and persist records plus metrics."""
    settings = _read_json_file(config_path) if config_path else {}

    def pick(flag_value, key, default=None):
        return flag_value if flag_value is not None else settings.get(key, default)

    strategy_name = pick(strategy_raw, "strategy")
    if not strategy_name:
        _fail(EXIT_CONFIG, "missing required --strategy (or 'strategy' in --config)")
    try:
        strategy = Strategy.parse(str(strategy_name))
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))

    corpus_file = pick(corpus_path, "corpus")
    if not corpus_file:
        _fail(EXIT_CONFIG, "missing required --corpus (or 'corpus' in --config)")
    backend_name = pick(backend_spec, "backend")
    if not backend_name:
        _fail(EXIT_CONFIG, "missing required --backend (or 'backend' in --config)")

    schema = _parse_schema_arg(
        schema_arg if schema_arg is not None else settings.get("schema")
    )

    try:
        run_config = RunConfig.from_dict(
            {
                "model": pick(model, "model", "gpt-4"),
                "temperature": pick(temperature, "temperature", 0.0),
                "max_tokens": pick(max_tokens, "max_tokens"),
                "router": pick(router, "router"),
                "enforce_routing": enforce_routing or bool(settings.get("enforce_routing", False)),
                "abstain_policy": pick(abstain_policy, "abstain_policy", AbstainPolicy.ABSTAIN_AS_ERROR.value),
                "workers": pick(workers, "workers", 1),
                "resume": resume or bool(settings.get("resume", False)),
            }
        )
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))

    corpus = load_corpus(corpus_file, schema)
    backend = build_backend(str(backend_name))
    store = RunStore(pick(store_root, "store", DEFAULT_STORE))
    gateway = LlmGateway(backend, cache=None if no_cache else DiskCache(store))

    result = run_strategy(corpus, strategy, run_config, gateway, store=store)

    if not result.records:
        if result.failed:
            _fail(
                EXIT_BACKEND,
                f"no records produced; {len(result.failed)} statements failed "
                f"(first: {result.failed[0].error})",
            )
        reasons = Counter(entry.reason for entry in result.skipped)
        detail = ", ".join(f"{reason}: {count}" for reason, count in sorted(reasons.items()))
        _fail(
            EXIT_DATA,
            f"no records produced; all {len(result.skipped)} statements were skipped ({detail})",
        )

    click.echo(render_table({strategy.value: result.metrics}), nl=False)
    click.echo(f"run: {result.run_id}")
    click.echo(
        f"records: {len(result.records)}  skipped: {len(result.skipped)}  "
        f"failed: {len(result.failed)}"
    )
    click.echo(f"report: {store.run_dir(result.run_id) / 'report.json'}")


@main.group()
def analyze():
    """Frequency, lexicon, routing, and category-agreement analyses."""


@analyze.command("ngrams")
@click.option("--replies", "replies_path", required=True, help="Run records (.jsonl, verdict reply text) or plain text, one document per line.")
@click.option("--n", type=click.Choice(["1", "2"]), default="1", show_default=True)
@click.option("--top", type=int, default=10, show_default=True)
@click.option("--stopwords", "stopwords_path", default=None, help="Newline-separated stopword file.")
@translating_errors
def analyze_ngrams(replies_path, n, top, stopwords_path):
    """Most frequent n-grams across reply documents."""
    documents = _load_documents(replies_path)
    config = TokenizeConfig()
    if stopwords_path:
        words = Path(stopwords_path).read_text(encoding="utf-8").split()
        config = TokenizeConfig(stopwords=frozenset(w.casefold() for w in words))
    table = ngram_frequencies(documents, int(n), top, config)
    kind = "bigrams" if n == "2" else "unigrams"
    click.echo(table.render(title=f"top {kind} over {len(documents)} documents"), nl=False)


@analyze.command("lexicon")
@click.option("--vectors", "vectors_path", required=True, help="Word vectors, GloVe-style text format.")
@click.option("--threshold", type=float, default=0.7, show_default=True)
@click.option("--seed", "seed_path", default=None, help="Newline-separated seed words; defaults to the shipped list.")
@click.option("--count-in", "documents_path", default=None, help="Also count lexicon terms over these documents.")
@click.option("--top", type=int, default=10, show_default=True)
@translating_errors
def analyze_lexicon(vectors_path, threshold, seed_path, documents_path, top):
    """Expand the missing-information seed lexicon by embedding similarity."""
    if seed_path:
        seed = [
            w.strip()
            for w in Path(seed_path).read_text(encoding="utf-8").splitlines()
            if w.strip()
        ]
    else:
        seed = default_seed_words()
    store = EmbeddingStore.load(vectors_path)
    lexicon = expand_seed_lexicon(seed, store, threshold)
    click.echo(
        f"seeds: {len(lexicon.seed)}  lexicon: {len(lexicon.expanded)} words  "
        f"threshold: {lexicon.threshold}"
    )
    if lexicon.missing:
        click.echo(f"seeds missing from vectors: {', '.join(lexicon.missing)}")
    for word, similarity in lexicon.expanded:
        click.echo(f"{word}  {similarity:.4f}")
    if documents_path:
        documents = _load_documents(documents_path)
        table = uncertainty_term_frequencies(documents, lexicon, top)
        click.echo(table.render("lexicon term frequencies"), nl=False)


@analyze.command("routing-share")
@click.option("--records", "records_path", required=True, help="records.jsonl from a routed run.")
@translating_errors
def analyze_routing_share(records_path):
    """Percent of questions routed to the user, per category."""
    records = _load_records_file(records_path)
    pairs = [
        (record.question_categories[0], record.route.value)
        for record in records
        if record.question_categories and record.route is not None
    ]
    shares = routing_share(pairs)
    if shares.n_records == 0:
        _fail(EXIT_DATA, "no records carry both a category and a route")
    click.echo("category  user-query share (%)  n")
    for category in sorted(shares.per_category, key=lambda c: c.letter):
        user, total = shares.per_category_counts[category]
        click.echo(
            f"{category.letter} ({category.display_name})  "
            f"{shares.per_category[category]:.2f}  {user}/{total}"
        )
    click.echo(f"overall  {shares.overall:.2f}  n={shares.n_records}")


@analyze.command("category-accuracy")
@click.option("--records", "records_path", required=True, help="records.jsonl from a category-based run.")
@click.option("--corpus", "corpus_path", required=True)
@click.option("--labels", "labels_path", required=True, help="CSV: statement_id,labeler_id,category_letter.")
@click.option("--schema", "schema_arg", default=None)
@click.option("--agreement", type=click.Choice([f.value for f in AgreementFilter]), default=AgreementFilter.MATCH_ANY.value, show_default=True)
@translating_errors
def analyze_category_accuracy(records_path, corpus_path, labels_path, schema_arg, agreement):
    """Score predicted categories against human annotations."""
    corpus = load_corpus(corpus_path, _parse_schema_arg(schema_arg))
    corpus = attach_annotations(corpus, labels_path)
    records = _load_records_file(records_path)
    preds = {
        record.statement_id: record.question_categories[0]
        for record in records
        if record.question_categories
    }
    if not preds:
        _fail(EXIT_DATA, "no records carry a predicted category")
    report = category_accuracy(preds, corpus, AgreementFilter(agreement))
    click.echo(f"agreement filter: {report.filter.value}")
    click.echo(f"overall: {report.overall:.2f}%  ({report.n_hits}/{report.n_eligible})")
    for category in sorted(report.per_category, key=lambda c: c.letter):
        click.echo(f"{category.letter}  {report.per_category[category]:.2f}")


@main.command()
@click.option("--store", "store_root", default=DEFAULT_STORE, show_default=True)
@click.option("--run", "run_id", default=None, help="Run id to render; omit to list stored runs.")
@translating_errors
def report(store_root, run_id):
    """Render a stored run's report, or list stored runs."""
    store = RunStore(store_root)
    if run_id is None:
        manifests = store.list_runs()
        if not manifests:
            click.echo("no stored runs")
            return
        for manifest in manifests:
            click.echo(f"{manifest.run_id}  {manifest.strategy}  {manifest.status}")
        return
    manifest = store.load_manifest(run_id)
    if manifest is None:
        _fail(EXIT_DATA, f"no run {run_id!r} under {store_root}")
    click.echo(
        f"run: {manifest.run_id}  strategy: {manifest.strategy}  status: {manifest.status}"
    )
    report_path = store.run_dir(run_id) / "report.txt"
    summary_path = store.run_dir(run_id) / "summary.json"
    if report_path.exists():
        click.echo(report_path.read_text(encoding="utf-8"), nl=False)
    if summary_path.exists():
        summary = json.loads(summary_path.read_text(encoding="utf-8"))
        click.echo(
            f"records: {summary['n_records']}  skipped: {summary['n_skipped']}  "
            f"failed: {summary['n_failed']}"
        )


@main.command()
@click.option("--backend", "backend_spec", required=True, help="fixture:PATH or openai.")
@click.option("--router", type=click.Choice([r.value for r in RouterKind]), default=RouterKind.LLM.value, show_default=True)
@click.option("--model", default="gpt-4", show_default=True)
@click.option("--temperature", type=float, default=0.0, show_default=True)
@click.option("--bind", default="127.0.0.1:8731", show_default=True, help="HOST:PORT to listen on.")
@click.option("--store", "store_root", default=DEFAULT_STORE, show_default=True)
@click.option("--no-cache", is_flag=True, default=False)
def serve(backend_spec, router, model, temperature, bind, store_root, no_cache):
    """Serve the clarify-session HTTP API."""
    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        _fail(EXIT_CONFIG, f"bad bind address {bind!r}; expected HOST:PORT")
    service = build_service(
        backend_spec,
        router=RouterKind(router),
        model=model,
        temperature=temperature,
        store_root=store_root,
        use_cache=not no_cache,
    )
    app = create_app(service)
    import uvicorn

    uvicorn.run(app, host=host, port=int(port_text), log_level="info")


def build_service(
    backend_spec: str,
    router: RouterKind = RouterKind.LLM,
    model: str = "gpt-4",
    temperature: float = 0.0,
    store_root: str = DEFAULT_STORE,
    use_cache: bool = True,
) -> ClarifyService:
    """Wire the full service stack from a backend spec (shared by serve/tests)."""
    backend = build_backend(backend_spec)
    store = RunStore(store_root)
    gateway = LlmGateway(backend, cache=DiskCache(store) if use_cache else None)
    resolver = UncertaintyResolver(gateway, model=model, temperature=temperature)
    return ClarifyService(resolver, router=router, store=SessionStore(store_root))


if __name__ == "__main__":
    main()
