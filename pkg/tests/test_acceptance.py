"""Release gate: one test per shipping criterion, each printing a summary line.

Every gating check here must hold before a release. The final test is a
non-gating live-backend check that only runs when real credentials and the
licensed corpus are supplied through the environment.
"""

import json
import os
import random
import time

import pytest

import eval_fixtures
import parser_fixtures
from oracles import oracle_accuracy, oracle_macro_f1, oracle_ngram_frequencies

from clarifact.analysis import (
    EmbeddingStore,
    TokenizeConfig,
    expand_seed_lexicon,
    ngram_frequencies,
    tokenize,
)
from clarifact.dataset import (
    SchemaConfig,
    corpus_from_statements,
    filter_by_possibility,
    load_corpus,
)
from clarifact.domain import (
    GroundTruth,
    MissingInfoCategory,
    PossibilityLabel,
    Statement,
    VeracityScore,
)
from clarifact.gateway import LlmGateway, ScriptEntry, ScriptFixture
from clarifact.metrics import (
    AbstainPolicy,
    AgreementFilter,
    category_accuracy,
    compute_report,
    routing_share,
)
from clarifact.pipeline import RunConfig, UncertaintyResolver, run_strategy
from clarifact.prompts import (
    parse_category_reply,
    parse_route_reply,
    parse_score_reply,
)
from clarifact.records import Strategy
from clarifact.store import RunStore

# Distinctive instruction phrases, one per prompt kind, for script matching.
ASK = "Classify the missing information"
SIMULATE = "You are simulating a user"
RATE = "Rate the truthfulness"
FILL = "Fill in the missing background context"


@pytest.mark.acceptance("metrics-oracle-equivalence")
def test_metrics_match_brute_force_oracle_on_random_instances():
    rng = random.Random(20260816)
    started = time.monotonic()
    instances = 0
    for _ in range(1000):
        n = rng.randint(1, 20)
        values = [rng.choice([0.0, 0.5, 1.0]) for _ in range(n)]
        truths = [rng.choice([True, False]) for _ in range(n)]
        preds = [VeracityScore(snapped=v, raw=v) for v in values]
        golds = [GroundTruth(value=t, raw="true" if t else "false") for t in truths]
        for policy in AbstainPolicy:
            report = compute_report(preds, golds, policy)
            if policy is AbstainPolicy.RESOLVED_ONLY and all(v == 0.5 for v in values):
                assert report.macro_f1 is None and report.accuracy is None
                continue
            assert abs(report.macro_f1 - oracle_macro_f1(values, truths, policy.value)) <= 1e-9
            assert abs(report.accuracy - oracle_accuracy(values, truths, policy.value)) <= 1e-9
        instances += 1
    elapsed = time.monotonic() - started
    assert instances == 1000
    assert elapsed < 5.0, f"oracle sweep took {elapsed:.2f}s"


@pytest.mark.acceptance("resolution-contract")
def test_resolution_rate_boundary_values_are_exact():
    abstain = [VeracityScore(snapped=0.5, raw=0.5) for _ in range(7)]
    decided = [VeracityScore(snapped=float(i % 2), raw=float(i % 2)) for i in range(7)]
    golds = [GroundTruth(value=bool(i % 2), raw="x") for i in range(7)]
    for policy in AbstainPolicy:
        assert compute_report(abstain, golds, policy).resolution == 0.0
        assert compute_report(decided, golds, policy).resolution == 100.0


@pytest.mark.acceptance("routing-share-replay")
def test_routing_share_reproduces_labeled_sample_percentages():
    shares = routing_share(eval_fixtures.build_routing_fixture())
    for category, expected in eval_fixtures.ROUTING_FIXTURE_EXPECTED.items():
        assert round(shares.per_category[category], 2) == expected, category
    assert round(shares.overall, 2) == eval_fixtures.ROUTING_FIXTURE_OVERALL
    assert shares.n_records == 99


@pytest.mark.acceptance("category-agreement-semantics")
def test_category_accuracy_matches_hand_computed_fixture():
    preds, corpus = eval_fixtures.build_category_fixture()
    for agreement in AgreementFilter:
        report = category_accuracy(preds, corpus, agreement)
        expected = eval_fixtures.CATEGORY_FIXTURE_EXPECTED[agreement.value]
        assert round(report.overall, 2) == expected, agreement
    match_any = category_accuracy(preds, corpus, AgreementFilter.MATCH_ANY)
    for category, expected in eval_fixtures.CATEGORY_FIXTURE_PER_CATEGORY_MATCH_ANY.items():
        assert round(match_any.per_category[category], 2) == expected, category


def _determinism_corpus_and_script():
    statements = []
    entries = []
    for i in range(1, 21):
        tag = f"number {i:02d}"
        statements.append(
            Statement(
                id=f"t{i:02d}",
                text=f"Fixture claim {tag} is under review.",
                verdict=GroundTruth(value=bool(i % 2), raw="true" if i % 2 else "false"),
                article=f"Reference article for claim {i:02d}.",
            )
        )
        letter = "A" if i % 2 else "F"
        entries.extend(
            [
                ScriptEntry(match=tag, response=f"Which outlet reported this? {letter}"),
                ScriptEntry(match=tag, response="Outlet records confirm the figure."),
                ScriptEntry(match=tag, response="1" if i % 2 else "0"),
            ]
        )
    return corpus_from_statements(statements), entries


@pytest.mark.acceptance("end-to-end-determinism")
def test_category_qa_reruns_are_byte_identical(tmp_path):
    corpus, entries = _determinism_corpus_and_script()
    started = time.monotonic()
    artifacts = []
    for index, workers in enumerate((1, 1, 4)):
        fixture = ScriptFixture(
            [ScriptEntry(match=e.match, response=e.response) for e in entries]
        )
        store = RunStore(tmp_path / f"rerun{index}")
        result = run_strategy(
            corpus,
            Strategy.CATEGORY_QA,
            RunConfig(workers=workers),
            LlmGateway(fixture),
            store=store,
        )
        assert len(fixture.calls) == 3 * 20, "prompt budget is 3 completions/statement"
        assert len(result.records) == 20 and not result.failed and not result.skipped
        run_dir = store.run_dir(result.run_id)
        artifacts.append(
            (
                result.run_id,
                (run_dir / "records.jsonl").read_bytes(),
                (run_dir / "report.json").read_bytes(),
            )
        )
    elapsed = time.monotonic() - started
    first = artifacts[0]
    for other in artifacts[1:]:
        assert other == first, "rerun artifacts differ"
    assert elapsed < 10.0, f"3 reruns took {elapsed:.2f}s"


@pytest.mark.acceptance("parser-suite")
def test_parser_fixture_suites_agree_with_hand_labels():
    assert len(parser_fixtures.SCORE_FIXTURES) >= 40
    assert len(parser_fixtures.CATEGORY_FIXTURES) >= 50
    assert len(parser_fixtures.ROUTE_FIXTURES) >= 30

    def outcome_matches(parse, reply, expected, compare):
        if isinstance(expected, type) and issubclass(expected, Exception):
            try:
                parse(reply)
            except expected:
                return True
            return False
        return compare(parse(reply), expected)

    for reply, expected in parser_fixtures.SCORE_FIXTURES:
        assert outcome_matches(
            parse_score_reply, reply, expected, lambda got, want: got.snapped == want
        ), reply
    for reply, expected in parser_fixtures.ROUTE_FIXTURES:
        assert outcome_matches(
            parse_route_reply, reply, expected, lambda got, want: got.value is want
        ), reply
    for reply, expected in parser_fixtures.CATEGORY_FIXTURES:
        assert outcome_matches(
            parse_category_reply,
            reply,
            expected,
            lambda got, want: (
                got.question == want[0]
                and "".join(c.letter for c in got.categories) == want[1]
            ),
        ), reply


@pytest.mark.acceptance("ngram-and-lexicon-equivalence")
def test_frequency_and_lexicon_analyses_match_closed_forms(tmp_path):
    rng = random.Random(7)
    vocabulary = [
        "claim", "source", "video", "date", "speaker",
        "evidence", "unclear", "law", "state", "report",
    ]
    documents = [
        " ".join(rng.choice(vocabulary) for _ in range(rng.randint(0, 12)))
        for _ in range(200)
    ]
    config = TokenizeConfig()
    tokenized = [tokenize(d, config) for d in documents]
    for n in (1, 2):
        table = ngram_frequencies(documents, n, top_k=10_000, config=config)
        assert list(table.entries) == oracle_ngram_frequencies(tokenized, n)

    # 3-d store with exact-arithmetic cosines against the seed (1, 0, 0):
    # beta 3/5 sits exactly on the threshold (excluded, "above" is strict),
    # gamma 4/5 is in, the rest are at 0 or below, zed is the zero vector.
    vectors = tmp_path / "vectors.txt"
    vectors.write_text(
        "alpha 1 0 0\n"
        "beta 3 4 0\n"
        "gamma 4 3 0\n"
        "delta 0 1 0\n"
        "neg -1 0 0\n"
        "zed 0 0 0\n",
        encoding="utf-8",
    )
    lexicon = expand_seed_lexicon(
        ["alpha", "omega"], EmbeddingStore.load(vectors), threshold=0.6
    )
    assert lexicon.expanded == (("alpha", 1.0), ("omega", 1.0), ("gamma", 0.8))
    assert lexicon.missing == ("omega",)


@pytest.mark.acceptance("dataset-possibility-filter")
def test_possibility_filter_keeps_hard_and_impossible_rows(tmp_path):
    rows = ["id,statement,possibility"]
    labels = ["possible"] * 19 + ["hard"] * 7 + ["impossible"] * 4
    for i, label in enumerate(labels):
        rows.append(f"r{i:02d},Synthetic claim {i:02d} for the filter check.,{label}")
    corpus_path = tmp_path / "synthetic.csv"
    corpus_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    corpus = load_corpus(corpus_path)
    assert len(corpus) == 30
    kept = filter_by_possibility(corpus, drop=[PossibilityLabel.POSSIBLE])
    assert len(kept) == 11
    assert {s.possibility for s in kept} == {
        PossibilityLabel.HARD,
        PossibilityLabel.IMPOSSIBLE,
    }


@pytest.mark.acceptance("dataset-possibility-filter")
@pytest.mark.skipif(
    not os.environ.get("LIAR_NEW_PATH"),
    reason="set LIAR_NEW_PATH to check the licensed corpus counts",
)
def test_licensed_corpus_filters_to_published_count():
    schema_raw = os.environ.get("LIAR_NEW_SCHEMA")
    schema = (
        SchemaConfig.from_dict(json.loads(schema_raw))
        if schema_raw
        else SchemaConfig(id_column="example_id", verdict_column=None)
    )
    corpus = load_corpus(os.environ["LIAR_NEW_PATH"], schema)
    assert len(corpus) == 1957
    kept = filter_by_possibility(corpus, drop=[PossibilityLabel.POSSIBLE])
    assert len(kept) == 1030


UKRAINE_CLAIM = Statement(
    id="ukr-president",
    text=(
        "The President of Ukraine owns a $35 million home in Florida "
        "and has $1.2 billion in an overseas bank account."
    ),
    article=(
        "Fact-checkers traced the claim to social media posts from February 2022 "
        "naming Volodymyr Zelenskyy and found no property or banking records "
        "supporting it; the rumor also circulated with a video by Nicolas Tetrault."
    ),
)

FILLED_CONTEXT_BLOCK = (
    "Name of speaker or person referred to in the statement (if relevant): "
    "Volodymyr Zelenskyy, Nicolas Tetrault.\n"
    "Location referred to in the statement (if relevant): Ukraine, Florida.\n"
    "Date including year or time period referred to in the statement (if relevant): "
    "The claim began circulating in February 2022.\n"
    "Vague or unspecified subject referred to in the statement (if relevant): "
    "I cannot provide this information."
)


@pytest.mark.acceptance("documented-example-replay")
def test_targeted_question_decides_where_filled_context_abstains():
    """Replays a documented comparison: the same claim resolves to a hard
    False through a targeted clarifying question, but only to an abstention
    when the context is a generic filled-in block."""
    qa_resolver = UncertaintyResolver(
        LlmGateway(
            ScriptFixture(
                [
                    ScriptEntry(
                        match=ASK,
                        response="Which President of Ukraine are you referring to? A",
                    ),
                    ScriptEntry(
                        match=SIMULATE,
                        response=(
                            "The President of Ukraine being referred to in the "
                            "statement is Volodymyr Zelenskyy."
                        ),
                    ),
                    ScriptEntry(match=RATE, response="0"),
                ]
            )
        )
    )
    qa_record = qa_resolver.resolve(UKRAINE_CLAIM, Strategy.CATEGORY_QA)
    assert qa_record.question == "Which President of Ukraine are you referring to?"
    assert qa_record.question_categories == (MissingInfoCategory.SPEAKER,)
    assert qa_record.score.snapped == 0.0

    fill_resolver = UncertaintyResolver(
        LlmGateway(
            ScriptFixture(
                [
                    ScriptEntry(match=FILL, response=FILLED_CONTEXT_BLOCK),
                    ScriptEntry(match=RATE, response="0.5"),
                ]
            )
        )
    )
    fill_record = fill_resolver.resolve(UKRAINE_CLAIM, Strategy.FILL_BLANK)
    assert fill_record.score.snapped == 0.5


@pytest.mark.acceptance("live-model-deltas")
@pytest.mark.skipif(
    not (
        os.environ.get("CLARIFACT_LIVE_ACCEPTANCE") == "1"
        and os.environ.get("CLARIFACT_OPENAI_API_KEY")
        and os.environ.get("LIAR_NEW_PATH")
    ),
    reason=(
        "live check: set CLARIFACT_LIVE_ACCEPTANCE=1, CLARIFACT_OPENAI_API_KEY "
        "and LIAR_NEW_PATH (non-gating)"
    ),
)
def test_live_backend_category_qa_beats_baseline(tmp_path):
    from clarifact.gateway import OpenAIBackend

    schema_raw = os.environ.get("LIAR_NEW_SCHEMA")
    schema = (
        SchemaConfig.from_dict(json.loads(schema_raw))
        if schema_raw
        else SchemaConfig(id_column="example_id")
    )
    corpus = load_corpus(os.environ["LIAR_NEW_PATH"], schema)
    corpus = filter_by_possibility(corpus, drop=[PossibilityLabel.POSSIBLE])
    sample_size = int(os.environ.get("CLARIFACT_LIVE_SAMPLE", "40"))
    sampled = random.Random(0).sample(list(corpus), min(sample_size, len(corpus)))
    corpus = corpus_from_statements(sampled)
    if all(s.article is None for s in corpus):
        pytest.skip("corpus carries no article text; the simulated user needs it")

    backend = OpenAIBackend(
        base_url=os.environ.get(
            "CLARIFACT_OPENAI_BASE_URL", "https://api.openai.com/v1"
        ),
        api_key=os.environ["CLARIFACT_OPENAI_API_KEY"],
    )
    gateway = LlmGateway(backend)
    config = RunConfig(model=os.environ.get("CLARIFACT_LIVE_MODEL", "gpt-4"))
    store = RunStore(tmp_path / "live")
    baseline = run_strategy(corpus, Strategy.BASELINE_ENABLED, config, gateway, store)
    category = run_strategy(corpus, Strategy.CATEGORY_QA, config, gateway, store)
    assert baseline.metrics is not None and category.metrics is not None
    assert category.metrics.macro_f1 >= baseline.metrics.macro_f1 + 5.0
    assert category.metrics.resolution > baseline.metrics.resolution
