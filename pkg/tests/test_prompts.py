"""Templates render verbatim; parsers agree with the hand-labeled fixtures."""

import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clarifact.domain import MissingInfoCategory, RouteKind, RouteSource
from clarifact.errors import MissingSlot, NoRouteFound, NoScoreFound
from clarifact.prompts import (
    REFUSAL_LINE,
    CategoryReply,
    TemplateId,
    catalog,
    catalog_json,
    parse_category_reply,
    parse_fill_blank_reply,
    parse_route_reply,
    parse_score_reply,
    qa_context,
    render,
    required_slots,
    synthesize_category_reply,
    template_body,
)
from parser_fixtures import CATEGORY_FIXTURES, ROUTE_FIXTURES, SCORE_FIXTURES


class TestRender:
    def test_veracity_enabled_opening(self):
        text = render(TemplateId.VERACITY_ENABLED, {"statement": "X"})
        assert text.startswith("Rate the truthfulness of the following statement: X.")
        assert "scale from 0 to 1" in text
        assert "If uncertain or lacking context, use 0.5." in text

    def test_veracity_disabled_ending(self):
        text = render(TemplateId.VERACITY_DISABLED, {"statement": "X"})
        assert text.endswith(
            "Respond with 0 or 1 to your best ability; do not provide any other "
            "responses. Do not make assumptions or provide explanations; only "
            "respond with a number."
        )

    def test_with_context_composition(self):
        text = render(
            TemplateId.VERACITY_ENABLED_WITH_CONTEXT,
            {"statement": "X", "context": qa_context("Which nurse?", "Jane Doe")},
        )
        assert (
            "The following context from a user may be provided: "
            "Question: Which nurse?, Answer: Jane Doe." in text
        )

    def test_missing_slot(self):
        with pytest.raises(MissingSlot) as exc:
            render(TemplateId.CATEGORY_QUESTION, {})
        assert exc.value.slot == "statement"

    def test_single_pass_no_reexpansion(self):
        text = render(TemplateId.VERACITY_ENABLED, {"statement": "[statement]"})
        assert "Rate the truthfulness of the following statement: [statement]." in text

    def test_required_slots(self):
        assert required_slots(TemplateId.VERACITY_ENABLED) == ("statement",)
        assert required_slots(TemplateId.ROUTE_DECISION) == ("statement", "question")
        assert required_slots(TemplateId.SIMULATED_USER) == (
            "statement",
            "article",
            "question",
        )
        assert required_slots(TemplateId.VERACITY_ENABLED_WITH_CONTEXT) == (
            "statement",
            "context",
        )

    def test_no_unbound_markers_after_render(self):
        bindings = {
            "statement": "S",
            "question": "Q",
            "context": "C",
            "article": "A",
        }
        for tid in TemplateId:
            text = render(tid, bindings)
            for slot in ("statement", "question", "context", "article"):
                assert f"[{slot}]" not in text

    @given(st.text(min_size=1, max_size=60), st.text(min_size=1, max_size=60))
    def test_injective_in_statement(self, a, b):
        if a != b:
            assert render(TemplateId.VERACITY_ENABLED, {"statement": a}) != render(
                TemplateId.VERACITY_ENABLED, {"statement": b}
            )


class TestTemplateBodies:
    def test_category_prompt_pins(self):
        body = template_body(TemplateId.CATEGORY_QUESTION)
        assert body.startswith("Classify the missing information in the statement")
        assert "A: Speaker or person mentioned but not identified" in body
        assert "B: Location mentioned but not specified" in body
        assert "C: Textual evidence, information, or object mentioned but not specified" in body
        assert "E: Visual or audio evidence specifically mentioned in the statement" in body
        assert "F: Providing the date for the statement" in body
        assert "G: Other (not related to any of the categories above)" in body
        assert '"A nurse claims COVID is a hoax." - Which nurse are you referring to?' in body
        assert "Given Statement: [statement]" in body
        assert body.endswith("End your response with the category letter or letters.")
        assert "D:" not in body

    def test_route_prompt_pins(self):
        body = template_body(TemplateId.ROUTE_DECISION)
        assert body.startswith("Consider the following statement: [statement]")
        assert "querying the user or conducting a web search" in body
        assert "'Muslim figure: We must have pork-free menus or we will leave U.S.'" in body
        assert "'The US passed a law that cuts taxes for the poor in 2021'" in body
        assert "Respond with a 'U' for user query, and 'W' for web retrieval." in body

    def test_generic_question_prompt(self):
        body = template_body(TemplateId.GENERIC_QUESTION)
        assert "question-answering bot" in body
        assert "User: Initial Question: [statement]" in body
        assert body.endswith(
            "Bot: To answer this question, I need to ask the following clarifying question:"
        )

    def test_keyword_prompt(self):
        body = template_body(TemplateId.KEYWORD_PAIR)
        assert "limit its response to 2 words, one noun and one adjective" in body
        assert "User: Evaluate the truthfulness of this statement: [statement]" in body
        assert body.endswith("Bot: To evaluate the truthfulness, I need the following detail")

    def test_fill_blank_lines(self):
        body = template_body(TemplateId.FILL_BLANK_EXTRACT)
        for line in (
            "Name of speaker or person referred to in the statement (if relevant):",
            "Location referred to in the statement (if relevant):",
            "Date including year or time period referred to in the statement (if relevant):",
            "Vague or unspecified subject referred to in the statement (if relevant):",
        ):
            assert line in body
        assert REFUSAL_LINE in body

    def test_simulated_user_guidelines(self):
        body = template_body(TemplateId.SIMULATED_USER)
        assert "directly and concisely" in body
        assert REFUSAL_LINE in body
        assert "Never reveal" in body

    def test_catalog_matches_docs_export(self):
        exported = Path(__file__).resolve().parents[1] / "docs" / "prompt-catalog.json"
        assert exported.exists(), "docs/prompt-catalog.json missing"
        assert json.loads(exported.read_text(encoding="utf-8")) == catalog()
        assert exported.read_text(encoding="utf-8") == catalog_json()

    def test_catalog_covers_all_ids(self):
        assert set(catalog()) == {tid.value for tid in TemplateId}


class TestParseScore:
    @pytest.mark.parametrize("reply,expected", SCORE_FIXTURES)
    def test_fixtures(self, reply, expected):
        if isinstance(expected, float):
            score = parse_score_reply(reply)
            assert score.snapped == expected
            assert score.reply_text == reply
        else:
            with pytest.raises(expected):
                parse_score_reply(reply)

    def test_strict_mode(self):
        assert parse_score_reply("0.5", strict=True).snapped == 0.5
        with pytest.raises(NoScoreFound):
            parse_score_reply("Score: 0.5", strict=True)

    @given(st.floats(min_value=0, max_value=1, allow_nan=False).map(lambda v: round(v, 6)))
    def test_snapped_is_three_valued(self, value):
        score = parse_score_reply(f"Rating: {value:.6f}")
        assert score.snapped in (0.0, 0.5, 1.0)


class TestParseRoute:
    @pytest.mark.parametrize("reply,expected", ROUTE_FIXTURES)
    def test_fixtures(self, reply, expected):
        if isinstance(expected, RouteKind):
            route = parse_route_reply(reply)
            assert route.value is expected
            assert route.source is RouteSource.LLM_ROUTER
        else:
            with pytest.raises(expected):
                parse_route_reply(reply)

    def test_strict_mode(self):
        assert parse_route_reply("U", strict=True).value is RouteKind.USER_QUERY
        assert parse_route_reply("'W'", strict=True).value is RouteKind.WEB_RETRIEVAL
        with pytest.raises(NoRouteFound):
            parse_route_reply("The answer is U", strict=True)


class TestParseCategory:
    @pytest.mark.parametrize("reply,expected", CATEGORY_FIXTURES)
    def test_fixtures(self, reply, expected):
        if isinstance(expected, tuple):
            question, letters = expected
            parsed = parse_category_reply(reply)
            assert parsed.question == question
            assert "".join(c.letter for c in parsed.categories) == letters
        else:
            with pytest.raises(expected):
                parse_category_reply(reply)

    def test_primary_is_first(self):
        parsed = parse_category_reply("Can you provide the image? E|F")
        assert parsed.primary is MissingInfoCategory.EVIDENCE

    def test_reply_type_invariants(self):
        with pytest.raises(Exception):
            CategoryReply(question="q", categories=())
        with pytest.raises(ValueError):
            CategoryReply(
                question="q",
                categories=(MissingInfoCategory.SPEAKER, MissingInfoCategory.SPEAKER),
            )

    questions = st.lists(
        st.sampled_from(
            "which nurse are you referring to what law when statement made image country vaccine date who said this".split()
        ),
        min_size=1,
        max_size=8,
    ).map(lambda ws: " ".join(ws) + "?")
    category_lists = st.lists(
        st.sampled_from(sorted(MissingInfoCategory, key=lambda c: c.letter)),
        min_size=1,
        max_size=6,
        unique=True,
    )

    @given(questions, category_lists)
    def test_round_trip(self, question, categories):
        reply = CategoryReply(question=question, categories=tuple(categories))
        assert parse_category_reply(synthesize_category_reply(reply)) == reply


class TestFillBlank:
    def test_passthrough(self):
        block = (
            "Name of speaker or person referred to in the statement (if relevant): X. "
            "Location referred to in the statement (if relevant): Y."
        )
        assert parse_fill_blank_reply(block) == block

    def test_strips_leading_chatter(self):
        block = "Name of speaker or person referred to in the statement (if relevant): X."
        assert parse_fill_blank_reply("Sure! Here you go:\n" + block) == block
