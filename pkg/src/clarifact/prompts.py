"""Prompt templates and reply parsers.

Templates are fixed artifacts with named slots written as ``[slot]``; the
slot vocabulary is statement, question, context, article. Rendering is a
single pass, so slot markers inside bound values are never re-expanded.

Parsers turn free-text model replies into typed values. They are lenient by
default (models decorate their answers) with a strict mode that accepts only
the bare instructed format.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from clarifact.domain import (
    MissingInfoCategory,
    Route,
    RouteKind,
    RouteSource,
    VeracityScore,
    category_from_letter,
    snap_score,
)
from clarifact.errors import (
    MissingSlot,
    NoCategoryFound,
    NoRouteFound,
    NoScoreFound,
    OutOfRange,
)


class TemplateId(enum.Enum):
    GENERIC_QUESTION = "GenericQuestion"
    KEYWORD_PAIR = "KeywordPair"
    CATEGORY_QUESTION = "CategoryQuestion"
    ROUTE_DECISION = "RouteDecision"
    VERACITY_ENABLED = "VeracityEnabled"
    VERACITY_ENABLED_WITH_CONTEXT = "VeracityEnabledWithContext"
    VERACITY_DISABLED = "VeracityDisabled"
    VERACITY_DISABLED_WITH_CONTEXT = "VeracityDisabledWithContext"
    SIMULATED_USER = "SimulatedUser"
    FILL_BLANK_EXTRACT = "FillBlankExtract"


_STATEMENT_LINE = "Rate the truthfulness of the following statement: [statement]."

_CONTEXT_LINE = "The following context from a user may be provided: [context]."

_RATING_CLAUSE = (
    "Please rate the statement's truthfulness on a scale from 0 to 1, where 0 "
    "signifies 'False' and 1 signifies 'True'. If uncertain or lacking context, "
    "use 0.5. Do not make assumptions or provide explanations; respond with a "
    "number."
)

_DISABLED_CLAUSE = (
    "Respond with 0 or 1 to your best ability; do not provide any other "
    "responses. Do not make assumptions or provide explanations; only respond "
    "with a number."
)

_CATEGORY_QUESTION = """Classify the missing information in the statement by asking a clarifying question and assigning it to the correct category, where applicable. Use the letter associated with each category:

A: Speaker or person mentioned but not identified
B: Location mentioned but not specified
C: Textual evidence, information, or object mentioned but not specified
E: Visual or audio evidence specifically mentioned in the statement
F: Providing the date for the statement
G: Other (not related to any of the categories above)
Note: Categorize based on the most critical information missing.

Examples for reference:

A: "A nurse claims COVID is a hoax." - Which nurse are you referring to?
B: "Wages have gone up faster than inflation." - Which country are you referring to in regards to this statement?
C: "The vaccine has shown to have negative effects." - Which vaccine are you referring to?
E: "An image shows a map of Iran." - Can you provide the image you're referring to?
F: "New York has the lowest crime rate in the country." - Can you provide the date when this statement was made? (Not related to categories above)
E: "A scientist says the image shows a country's inflation grow over time." - Can you provide the image you're referring to? (In this case, the image will provide the most information.)
Given Statement: [statement]

Task: Formulate the clarifying question and identify the category or categories by their respective letters, separated by a vertical bar. End your response with the category letter or letters."""

_ROUTE_DECISION = """Consider the following statement: [statement], and a question regarding that statement: [question]. Your task is to decide the most suitable approach for answering the question based on two options: querying the user or conducting a web search.

The user possesses the following information related to the statement, only if it is relevant for understanding the statement:

Speaker or person mentioned but not specified (pronouns)
Vague location (state, country, city, school)
Date of the statement (year, time period, day, week)
Extremely vague/unspecified subjects (unspecified type of medicine, law, program)
Any non-textual evidence is not recoverable (image, video, audio)
A web search can provide an answer to the question if it is likely to retrieve context about the statement online.

Example: 'Muslim figure: We must have pork-free menus or we will leave U.S.' - We cannot identify the figure by conducting a web search.
Example 'The US passed a law that cuts taxes for the poor in 2021' - We do not know what the law is, but we are likely to find information via web search.

Task: Determine whether a user query or web search is better suited for answering the question. Respond with a 'U' for user query, and 'W' for web retrieval. Only select 'U' for the user if it's unlikely that the statement can be retrieved from the web."""

_GENERIC_QUESTION = """This is a conversation between a user and a question-answering bot.
User: Initial Question: [statement]
Bot: To answer this question, I need to ask the following clarifying question:"""

_KEYWORD_PAIR = """This is a conversation between a user and a question-answering bot. The bot has to limit its response to 2 words, one noun and one adjective to name the necessary detail.
User: Evaluate the truthfulness of this statement: [statement]
Bot: To evaluate the truthfulness, I need the following detail"""

REFUSAL_LINE = "I cannot provide this information."

_SIMULATED_USER = f"""You are simulating a user who encountered the following statement and wants it verified. You privately know the background reported in a fact-checking article, but you answer like an ordinary user: directly and concisely, providing only the kind of information a user would plausibly have — the speaker or person referred to, a rough location, the date or time period, or the vague or unspecified subject (such as a law, program, or type of medicine). Never reveal or hint at whether the statement is true or false, and never mention any rating or verdict. If the article does not contain the information the question asks for, reply exactly: {REFUSAL_LINE}

Statement: [statement]
Article: [article]
Question: [question]
Answer:"""

_FILL_BLANK_EXTRACT = f"""You are given a statement and a fact-checking article about it. Fill in the missing background context for the statement using only information found in the article. Complete every line below; where the article does not provide the information, write exactly: {REFUSAL_LINE}

Statement: [statement]
Article: [article]

Name of speaker or person referred to in the statement (if relevant):
Location referred to in the statement (if relevant):
Date including year or time period referred to in the statement (if relevant):
Vague or unspecified subject referred to in the statement (if relevant):"""

_BODIES: Mapping[TemplateId, str] = {
    TemplateId.GENERIC_QUESTION: _GENERIC_QUESTION,
    TemplateId.KEYWORD_PAIR: _KEYWORD_PAIR,
    TemplateId.CATEGORY_QUESTION: _CATEGORY_QUESTION,
    TemplateId.ROUTE_DECISION: _ROUTE_DECISION,
    TemplateId.VERACITY_ENABLED: f"{_STATEMENT_LINE} {_RATING_CLAUSE}",
    TemplateId.VERACITY_ENABLED_WITH_CONTEXT: (
        f"{_STATEMENT_LINE} {_CONTEXT_LINE} {_RATING_CLAUSE}"
    ),
    TemplateId.VERACITY_DISABLED: f"{_STATEMENT_LINE} {_RATING_CLAUSE} {_DISABLED_CLAUSE}",
    TemplateId.VERACITY_DISABLED_WITH_CONTEXT: (
        f"{_STATEMENT_LINE} {_CONTEXT_LINE} {_RATING_CLAUSE} {_DISABLED_CLAUSE}"
    ),
    TemplateId.SIMULATED_USER: _SIMULATED_USER,
    TemplateId.FILL_BLANK_EXTRACT: _FILL_BLANK_EXTRACT,
}

_SLOT_PATTERN = re.compile(r"\[(statement|question|context|article)\]")


def template_body(template_id: TemplateId) -> str:
    return _BODIES[template_id]


def required_slots(template_id: TemplateId) -> tuple[str, ...]:
    seen: list[str] = []
    for match in _SLOT_PATTERN.finditer(_BODIES[template_id]):
        if match.group(1) not in seen:
            seen.append(match.group(1))
    return tuple(seen)


def render(template_id: TemplateId, bindings: Mapping[str, str]) -> str:
    """Substitute slot values into a template in a single pass.

    Every slot present in the body must be bound; extra bindings are
    ignored. Values are inserted verbatim — markers inside a bound value
    survive as literal text.
    """
    body = _BODIES[template_id]

    def substitute(match: re.Match) -> str:
        slot = match.group(1)
        if slot not in bindings:
            raise MissingSlot(slot)
        return bindings[slot]

    return _SLOT_PATTERN.sub(substitute, body)


def qa_context(question: str, answer: str) -> str:
    """Compose a clarifying exchange into the with-context slot value."""
    return f"Question: {question}, Answer: {answer}"


def catalog() -> dict[str, str]:
    """Template id → body, for export to docs and UIs."""
    return {tid.value: body for tid, body in _BODIES.items()}


def catalog_json() -> str:
    return json.dumps(catalog(), indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# Reply parsers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CategoryReply:
    """A clarifying question plus the categories the model assigned."""

    question: str
    categories: tuple[MissingInfoCategory, ...]

    def __post_init__(self) -> None:
        if not self.categories:
            raise NoCategoryFound("a category reply must carry at least one category")
        if len(set(self.categories)) != len(self.categories):
            raise ValueError("duplicate categories in reply")

    @property
    def primary(self) -> MissingInfoCategory:
        return self.categories[0]


# A trailing block of single letters separated by vertical bars, optionally
# wrapped in closing punctuation, at the very end of a line.
_CATEGORY_BLOCK = re.compile(
    r"(?<![A-Za-z0-9])([A-Za-z](?:\s*\|\s*[A-Za-z])*)[\s.\"')\]]*$"
)
_CATEGORY_BLOCK_STRICT = re.compile(
    r"(?<![A-Za-z0-9])([A-Za-z](?:\|[A-Za-z])*)$"
)
_QUESTION_TRAILER = re.compile(r"[\s:\-\u2013\u2014,|(\[\"']+$")
# "Category:", "The categories are", "Answer" … — label chatter models put
# between the question and the letters.
_BOILERPLATE_TAIL = re.compile(
    r"(?:\bthe\s+)?\b(?:category|categories|letters?|answer)(?:\s+(?:is|are))?\s*$",
    re.IGNORECASE,
)


def parse_category_reply(text: str, strict: bool = False) -> CategoryReply:
    """Extract the clarifying question and trailing category letters.

    The letter block is searched on the last non-empty line, per the
    instruction to end the response with the letters. The question is
    everything before the block, with dangling separators and a bare
    "Category:"-style label line removed. Letters are validated, so a
    trailing D fails rather than passing as a category.
    """
    lines = text.splitlines()
    last_index = None
    for index in range(len(lines) - 1, -1, -1):
        if lines[index].strip():
            last_index = index
            break
    if last_index is None:
        raise NoCategoryFound("empty reply")

    last_line = lines[last_index].rstrip()
    pattern = _CATEGORY_BLOCK_STRICT if strict else _CATEGORY_BLOCK
    match = pattern.search(last_line)
    if match is None:
        raise NoCategoryFound(f"no trailing category letters in {last_line!r}")

    letters = [piece.strip() for piece in match.group(1).split("|")]
    categories: list[MissingInfoCategory] = []
    for letter in letters:
        category = category_from_letter(letter)
        if category not in categories:
            categories.append(category)

    remainder = _QUESTION_TRAILER.sub("", last_line[: match.start(1)])
    remainder = _BOILERPLATE_TAIL.sub("", remainder)
    remainder = _QUESTION_TRAILER.sub("", remainder)
    question_lines = lines[:last_index] + ([remainder] if remainder.strip() else [])
    question = "\n".join(question_lines).strip()
    return CategoryReply(question=question, categories=tuple(categories))


def synthesize_category_reply(reply: CategoryReply) -> str:
    """Render a CategoryReply back into instructed reply format."""
    return f"{reply.question} {'|'.join(c.letter for c in reply.categories)}"


_ROUTE_TOKEN = re.compile(r"(?<![A-Za-z0-9])([UuWw])(?![A-Za-z0-9])")


def parse_route_reply(text: str, strict: bool = False) -> Route:
    """Resolve a routing reply into user-query or web-retrieval.

    Lenient mode scans for standalone U/W tokens (skipping abbreviation
    contexts like "U.S.") and lets the last one win, which tolerates
    replies that first restate both options.
    """
    if strict:
        bare = text.strip().strip("'\".")
        if bare in ("U", "W", "u", "w"):
            kind = RouteKind.USER_QUERY if bare.upper() == "U" else RouteKind.WEB_RETRIEVAL
            return Route(value=kind, source=RouteSource.LLM_ROUTER)
        raise NoRouteFound(f"reply is not a bare route token: {text!r}")

    last_kind = None
    for match in _ROUTE_TOKEN.finditer(text):
        after = text[match.end(1) : match.end(1) + 2]
        if len(after) == 2 and after[0] == "." and after[1].isalpha():
            continue  # abbreviation like U.S. or W.H.O.
        last_kind = (
            RouteKind.USER_QUERY
            if match.group(1).upper() == "U"
            else RouteKind.WEB_RETRIEVAL
        )
    if last_kind is None:
        raise NoRouteFound(f"no route token in {text!r}")
    return Route(value=last_kind, source=RouteSource.LLM_ROUTER)


_NUMERAL = re.compile(r"(?<![\d.])(\d+(?:\.\d+)?|\.\d+)")
_BARE_NUMERAL = re.compile(r"^(\d+(?:\.\d+)?|\.\d+)$")


def parse_score_reply(text: str, strict: bool = False) -> VeracityScore:
    """Extract the first numeral from a veracity reply and snap it.

    A numeral outside [0, 1] is an error, not an abstention: "5" means the
    model ignored the scale, and mapping that to anything would fabricate a
    verdict.
    """
    if strict:
        match = _BARE_NUMERAL.match(text.strip())
        if match is None:
            raise NoScoreFound(f"reply is not a bare numeral: {text!r}")
    else:
        match = _NUMERAL.search(text)
        if match is None:
            raise NoScoreFound(f"no numeral in reply: {text!r}")
    value = float(match.group(1))
    if not (0.0 <= value <= 1.0):
        raise OutOfRange(f"numeral {match.group(1)} outside [0, 1] in {text!r}")
    return snap_score(value, reply_text=text)


def parse_fill_blank_reply(text: str) -> str:
    """Normalize a fill-in-the-blank extraction into a context block.

    The reply should already be the four labeled lines; we just strip
    leading/trailing chatter around the block when present.
    """
    anchor = "Name of speaker or person referred to in the statement"
    position = text.find(anchor)
    return text[position:].strip() if position >= 0 else text.strip()
