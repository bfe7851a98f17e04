"""Uncertainty resolution: per-statement steps, batch strategy runs, sessions.

The resolver turns one ambiguous claim into a veracity verdict by composing
four steps — ask a clarifying question, decide who can answer it, obtain the
answer, re-score with the answer in context. Batch runs sweep a strategy over
a corpus with a bounded worker pool and persist everything through the run
store; interactive sessions expose the same steps one claim at a time.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional

from clarifact.dataset import Corpus
from clarifact.domain import (
    MissingInfoCategory,
    Route,
    RouteKind,
    RouteSource,
    Statement,
    VeracityScore,
)
from clarifact.errors import (
    ClarifactError,
    EmptyCorpus,
    InvalidCategoryLetter,
    MissingArticle,
    MissingCategory,
    NoScoreFound,
    OutOfRange,
    ParseError,
    UnknownSessionId,
    WrongState,
)
from clarifact.gateway import ChatMessage, CompletionRequest, LlmGateway
from clarifact.metrics import DEFAULT_POLICY, AbstainPolicy, compute_report, render_table
from clarifact.prompts import (
    TemplateId,
    parse_category_reply,
    parse_fill_blank_reply,
    parse_route_reply,
    parse_score_reply,
    qa_context,
    render,
)
from clarifact.records import (
    ARTICLE_REQUIRED,
    QA_STRATEGIES,
    FailureEntry,
    RunResult,
    SkipEntry,
    StatementRecord,
    Strategy,
    TranscriptEntry,
    run_id_for,
)
from clarifact.store import RunManifest, RunStore, SessionStore

log = logging.getLogger(__name__)


class QuestionMode(enum.Enum):
    GENERIC = "generic"
    CATEGORY_BASED = "category-based"


class RouterKind(enum.Enum):
    LLM = "llm"
    HEURISTIC = "heuristic"


class VerdictMode(enum.Enum):
    ENABLED = "enabled"
    DISABLED = "disabled"


#: Categories the heuristic router sends to the user: only a person who saw
#: the claim can name an unidentified speaker or supply non-textual evidence;
#: locations, subjects, dates, and the catch-all are searchable.
USER_QUERY_CATEGORIES = frozenset(
    {MissingInfoCategory.SPEAKER, MissingInfoCategory.EVIDENCE}
)

_CATEGORY_FORMAT_REMINDER = (
    "Remember: end your response with the category letter or letters only, "
    "multiple letters separated by '|'."
)
_SCORE_FORMAT_REMINDER = "Respond with only a single number between 0 and 1."


def heuristic_route(
    categories: Optional[tuple[MissingInfoCategory, ...]],
) -> Route:
    """Route on the primary category alone, no completion spent."""
    if not categories:
        raise MissingCategory("heuristic routing needs at least one category")
    kind = (
        RouteKind.USER_QUERY
        if categories[0] in USER_QUERY_CATEGORIES
        else RouteKind.WEB_RETRIEVAL
    )
    return Route(value=kind, source=RouteSource.HEURISTIC_ROUTER)


def _token_count(text: str) -> int:
    return len(text.split())


class UncertaintyResolver:
    """Runs the per-statement steps against one LLM gateway.

    Every completion issued is appended to the caller's transcript as a
    (request digest, reply) pair, so prompt budgets and replay behaviour are
    assertable after the fact.
    """

    def __init__(
        self,
        gateway: LlmGateway,
        model: str = "gpt-4",
        temperature: float = 0.0,
        max_tokens: Optional[int] = None,
    ):
        self._gateway = gateway
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens

    def _complete(
        self, prompt: str, transcript: list[TranscriptEntry], tag: str = ""
    ) -> str:
        request = CompletionRequest(
            messages=(ChatMessage(role="user", content=prompt),),
            model=self.model,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            tag=tag,
        )
        completion = self._gateway.complete(request)
        transcript.append(TranscriptEntry(digest=request.digest(), reply=completion.text))
        return completion.text

    # -- individual steps ------------------------------------------------------

    def step_question(
        self,
        statement: Statement,
        mode: QuestionMode,
        transcript: list[TranscriptEntry],
    ) -> tuple[str, Optional[tuple[MissingInfoCategory, ...]]]:
        """Generate the clarifying question; category mode also classifies."""
        if mode is QuestionMode.GENERIC:
            prompt = render(TemplateId.GENERIC_QUESTION, {"statement": statement.text})
            reply = self._complete(prompt, transcript, tag="question")
            return reply.strip(), None

        prompt = render(TemplateId.CATEGORY_QUESTION, {"statement": statement.text})
        reply = self._complete(prompt, transcript, tag="question")
        try:
            parsed = parse_category_reply(reply)
        except (ParseError, InvalidCategoryLetter) as exc:
            log.debug("category reply unparseable (%s); retrying with reminder", exc)
            reply = self._complete(
                f"{prompt}\n\n{_CATEGORY_FORMAT_REMINDER}", transcript, tag="question-retry"
            )
            parsed = parse_category_reply(reply)
        return parsed.question, parsed.categories

    def step_route(
        self,
        statement: Statement,
        question: str,
        router: RouterKind,
        transcript: list[TranscriptEntry],
        categories: Optional[tuple[MissingInfoCategory, ...]] = None,
    ) -> Route:
        """Decide whether the user or a web search should answer the question."""
        if not question.strip():
            raise ValueError("routing needs a non-empty question")
        if router is RouterKind.HEURISTIC:
            return heuristic_route(categories)
        prompt = render(
            TemplateId.ROUTE_DECISION,
            {"statement": statement.text, "question": question},
        )
        reply = self._complete(prompt, transcript, tag="route")
        return parse_route_reply(reply)

    def step_simulate_user(
        self,
        statement: Statement,
        question: str,
        transcript: list[TranscriptEntry],
    ) -> str:
        """Answer the question as a user would, reading the article privately."""
        if statement.article is None:
            raise MissingArticle(
                f"statement {statement.id!r} has no article to answer from"
            )
        prompt = render(
            TemplateId.SIMULATED_USER,
            {
                "statement": statement.text,
                "article": statement.article,
                "question": question,
            },
        )
        return self._complete(prompt, transcript, tag="simulate-user").strip()

    def step_fill_blank(
        self, statement: Statement, transcript: list[TranscriptEntry]
    ) -> str:
        """Extract a structured context block from the article."""
        if statement.article is None:
            raise MissingArticle(
                f"statement {statement.id!r} has no article to extract from"
            )
        prompt = render(
            TemplateId.FILL_BLANK_EXTRACT,
            {"statement": statement.text, "article": statement.article},
        )
        reply = self._complete(prompt, transcript, tag="fill-blank")
        return parse_fill_blank_reply(reply)

    def step_verdict(
        self,
        statement: Statement,
        context: Optional[str],
        mode: VerdictMode,
        transcript: list[TranscriptEntry],
    ) -> VeracityScore:
        """Score truthfulness, optionally with added context; retry once."""
        if context is None:
            template = (
                TemplateId.VERACITY_ENABLED
                if mode is VerdictMode.ENABLED
                else TemplateId.VERACITY_DISABLED
            )
            bindings = {"statement": statement.text}
        else:
            template = (
                TemplateId.VERACITY_ENABLED_WITH_CONTEXT
                if mode is VerdictMode.ENABLED
                else TemplateId.VERACITY_DISABLED_WITH_CONTEXT
            )
            bindings = {"statement": statement.text, "context": context}
        prompt = render(template, bindings)
        reply = self._complete(prompt, transcript, tag="verdict")
        try:
            return parse_score_reply(reply)
        except (NoScoreFound, OutOfRange) as exc:
            log.debug("verdict reply unusable (%s); retrying with reminder", exc)
            reply = self._complete(
                f"{prompt}\n\n{_SCORE_FORMAT_REMINDER}", transcript, tag="verdict-retry"
            )
            return parse_score_reply(reply)

    # -- one statement, one strategy -------------------------------------------

    def resolve(
        self,
        statement: Statement,
        strategy: Strategy,
        router: Optional[RouterKind] = None,
        enforce_routing: bool = False,
    ) -> StatementRecord:
        """Run one strategy's full prompt sequence over one statement."""
        transcript: list[TranscriptEntry] = []
        question: Optional[str] = None
        categories: Optional[tuple[MissingInfoCategory, ...]] = None
        route: Optional[Route] = None
        answer: Optional[str] = None
        context_block: Optional[str] = None
        token_lengths: Optional[tuple[int, int]] = None

        if strategy is Strategy.BASELINE_ENABLED:
            score = self.step_verdict(statement, None, VerdictMode.ENABLED, transcript)
        elif strategy is Strategy.BASELINE_DISABLED:
            score = self.step_verdict(statement, None, VerdictMode.DISABLED, transcript)
        elif strategy is Strategy.ORACLE:
            if statement.article is None:
                raise MissingArticle(f"statement {statement.id!r} has no article")
            context_block = statement.article
            score = self.step_verdict(
                statement, context_block, VerdictMode.ENABLED, transcript
            )
        elif strategy is Strategy.FILL_BLANK:
            context_block = self.step_fill_blank(statement, transcript)
            score = self.step_verdict(
                statement, context_block, VerdictMode.ENABLED, transcript
            )
        elif strategy in QA_STRATEGIES:
            mode = (
                QuestionMode.GENERIC
                if strategy is Strategy.GENERIC_QA
                else QuestionMode.CATEGORY_BASED
            )
            question, categories = self.step_question(statement, mode, transcript)
            if router is not None:
                route = self.step_route(
                    statement, question, router, transcript, categories=categories
                )
            verdict_mode = (
                VerdictMode.DISABLED
                if strategy is Strategy.CATEGORY_QA_DISABLED
                else VerdictMode.ENABLED
            )
            if (
                enforce_routing
                and route is not None
                and route.value is RouteKind.WEB_RETRIEVAL
            ):
                # Web-routed questions get no simulated answer; score bare.
                score = self.step_verdict(statement, None, verdict_mode, transcript)
            else:
                answer = self.step_simulate_user(statement, question, transcript)
                token_lengths = (_token_count(question), _token_count(answer))
                score = self.step_verdict(
                    statement, qa_context(question, answer), verdict_mode, transcript
                )
        else:  # pragma: no cover - enum is closed
            raise ValueError(f"unhandled strategy {strategy!r}")

        return StatementRecord(
            statement_id=statement.id,
            strategy=strategy,
            score=score,
            question=question,
            question_categories=categories,
            route=route,
            answer=answer,
            context_block=context_block,
            token_lengths=token_lengths,
            transcript=tuple(transcript),
        )


# ---------------------------------------------------------------------------
# Batch runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    model: str = "gpt-4"
    temperature: float = 0.0
    max_tokens: Optional[int] = None
    router: Optional[RouterKind] = None
    enforce_routing: bool = False
    abstain_policy: AbstainPolicy = DEFAULT_POLICY
    workers: int = 1
    resume: bool = False

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.enforce_routing and self.router is None:
            raise ValueError("enforce_routing requires a router")

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "router": None if self.router is None else self.router.value,
            "enforce_routing": self.enforce_routing,
            "abstain_policy": self.abstain_policy.value,
            "workers": self.workers,
            "resume": self.resume,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "RunConfig":
        known = {
            "model",
            "temperature",
            "max_tokens",
            "router",
            "enforce_routing",
            "abstain_policy",
            "workers",
            "resume",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown run config keys: {sorted(unknown)}")
        router = raw.get("router")
        policy = raw.get("abstain_policy", DEFAULT_POLICY.value)
        return cls(
            model=raw.get("model", "gpt-4"),
            temperature=float(raw.get("temperature", 0.0)),
            max_tokens=raw.get("max_tokens"),
            router=None if router in (None, "") else RouterKind(router),
            enforce_routing=bool(raw.get("enforce_routing", False)),
            abstain_policy=(
                policy if isinstance(policy, AbstainPolicy) else AbstainPolicy(policy)
            ),
            workers=int(raw.get("workers", 1)),
            resume=bool(raw.get("resume", False)),
        )


def run_strategy(
    corpus: Corpus,
    strategy: Strategy,
    config: RunConfig,
    gateway: LlmGateway,
    store: Optional[RunStore] = None,
) -> RunResult:
    """Sweep one strategy over a corpus: skip, resolve, score, persist.

    Statements lacking required inputs are skipped with a reason; statements
    whose resolution fails are recorded as failures and excluded from metrics;
    the run itself never aborts on a per-statement error.
    """
    if len(corpus) == 0:
        raise EmptyCorpus("cannot run a strategy over an empty corpus")

    resolver = UncertaintyResolver(
        gateway,
        model=config.model,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
    )
    corpus_digest = corpus.digest()
    run_id = run_id_for(strategy, corpus_digest, config.to_dict())

    skipped: list[SkipEntry] = []
    eligible: list[Statement] = []
    for statement in corpus:
        if statement.verdict is None:
            skipped.append(SkipEntry(statement.id, "missing-verdict"))
        elif strategy in ARTICLE_REQUIRED and statement.article is None:
            skipped.append(SkipEntry(statement.id, "missing-article"))
        else:
            eligible.append(statement)

    prior: dict[str, StatementRecord] = {}
    if store is not None:
        if config.resume and store.load_manifest(run_id) is not None:
            prior = {
                record.statement_id: record
                for record in store.load_records(run_id)
                if record.strategy is strategy
            }
            log.info("resuming run %s with %d prior records", run_id, len(prior))
        else:
            store.begin_run(
                RunManifest(
                    run_id=run_id,
                    strategy=strategy.value,
                    corpus_digest=corpus_digest,
                    config=config.to_dict(),
                )
            )

    pending = [s for s in eligible if s.id not in prior]
    results: dict[str, StatementRecord] = dict(prior)
    failures: dict[str, FailureEntry] = {}
    state_lock = threading.Lock()

    def work(statement: Statement) -> None:
        try:
            record = resolver.resolve(
                statement,
                strategy,
                router=config.router,
                enforce_routing=config.enforce_routing,
            )
        except ClarifactError as exc:
            log.warning("statement %s failed: %s", statement.id, exc)
            with state_lock:
                failures[statement.id] = FailureEntry(
                    statement.id, f"{type(exc).__name__}: {exc}"
                )
            return
        if store is not None:
            store.append_record(run_id, record)
        with state_lock:
            results[statement.id] = record

    try:
        if config.workers > 1 and len(pending) > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                list(pool.map(work, pending))
        else:
            for statement in pending:
                work(statement)

        ordered_records = tuple(
            results[s.id] for s in eligible if s.id in results
        )
        ordered_failures = tuple(
            failures[s.id] for s in eligible if s.id in failures
        )
        metrics = None
        if ordered_records:
            metrics = compute_report(
                [record.score for record in ordered_records],
                [corpus.get(record.statement_id).verdict for record in ordered_records],
                config.abstain_policy,
            )
        result = RunResult(
            run_id=run_id,
            strategy=strategy,
            corpus_digest=corpus_digest,
            records=ordered_records,
            skipped=tuple(skipped),
            failed=ordered_failures,
            metrics=metrics,
            config=config.to_dict(),
        )
    except Exception:
        if store is not None:
            store.mark_failed(run_id)
        raise

    if store is not None:
        table = render_table({strategy.value: metrics}) if metrics is not None else ""
        store.finalize_run(result, table=table)
    return result


# ---------------------------------------------------------------------------
# Interactive clarify sessions
# ---------------------------------------------------------------------------

class SessionState(enum.Enum):
    AWAITING_QUESTION = "awaiting-question"
    AWAITING_ANSWER = "awaiting-answer"
    ROUTED_TO_WEB = "routed-to-web"
    COMPLETED = "completed"


_ALLOWED_TRANSITIONS = frozenset(
    {
        (SessionState.AWAITING_QUESTION, SessionState.AWAITING_ANSWER),
        (SessionState.AWAITING_QUESTION, SessionState.ROUTED_TO_WEB),
        (SessionState.AWAITING_ANSWER, SessionState.COMPLETED),
    }
)

WEB_ROUTE_MESSAGE = (
    "This question can likely be answered from public sources; try a web "
    "search for the statement. No user answer is needed."
)


@dataclass(frozen=True)
class ClarifySession:
    """One interactive clarification of one claim.

    ``error`` holds diagnostics from a failed step without consuming a state:
    the state machine stays four-valued and the session remains retriable
    where its state allows.
    """

    session_id: str
    statement_text: str
    state: SessionState
    question: Optional[str] = None
    categories: Optional[tuple[MissingInfoCategory, ...]] = None
    route: Optional[Route] = None
    answer: Optional[str] = None
    verdict: Optional[VeracityScore] = None
    message: Optional[str] = None
    error: Optional[str] = None

    def __post_init__(self) -> None:
        if (self.verdict is not None) != (self.state is SessionState.COMPLETED):
            raise ValueError("verdict is present exactly when the session completes")

    def advanced(self, *, state: SessionState, **changes) -> "ClarifySession":
        if (self.state, state) not in _ALLOWED_TRANSITIONS:
            raise WrongState(
                f"no transition from {self.state.value} to {state.value}"
            )
        return dataclasses.replace(self, state=state, **changes)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "statement_text": self.statement_text,
            "state": self.state.value,
            "question": self.question,
            "categories": (
                None
                if self.categories is None
                else [c.letter for c in self.categories]
            ),
            "route": (
                None
                if self.route is None
                else {"value": self.route.value.value, "source": self.route.source.value}
            ),
            "answer": self.answer,
            "verdict": (
                None
                if self.verdict is None
                else {
                    "snapped": self.verdict.snapped,
                    "raw": self.verdict.raw,
                    "reply_text": self.verdict.reply_text,
                    "label": self.verdict.label,
                }
            ),
            "message": self.message,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ClarifySession":
        from clarifact.domain import category_from_letter

        categories = raw.get("categories")
        route = raw.get("route")
        verdict = raw.get("verdict")
        return cls(
            session_id=raw["session_id"],
            statement_text=raw["statement_text"],
            state=SessionState(raw["state"]),
            question=raw.get("question"),
            categories=(
                None
                if categories is None
                else tuple(category_from_letter(letter) for letter in categories)
            ),
            route=(
                None
                if route is None
                else Route(
                    value=RouteKind(route["value"]),
                    source=RouteSource(route["source"]),
                )
            ),
            answer=raw.get("answer"),
            verdict=(
                None
                if verdict is None
                else VeracityScore(
                    snapped=float(verdict["snapped"]),
                    raw=float(verdict["raw"]),
                    reply_text=verdict.get("reply_text"),
                )
            ),
            message=raw.get("message"),
            error=raw.get("error"),
        )


class ClarifyService:
    """Creates, answers, and retrieves clarify sessions.

    Sessions are independent and keyed by id; mutation of any one session is
    serialized by a per-id lock. An optional session store persists every
    saved state so a restarted process can keep answering.
    """

    def __init__(
        self,
        resolver: UncertaintyResolver,
        router: RouterKind = RouterKind.LLM,
        store: Optional[SessionStore] = None,
    ):
        self._resolver = resolver
        self._router = router
        self._store = store
        self._sessions: dict[str, ClarifySession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._map_lock = threading.Lock()

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._map_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def _save(self, session: ClarifySession) -> None:
        with self._map_lock:
            self._sessions[session.session_id] = session
        if self._store is not None:
            self._store.save(session.session_id, session.to_dict())

    def get_session(self, session_id: str) -> ClarifySession:
        with self._map_lock:
            session = self._sessions.get(session_id)
        if session is None and self._store is not None:
            payload = self._store.load(session_id)
            if payload is not None:
                session = ClarifySession.from_dict(payload)
                with self._map_lock:
                    session = self._sessions.setdefault(session_id, session)
        if session is None:
            raise UnknownSessionId(f"no session {session_id!r}")
        return session

    def begin_session(self, statement_text: str) -> ClarifySession:
        """Generate the clarifying question and route it; returns the session."""
        text = (statement_text or "").strip()
        if not text:
            raise ValueError("statement text must be non-empty")
        session = ClarifySession(
            session_id=uuid.uuid4().hex,
            statement_text=text,
            state=SessionState.AWAITING_QUESTION,
        )
        statement = Statement(id=session.session_id, text=text)
        transcript: list[TranscriptEntry] = []
        try:
            question, categories = self._resolver.step_question(
                statement, QuestionMode.CATEGORY_BASED, transcript
            )
            route = self._resolver.step_route(
                statement, question, self._router, transcript, categories=categories
            )
        except ClarifactError as exc:
            failed = dataclasses.replace(
                session, error=f"{type(exc).__name__}: {exc}"
            )
            self._save(failed)
            raise
        if route.value is RouteKind.USER_QUERY:
            session = session.advanced(
                state=SessionState.AWAITING_ANSWER,
                question=question,
                categories=categories,
                route=route,
            )
        else:
            session = session.advanced(
                state=SessionState.ROUTED_TO_WEB,
                question=question,
                categories=categories,
                route=route,
                message=WEB_ROUTE_MESSAGE,
            )
        self._save(session)
        return session

    def answer_session(self, session_id: str, answer_text: str) -> ClarifySession:
        """Score the statement with the user's answer; completes the session."""
        answer = (answer_text or "").strip()
        if not answer:
            raise ValueError("answer text must be non-empty")
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            if session.state is not SessionState.AWAITING_ANSWER:
                raise WrongState(
                    f"session {session_id} is {session.state.value}; "
                    "answers are accepted only while awaiting-answer"
                )
            statement = Statement(id=session_id, text=session.statement_text)
            transcript: list[TranscriptEntry] = []
            try:
                verdict = self._resolver.step_verdict(
                    statement,
                    qa_context(session.question, answer),
                    VerdictMode.ENABLED,
                    transcript,
                )
            except ClarifactError as exc:
                failed = dataclasses.replace(
                    session, error=f"{type(exc).__name__}: {exc}"
                )
                self._save(failed)
                raise
            completed = session.advanced(
                state=SessionState.COMPLETED,
                answer=answer,
                verdict=verdict,
                error=None,
            )
            self._save(completed)
            return completed
