"""Phase II: mapping a (question, linked schema) pair to a generation tier.

Local routers (KNN, oracle, fixed) are pure and cost zero tokens. Model
routers live behind the scorer HTTP protocol; this module holds the client
side plus the cascade and argmax decision rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .model import TIERS, LinkedSchema, Phase, Tier, TokenUsage

ZERO_ROUTING_USAGE = TokenUsage(0, 0, Phase.ROUTING)


class RoutingError(RuntimeError):
    """A router could not produce a decision."""


class ScoringError(RoutingError):
    """A score map contained unusable values."""


class ProtocolError(RoutingError):
    """The scorer service broke the wire contract."""


@dataclass(frozen=True)
class FeatureVector:
    """Structural complexity cues: linked table and column counts."""

    n_tables: int
    n_columns: int

    def __post_init__(self) -> None:
        if self.n_tables < 0 or self.n_columns < 0:
            raise ValueError("feature counts must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.n_tables, self.n_columns], dtype=float)


@dataclass(frozen=True)
class LabeledPoint:
    features: FeatureVector
    label: Tier


@dataclass(frozen=True)
class ScoreMap:
    """One real score per tier; higher means more preferred."""

    scores: Mapping[Tier, float]

    def __post_init__(self) -> None:
        if set(self.scores) != set(TIERS):
            raise ScoringError("score map must cover exactly the three tiers")

    def __getitem__(self, tier: Tier) -> float:
        return self.scores[tier]


@dataclass(frozen=True)
class RoutingDecision:
    tier: Tier
    scores: ScoreMap | None = None
    router_usage: TokenUsage = ZERO_ROUTING_USAGE
    router_name: str = ""


def build_features(linked: LinkedSchema) -> FeatureVector:
    """Count tables and total columns in the linked schema."""
    return FeatureVector(n_tables=linked.n_tables, n_columns=linked.n_columns)


def knn_route(
    v: FeatureVector,
    train: Sequence[LabeledPoint],
    k: int = 5,
) -> RoutingDecision:
    """Majority label among the k nearest training points.

    Euclidean distance on (n_tables, n_columns); distance ties break toward
    the lower training index, label ties toward the cheaper tier.
    """
    if not train:
        raise RoutingError("knn router requires a non-empty training set")
    if k < 1:
        raise ValueError("k must be >= 1")
    points = np.array([[p.features.n_tables, p.features.n_columns] for p in train], dtype=float)
    dists = np.sqrt(((points - v.as_array()) ** 2).sum(axis=1))
    # stable sort keeps the lower-index point first on exact distance ties
    order = np.argsort(dists, kind="stable")[: min(k, len(train))]
    votes = {tier: 0 for tier in TIERS}
    for idx in order:
        votes[train[int(idx)].label] += 1
    best = max(votes.values())
    tier = next(t for t in TIERS if votes[t] == best)  # cheapest tier wins ties
    scores = ScoreMap({t: votes[t] / len(order) for t in TIERS})
    return RoutingDecision(tier=tier, scores=scores, router_name=f"knn(k={k})")


BinaryClassifier = Callable[[str, str, LinkedSchema], int]
"""(question, hint, linked) -> verdict in {0, 1}."""


def cascade_route(
    verdicts: Sequence[BinaryClassifier],
    question: str,
    hint: str,
    linked: LinkedSchema,
    router_name: str = "cascade",
) -> RoutingDecision:
    """Waterfall over per-tier capability classifiers, cheapest first.

    The first positive verdict selects its tier and stops evaluation; the
    most capable tier is the default when every classifier declines. For the
    three-tier space this takes classifiers for Basic and Intermediate.
    """
    if len(verdicts) != len(TIERS) - 1:
        raise RoutingError(
            f"cascade needs {len(TIERS) - 1} classifiers, got {len(verdicts)}"
        )
    for stage, (tier, classifier) in enumerate(zip(TIERS, verdicts)):
        try:
            verdict = classifier(question, hint, linked)
        except Exception as exc:
            raise RoutingError(f"cascade stage {stage} ({tier.wire_name}) failed: {exc}") from exc
        if verdict not in (0, 1):
            raise RoutingError(
                f"cascade stage {stage} returned {verdict!r}, expected 0 or 1"
            )
        if verdict == 1:
            return RoutingDecision(tier=tier, router_name=router_name)
    return RoutingDecision(tier=TIERS[-1], router_name=router_name)


def score_route(scores: ScoreMap, router_name: str = "score") -> RoutingDecision:
    """Argmax over tiers; exact ties resolve toward the cheaper tier."""
    for tier in TIERS:
        if not math.isfinite(scores[tier]):
            raise ScoringError(f"non-finite score for {tier.wire_name}")
    best = max(scores[t] for t in TIERS)
    tier = next(t for t in TIERS if scores[t] == best)
    return RoutingDecision(tier=tier, scores=scores, router_name=router_name)


def oracle_route(label: Tier) -> RoutingDecision:
    """Pass the known-optimal label through at zero cost."""
    return RoutingDecision(tier=label, router_name="oracle")


def _request_body(
    mode: str, question: str, hint: str, linked: LinkedSchema, tier: Tier | None = None
) -> dict:
    features = build_features(linked)
    body = {
        "mode": mode,
        "question": question,
        "hint": hint,
        "n_tables": features.n_tables,
        "n_columns": features.n_columns,
        "linked_schema": [
            {"table": t, "columns": list(cols)} for t, cols in linked.entries
        ],
    }
    if tier is not None:
        body["tier"] = tier.wire_name
    return body


class ScorerClient:
    """HTTP client for the scorer protocol (POST /score)."""

    def __init__(self, endpoint: str, timeout_s: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout_s = timeout_s

    def _post(self, body: dict) -> dict:
        import requests

        try:
            resp = requests.post(
                f"{self.endpoint}/score", json=body, timeout=self.timeout_s
            )
        except requests.RequestException as exc:
            raise RoutingError(f"scorer transport failure: {exc}") from exc
        if resp.status_code != 200:
            raise RoutingError(f"scorer returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise ProtocolError(f"scorer response is not JSON: {exc}") from exc

    def scores(
        self, question: str, hint: str, linked: LinkedSchema, mode: str = "multiclass"
    ) -> ScoreMap:
        if mode not in ("multiclass", "preference"):
            raise ValueError(f"score modes are multiclass/preference, got {mode!r}")
        data = self._post(_request_body(mode, question, hint, linked))
        raw = data.get("scores")
        if not isinstance(raw, dict):
            raise ProtocolError("scorer response missing 'scores' object")
        try:
            mapping = {tier: float(raw[tier.wire_name]) for tier in TIERS}
        except KeyError as exc:
            raise ProtocolError(f"scorer response missing tier {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ProtocolError(f"scorer response has non-numeric score: {exc}") from exc
        return ScoreMap(mapping)

    def verdict(self, question: str, hint: str, linked: LinkedSchema, tier: Tier) -> int:
        data = self._post(_request_body("binary", question, hint, linked, tier=tier))
        verdict = data.get("verdict")
        if verdict not in (0, 1):
            raise ProtocolError(f"scorer verdict must be 0 or 1, got {verdict!r}")
        return verdict


def external_scores(
    question: str, hint: str, linked: LinkedSchema, endpoint: str, mode: str = "multiclass"
) -> ScoreMap:
    """One scorer-protocol request returning a validated full ScoreMap."""
    return ScorerClient(endpoint).scores(question, hint, linked, mode=mode)


class Router(Protocol):
    """What the harness needs from a router.

    Implementations must never see gold SQL; the harness hands them only the
    query id, question text, hint, and linked schema.
    """

    def route(
        self, query_id: str, question: str, hint: str, linked: LinkedSchema
    ) -> RoutingDecision: ...


class KnnRouter:
    def __init__(self, train: Sequence[LabeledPoint], k: int = 5):
        self.train = list(train)
        self.k = k

    def route(self, query_id, question, hint, linked) -> RoutingDecision:
        return knn_route(build_features(linked), self.train, self.k)


class FixedRouter:
    """Always the same tier; how the non-routing baselines run."""

    def __init__(self, tier: Tier):
        self.tier = tier

    def route(self, query_id, question, hint, linked) -> RoutingDecision:
        return RoutingDecision(tier=self.tier, router_name=f"fixed({self.tier.wire_name})")


class OracleRouter:
    """Replays stored oracle labels keyed by query id."""

    def __init__(self, labels: Mapping[str, Tier]):
        self.labels = dict(labels)

    def route(self, query_id, question, hint, linked) -> RoutingDecision:
        try:
            label = self.labels[query_id]
        except KeyError:
            raise RoutingError(f"no oracle label for query {query_id!r}") from None
        return oracle_route(label)


class CascadeRouter:
    """Binary cascade backed by the scorer protocol."""

    def __init__(self, client: ScorerClient, use_hint: bool = True):
        self.client = client
        self.use_hint = use_hint

    def route(self, query_id, question, hint, linked) -> RoutingDecision:
        hint = hint if self.use_hint else ""
        stages = [
            (lambda q, h, l, t=tier: self.client.verdict(q, h, l, t))
            for tier in TIERS[:-1]
        ]
        return cascade_route(stages, question, hint, linked, router_name="cascade")


class ScoreRouter:
    """Multiclass or preference scoring backed by the scorer protocol."""

    def __init__(self, client: ScorerClient, mode: str = "multiclass", use_hint: bool = True):
        self.client = client
        self.mode = mode
        self.use_hint = use_hint

    def route(self, query_id, question, hint, linked) -> RoutingDecision:
        hint = hint if self.use_hint else ""
        scores = self.client.scores(question, hint, linked, mode=self.mode)
        return score_route(scores, router_name=self.mode)
