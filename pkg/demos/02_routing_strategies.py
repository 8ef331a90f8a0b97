"""The router family: KNN on structural features, cascading binary verdicts,
score-based argmax, and the oracle reference.

Run from the repository root:  python demos/02_routing_strategies.py
"""

from tiersql.model import LinkedSchema, Provenance, Tier
from tiersql.routing import (
    FeatureVector,
    LabeledPoint,
    ScoreMap,
    build_features,
    cascade_route,
    knn_route,
    oracle_route,
    score_route,
)

# A linked schema is the router's main complexity cue: how many tables and
# columns survived pruning.
linked = LinkedSchema(
    entries=(("orders", ("customer_id", "quantity")), ("customers", ("id", "city"))),
    provenance=Provenance.MODEL,
)
features = build_features(linked)
print(f"features of the linked schema: tables={features.n_tables}, columns={features.n_columns}")

# KNN: label a probe by majority vote among its nearest labeled neighbors.
# Ties on distance keep the earlier training point; label ties go cheap.
train = [
    LabeledPoint(FeatureVector(1, 2), Tier.BASIC),
    LabeledPoint(FeatureVector(1, 3), Tier.BASIC),
    LabeledPoint(FeatureVector(2, 5), Tier.INTERMEDIATE),
    LabeledPoint(FeatureVector(3, 8), Tier.INTERMEDIATE),
    LabeledPoint(FeatureVector(5, 18), Tier.ADVANCED),
    LabeledPoint(FeatureVector(6, 24), Tier.ADVANCED),
]
for probe in [FeatureVector(1, 2), FeatureVector(2, 6), FeatureVector(6, 20)]:
    decision = knn_route(probe, train, k=3)
    print(f"knn({probe.n_tables},{probe.n_columns}) -> {decision.tier.wire_name} "
          f"(votes {dict((t.wire_name, v) for t, v in decision.scores.scores.items())})")

# Cascade: per-tier capability classifiers answer "can my tier handle
# this?" cheapest-first; the first yes wins and later stages never run.
def can_basic(question, hint, linked_schema):
    return int(linked_schema.n_columns <= 3)

def can_intermediate(question, hint, linked_schema):
    return int(linked_schema.n_columns <= 8)

for cols, entries in [
    (2, (("t", ("a", "b")),)),
    (6, (("t", ("a", "b", "c")), ("u", ("d", "e", "f")))),
    (12, (("t", tuple(f"c{i}" for i in range(12))),)),
]:
    ls = LinkedSchema(entries=entries, provenance=Provenance.MODEL)
    decision = cascade_route([can_basic, can_intermediate], "q", "", ls)
    print(f"cascade with {cols} linked columns -> {decision.tier.wire_name}")

# Score-based: an external model hands back one score per tier; argmax
# picks the route, exact ties resolve toward the cheaper tier.
scores = ScoreMap({Tier.BASIC: 0.40, Tier.INTERMEDIATE: 1.25, Tier.ADVANCED: 0.90})
print(f"score argmax -> {score_route(scores).tier.wire_name}")
tie = ScoreMap({Tier.BASIC: 0.5, Tier.INTERMEDIATE: 0.5, Tier.ADVANCED: 0.1})
print(f"tie at the top -> {score_route(tie).tier.wire_name} (cheaper tier wins)")

# Oracle routing replays the cheapest tier known to solve each query; it is
# the reference point for disagreement matrices, not a deployable router.
print(f"oracle label passthrough -> {oracle_route(Tier.INTERMEDIATE).tier.wire_name}")
