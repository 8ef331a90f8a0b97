"""Tier-routing model training and serving.

Consumes the waterfall labeler's JSONL export, trains multiclass, binary
cascade, pairwise-ranking, and preference-optimization routers on a tiny
deterministic backbone (an optional transformer encoder needs torch), and
exposes trained checkpoints over the scorer HTTP protocol.
"""

__version__ = "0.1.0"

from .backbone import BackboneSpec, TinyBackbone  # noqa: F401
from .data import TIER_NAMES, TrainerExample, load_examples  # noqa: F401
from .train import (  # noqa: F401
    Checkpoint,
    DegenerateDataError,
    evaluate_router,
    train_binary,
    train_dpo,
    train_multiclass,
    train_pairwise_rank,
)
from .server import ScorerService, serve_scorer  # noqa: F401
