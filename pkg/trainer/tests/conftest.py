"""Shared trainer fixtures: separable synthetic data and gradient helpers."""

from __future__ import annotations

import numpy as np
import pytest

from tiertrainer.data import TIER_NAMES, PreferencePair, TrainerExample

CLASS_VOCAB = {
    0: ("list", "show", "names", "single", "plain"),
    1: ("join", "combine", "paired", "group", "merge"),
    2: ("nested", "correlated", "layered", "windowed", "rank"),
}
CLASS_TABLES = {0: (1, 1), 1: (2, 3), 2: (4, 6)}
CLASS_COLUMNS = {0: (1, 3), 1: (5, 9), 2: (12, 24)}


def preference_pairs(label: int) -> tuple[PreferencePair, ...]:
    return tuple(PreferencePair(label, other) for other in range(3) if other != label)


def separable_examples(n_per_class: int = 30, seed: int = 0) -> list[TrainerExample]:
    """Three linearly separable clusters: disjoint vocabularies plus
    disjoint structural-count ranges."""
    rng = np.random.default_rng(seed)
    examples = []
    for label in range(3):
        vocab = CLASS_VOCAB[label]
        for i in range(n_per_class):
            words = [vocab[int(rng.integers(len(vocab)))] for _ in range(4)]
            text = " ".join(words) + f" tables: t{label}(a,b)"
            lo_t, hi_t = CLASS_TABLES[label]
            lo_c, hi_c = CLASS_COLUMNS[label]
            examples.append(
                TrainerExample(
                    text=text,
                    n_tables=int(rng.integers(lo_t, hi_t + 1)),
                    n_columns=int(rng.integers(lo_c, hi_c + 1)),
                    label=label,
                    preference_pairs=preference_pairs(label),
                    query_id=f"{TIER_NAMES[label]}-{i}",
                )
            )
    rng.shuffle(examples)
    return list(examples)


@pytest.fixture
def separable():
    return separable_examples()


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)), 1e-12)
    return float(np.linalg.norm(analytic - numeric)) / scale


def central_difference(f, params: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(params)
    for i in range(len(params)):
        up = params.copy()
        up[i] += eps
        down = params.copy()
        down[i] -= eps
        grad[i] = (f(up) - f(down)) / (2 * eps)
    return grad
