"""Trainer acceptance gate, one test per criterion with a pass line each."""

import math

import numpy as np
import pytest
import requests

from tiertrainer.backbone import TinyBackbone
from tiertrainer.data import feature_matrix, pair_index
from tiertrainer.losses import dpo_loss
from tiertrainer.server import serve_scorer
from tiertrainer.train import (
    evaluate_router,
    train_binary,
    train_dpo,
    train_multiclass,
    train_pairwise_rank,
)

from conftest import central_difference, relative_error, separable_examples
from test_losses import loss_through_backbone
from test_server import MALFORMED, post, valid_body


def _ok(name: str) -> None:
    print(f"\nACCEPTANCE PASS: {name}")


class TestDpoInitializationIdentity:
    def test_ln2_over_random_inputs_and_betas(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            n = int(rng.integers(1, 8))
            logits = rng.normal(scale=3.0, size=(n, 3))
            pairs = [
                (int(rng.integers(n)), *rng.permutation(3)[:2].astype(int).tolist())
                for _ in range(int(rng.integers(1, 6)))
            ]
            for beta in (0.05, 0.1, 1.0):
                loss, _ = dpo_loss(logits, logits.copy(), pairs, beta=beta)
                assert abs(loss - math.log(2)) <= 1e-9
        _ok("DPO per-pair loss is ln 2 within 1e-9 when policy equals reference, "
            "over 100 random inputs and beta in {0.05, 0.1, 1.0}")


class TestGradientCheck:
    @pytest.mark.parametrize("loss_name", ["multiclass", "binary", "rank", "dpo"])
    def test_all_four_losses(self, loss_name):
        params, value, analytic = loss_through_backbone(loss_name, seed=21)
        ga = analytic(params)
        gn = central_difference(value, params)
        error = relative_error(ga, gn)
        assert error < 1e-4, f"{loss_name}: relative error {error}"

    def test_report(self):
        _ok("analytic gradients of all four losses match central finite "
            "differences within relative error 1e-4 on the tiny backbone")


class TestSeparableLearning:
    def test_all_four_trainers_within_ten_epochs_seed_42(self):
        examples = separable_examples()

        multiclass = train_multiclass(examples, epochs=10, seed=42)
        acc_mc, _, _ = evaluate_router(multiclass, examples)
        assert acc_mc >= 0.99

        for tier in ("Basic", "Intermediate"):
            stage = train_binary(examples, tier, epochs=10, seed=42)
            threshold = 0 if tier == "Basic" else 1
            hits = sum(
                stage.verdict(e.text, e.n_tables, e.n_columns)[0]
                == (1 if e.label <= threshold else 0)
                for e in examples
            )
            assert hits / len(examples) >= 0.99

        ranked = train_pairwise_rank(examples, margin=1.0, epochs=10, seed=42)
        X = feature_matrix(examples, ranked.buckets)
        logits = X @ ranked.W.T + ranked.b
        pairs = pair_index(examples)
        satisfied = sum(
            logits[row, pref] - logits[row, rej] >= 1.0 for row, pref, rej in pairs
        )
        assert satisfied / len(pairs) >= 0.95

        dpo = train_dpo(examples, beta=0.1, epochs=10, seed=42)
        acc_dpo, _, _ = evaluate_router(dpo, examples)
        assert acc_dpo >= 0.99

        # determinism under the stated seed
        again = train_multiclass(examples, epochs=10, seed=42)
        np.testing.assert_array_equal(multiclass.W, again.W)

        _ok("multiclass/binary/ranking/DPO all reach the separable-data bar "
            "within 10 epochs, deterministic under seed 42")


class TestProtocolConformance:
    def test_schema_fuzz_suite(self):
        examples = separable_examples()
        checkpoints = [
            train_multiclass(examples, epochs=5, seed=42),
            train_binary(examples, "Basic", epochs=5, seed=42),
            train_binary(examples, "Intermediate", epochs=5, seed=42),
        ]
        rng = np.random.default_rng(99)
        with serve_scorer(checkpoints) as service:
            # valid requests -> valid responses, across random field contents
            for _ in range(25):
                mode = ("multiclass", "preference", "binary")[int(rng.integers(3))]
                body = valid_body(
                    mode=mode,
                    question=" ".join(
                        f"w{int(w)}" for w in rng.integers(0, 50, size=int(rng.integers(1, 12)))
                    ),
                    hint="" if rng.random() < 0.5 else "a hint",
                    n_tables=int(rng.integers(0, 30)),
                    n_columns=int(rng.integers(0, 120)),
                    linked_schema=[
                        {
                            "table": f"t{i}",
                            "columns": [f"c{j}" for j in range(int(rng.integers(1, 5)))],
                        }
                        for i in range(int(rng.integers(1, 5)))
                    ],
                )
                if mode == "binary":
                    body["tier"] = ("Basic", "Intermediate")[int(rng.integers(2))]
                resp = post(service, body)
                assert resp.status_code == 200
                payload = resp.json()
                if mode == "binary":
                    assert payload["verdict"] in (0, 1)
                    assert isinstance(payload["score"], float)
                else:
                    assert set(payload["scores"]) == {"Basic", "Intermediate", "Advanced"}

            # the ten malformed variants all come back 400
            for body in MALFORMED:
                assert post(service, body).status_code == 400
        _ok("scorer service passes the schema-fuzz suite: valid requests yield "
            "valid responses, all 10 malformed variants yield 400")
