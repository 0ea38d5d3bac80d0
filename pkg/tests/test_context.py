"""Tests for the context-embedding losses and the linear fitter."""

import math

import numpy as np
import pytest

from pwmdp import (
    ContextLossConfig,
    EmbeddingBatch,
    consistency_loss,
    context_loss,
    diversity_loss,
    fit_linear_context,
    normalize_embedding,
)
from pwmdp.harness.certify import separable_context_dataset

CONFIG = ContextLossConfig()


class TestNormalizeEmbedding:
    def test_unit_vector_nearly_unchanged(self):
        v = np.array([1.0, 0.0])
        out = normalize_embedding(v, eps=1e-8)
        assert np.abs(out - v).max() <= 1e-7

    def test_zero_vector_degenerate(self):
        out = normalize_embedding(np.zeros(3), eps=1e-8)
        assert (out == 0.0).all()

    def test_norm_formula_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            v = rng.uniform(-5, 5, 4)
            eps = 1e-6
            out = normalize_embedding(v, eps)
            norm = np.linalg.norm(v)
            assert np.linalg.norm(out) == pytest.approx(norm / (norm + eps), rel=1e-12)


class TestConsistencyLoss:
    def test_identical_embeddings_give_sqrt_eps(self):
        vec = np.array([0.3, -0.4])
        batch = EmbeddingBatch(np.stack([vec, vec, vec, -vec, -vec]), np.array([0, 0, 0, 1, 1]))
        assert consistency_loss(batch, eps=1e-6) == pytest.approx(math.sqrt(1e-6), abs=1e-12)

    def test_spread_mode_increases_loss(self):
        tight = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        spread = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0], [0.0, 1.0]])
        ids = np.array([0, 0, 1, 1])
        assert consistency_loss(EmbeddingBatch(spread, ids)) > consistency_loss(
            EmbeddingBatch(tight, ids)
        )

    def test_matches_two_pass_variance_oracle(self):
        rng = np.random.default_rng(1)
        vectors = rng.uniform(-1, 1, (30, 3))
        ids = np.repeat([0, 1, 2], 10)
        batch = EmbeddingBatch(vectors, ids)
        # independent oracle: two-pass variance, summed over dimensions
        eps = 1e-6
        terms = []
        for m in (0, 1, 2):
            group = vectors[ids == m]
            mean = group.sum(axis=0) / len(group)
            var = ((group - mean) ** 2).sum(axis=0) / len(group)
            terms.append(math.sqrt(var.sum() + eps))
        expected = sum(terms) / 3
        assert consistency_loss(batch, eps=eps) == pytest.approx(expected, abs=1e-10)

    def test_per_dimension_convention_flag(self):
        rng = np.random.default_rng(2)
        vectors = rng.uniform(-1, 1, (8, 2))
        ids = np.array([0, 0, 0, 0, 1, 1, 1, 1])
        batch = EmbeddingBatch(vectors, ids)
        eps = 1e-6
        terms = []
        for m in (0, 1):
            group = vectors[ids == m]
            var = group.var(axis=0)
            terms.append(np.mean(np.sqrt(var + eps)))
        assert consistency_loss(batch, eps=eps, per_dimension=True) == pytest.approx(
            float(np.mean(terms)), abs=1e-12
        )

    def test_short_mode_rejected(self):
        batch = EmbeddingBatch(np.zeros((3, 2)), np.array([0, 0, 1]))
        with pytest.raises(ValueError, match="mode 1"):
            consistency_loss(batch)


class TestDiversityLoss:
    def test_single_mode_value(self):
        eps = 1e-6
        assert diversity_loss(np.array([[0.3, 0.4]]), 2.0, eps) == pytest.approx(
            -math.log(1.0 + eps), abs=1e-12
        )

    def test_two_identical_means_2x2_formula(self):
        eps = 1e-6
        means = np.array([[0.5, 0.5], [0.5, 0.5]])
        # independent oracle: 2x2 determinant in closed form
        det = (1.0 + eps) ** 2 - 1.0
        assert diversity_loss(means, 2.0, eps) == pytest.approx(-math.log(det), rel=1e-9)
        assert diversity_loss(means, 2.0, eps) > 10.0  # collapsed means are punished

    def test_strictly_decreasing_in_separation(self):
        losses = [
            diversity_loss(np.array([[0.0, 0.0], [d, 0.0]]), 2.0, 1e-6)
            for d in np.linspace(0.0, 3.0, 20)
        ]
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_matches_slogdet_oracle(self):
        rng = np.random.default_rng(3)
        means = rng.uniform(-1, 1, (4, 2))
        r, eps = 2.0, 1e-6
        diff = means[:, None, :] - means[None, :, :]
        kernel = np.exp(-r * (diff**2).sum(-1)) + eps * np.eye(4)
        sign, logdet = np.linalg.slogdet(kernel)
        assert sign > 0
        assert diversity_loss(means, r, eps) == pytest.approx(-logdet, rel=1e-10)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            diversity_loss(np.array([[np.inf, 0.0]]), 2.0, 1e-6)


class TestContextLoss:
    def test_zero_weights_zero_total(self):
        config = ContextLossConfig(w_cons=0.0, w_div=0.0)
        rng = np.random.default_rng(4)
        batch = EmbeddingBatch(rng.uniform(-1, 1, (8, 2)), np.array([0, 0, 0, 0, 1, 1, 1, 1]))
        assert context_loss(batch, config).total == 0.0

    def test_weight_linearity(self):
        rng = np.random.default_rng(5)
        batch = EmbeddingBatch(rng.uniform(-1, 1, (8, 2)), np.array([0, 0, 0, 0, 1, 1, 1, 1]))
        single = context_loss(batch, ContextLossConfig(w_cons=50.0, w_div=0.0))
        double = context_loss(batch, ContextLossConfig(w_cons=100.0, w_div=0.0))
        assert double.total == pytest.approx(2 * single.total, rel=1e-12)

    def test_tight_separated_beats_loose_collapsed(self):
        rng = np.random.default_rng(6)
        ids = np.repeat([0, 1], 10)
        tight = np.vstack(
            [
                rng.normal([1.0, 0.0], 0.01, (10, 2)),
                rng.normal([-1.0, 0.0], 0.01, (10, 2)),
            ]
        )
        loose = np.vstack(
            [
                rng.normal([0.1, 0.0], 0.5, (10, 2)),
                rng.normal([-0.1, 0.0], 0.5, (10, 2)),
            ]
        )
        assert (
            context_loss(EmbeddingBatch(tight, ids), CONFIG).total
            < context_loss(EmbeddingBatch(loose, ids), CONFIG).total
        )

    def test_invariant_under_sample_and_label_permutation(self):
        rng = np.random.default_rng(7)
        vectors = rng.uniform(-1, 1, (12, 2))
        ids = np.repeat([0, 1, 2], 4)
        base = context_loss(EmbeddingBatch(vectors, ids), CONFIG)
        perm = rng.permutation(12)
        shuffled = context_loss(EmbeddingBatch(vectors[perm], ids[perm]), CONFIG)
        assert shuffled.total == pytest.approx(base.total, rel=1e-10)
        relabeled = context_loss(EmbeddingBatch(vectors, 2 - ids), CONFIG)
        assert relabeled.total == pytest.approx(base.total, rel=1e-10)


class TestFitLinearContext:
    def test_never_worse_than_initialization(self):
        states, ids = separable_context_dataset(0)
        rng = np.random.default_rng(0)
        init = rng.normal(0.0, 1.0, (2, 2))  # same init draw as the fitter's seed 0

        def loss_of(weights):
            embedded = states @ weights.T
            embedded = embedded / (np.linalg.norm(embedded, axis=1, keepdims=True) + 1e-8)
            return context_loss(EmbeddingBatch(embedded, ids), CONFIG).total

        fitted = fit_linear_context((states, ids), CONFIG, steps=40, lr=0.1, seed=0)
        assert loss_of(fitted) <= loss_of(init) + 1e-12

    def test_separable_dataset_reaches_wide_mode_means(self):
        states, ids = separable_context_dataset(1)
        weights = fit_linear_context((states, ids), CONFIG, steps=150, lr=0.1, seed=1)
        embedded = states @ weights.T
        embedded = embedded / (np.linalg.norm(embedded, axis=1, keepdims=True) + 1e-8)
        means = EmbeddingBatch(embedded, ids).mode_means()
        assert np.linalg.norm(means[0] - means[1]) >= 0.5

    def test_shuffled_labels_improve_less(self):
        states, ids = separable_context_dataset(2)
        rng = np.random.default_rng(3)
        shuffled = rng.permutation(ids)

        def improvement(labels):
            def loss_of(weights):
                embedded = states @ weights.T
                embedded = embedded / (np.linalg.norm(embedded, axis=1, keepdims=True) + 1e-8)
                return context_loss(EmbeddingBatch(embedded, labels), CONFIG).total

            init_rng = np.random.default_rng(4)
            init = init_rng.normal(0.0, 1.0, (2, 2))
            fitted = fit_linear_context((states, labels), CONFIG, steps=120, lr=0.1, seed=4)
            return loss_of(init) - loss_of(fitted)

        assert improvement(ids) > improvement(shuffled)

    def test_deterministic_in_seed(self):
        states, ids = separable_context_dataset(5)
        a = fit_linear_context((states, ids), CONFIG, steps=20, lr=0.1, seed=9)
        b = fit_linear_context((states, ids), CONFIG, steps=20, lr=0.1, seed=9)
        assert (a == b).all()

    def test_validation(self):
        states = np.zeros((4, 2))
        with pytest.raises(ValueError, match="2 modes"):
            fit_linear_context((states, np.zeros(4, dtype=int)), CONFIG)
        with pytest.raises(ValueError, match=">= 2 samples"):
            fit_linear_context((states, np.array([0, 0, 0, 1])), CONFIG)
