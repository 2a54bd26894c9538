import numpy as np
import pytest

from gzslgen import losses
from gzslgen.errors import ContractViolation
from gzslgen.losses import (
    LossWeights,
    class_centroid,
    classification_loss,
    disc_s_loss,
    disc_v_loss,
    gen_sv_loss,
    gen_vs_loss,
    gradient_penalty,
    semantic_centroid_loss,
    visual_consistency_loss,
)
from gzslgen.networks import (
    LinearParams,
    disc_s_forward,
    disc_v_forward,
    gen_sv_forward,
    gen_vs_forward,
    mlp_forward,
)
from helpers import (
    check_param_grads,
    linear_critic,
    numeric_grad,
    random_batch,
    rel_error,
    small_model,
    zero_mlp,
)

K, L, B = 12, 3, 6


def alpha_for(batch, seed=99):
    return np.random.default_rng(seed).uniform(0, 1, size=len(batch))


class TestClassificationLoss:
    def test_perfect_classifier_gives_zero(self):
        # huge margins drive the true-class probability to 1
        x = np.eye(4) * 100.0
        cls = LinearParams(w=np.eye(4), b=np.zeros(4))
        assert classification_loss(cls, x, np.arange(4)) < 1e-12

    def test_zero_params_give_log_n(self):
        cls = LinearParams(w=np.zeros((K, 4)), b=np.zeros(4))
        x = np.random.default_rng(0).standard_normal((B, K))
        labels = np.random.default_rng(1).integers(0, 4, B)
        assert classification_loss(cls, x, labels) == pytest.approx(np.log(4), abs=1e-12)

    def test_matches_per_sample_oracle(self):
        rng = np.random.default_rng(2)
        cls = LinearParams(w=rng.standard_normal((K, 3)), b=rng.standard_normal(3))
        x = rng.standard_normal((B, K))
        labels = rng.integers(0, 3, B)
        # independent route: explicit per-sample -log p summation
        logits = x @ cls.w + cls.b
        expected = 0.0
        for i in range(B):
            p = np.exp(logits[i]) / np.exp(logits[i]).sum()
            expected -= np.log(p[labels[i]])
        expected /= B
        assert classification_loss(cls, x, labels) == pytest.approx(expected, rel=1e-12)

    def test_label_out_of_range(self):
        cls = LinearParams(w=np.zeros((K, 3)), b=np.zeros(3))
        with pytest.raises(ContractViolation):
            classification_loss(cls, np.zeros((2, K)), np.array([0, 3]))


class TestCentroids:
    def test_single_row(self):
        row = np.array([[1.0, 2.0, 3.0]])
        np.testing.assert_array_equal(class_centroid(row), row[0])

    def test_two_rows(self):
        np.testing.assert_array_equal(
            class_centroid(np.array([[0.0, 0.0], [2.0, 4.0]])), [1.0, 2.0])

    def test_matches_column_sum_oracle(self):
        m = np.random.default_rng(3).standard_normal((7, 5))
        expected = np.array([m[:, j].sum() for j in range(5)]) / 7
        np.testing.assert_allclose(class_centroid(m), expected, rtol=1e-12)

    def test_empty_is_contract_violation(self):
        with pytest.raises(ContractViolation):
            class_centroid(np.zeros((0, 3)))


class TestSemanticCentroidLoss:
    def test_exact_reconstruction_gives_zero(self):
        batch = random_batch()
        attrs = losses._attr_targets(batch)
        assert semantic_centroid_loss(batch.attributes, batch.labels, attrs) == 0.0

    def test_hand_case(self):
        recon = np.array([[0.0, 0.0], [2.0, 0.0]])
        labels = np.array([0, 0])
        attrs = np.array([[0.0, 0.0]])
        assert semantic_centroid_loss(recon, labels, attrs) == pytest.approx(1.0)

    def test_matches_grouping_oracle(self):
        rng = np.random.default_rng(4)
        labels = rng.integers(0, 3, 10)
        labels[:3] = [0, 1, 2]
        recon = rng.standard_normal((10, L))
        attrs = rng.uniform(0, 1, (3, L))
        expected = np.mean([
            np.linalg.norm(recon[labels == c].mean(axis=0) - attrs[c])
            for c in np.unique(labels)
        ])
        got = semantic_centroid_loss(recon, labels, attrs)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_permutation_invariant_within_class(self):
        rng = np.random.default_rng(5)
        labels = np.repeat([0, 1], 5)
        recon = rng.standard_normal((10, L))
        attrs = rng.uniform(0, 1, (2, L))
        base = semantic_centroid_loss(recon, labels, attrs)
        perm = np.concatenate([rng.permutation(5), 5 + rng.permutation(5)])
        assert semantic_centroid_loss(recon[perm], labels[perm], attrs) == pytest.approx(
            base, abs=1e-12)


class TestVisualConsistencyLoss:
    def test_matching_centroids_give_zero(self):
        rng = np.random.default_rng(6)
        real = {0: rng.standard_normal((4, K))}
        cycle = np.tile(real[0].mean(axis=0), (3, 1))
        labels = np.zeros(3, dtype=int)
        assert visual_consistency_loss(cycle, labels, real) == pytest.approx(0.0, abs=1e-12)

    def test_hand_case(self):
        cycle = np.array([[3.0, 0.0]])
        real = {0: np.array([[0.0, 0.0], [2.0, 0.0]])}
        assert visual_consistency_loss(cycle, np.array([0]), real) == pytest.approx(2.0)

    def test_matches_grouping_oracle(self):
        rng = np.random.default_rng(7)
        labels = rng.integers(0, 3, 12)
        labels[:3] = [0, 1, 2]
        cycle = rng.standard_normal((12, K))
        real = {c: rng.standard_normal((5, K)) for c in range(3)}
        expected = np.mean([
            np.linalg.norm(cycle[labels == c].mean(axis=0) - real[c].mean(axis=0))
            for c in np.unique(labels)
        ])
        assert visual_consistency_loss(cycle, labels, real) == pytest.approx(expected, rel=1e-12)

    def test_missing_real_class_is_contract_violation(self):
        with pytest.raises(ContractViolation):
            visual_consistency_loss(np.ones((2, K)), np.array([0, 1]), {0: np.ones((1, K))})


class TestGradientPenalty:
    def test_unit_gradient_critic_gives_zero(self):
        w = np.zeros(K)
        w[2] = 1.0
        grad_fn = lambda u: np.tile(w, (u.shape[0], 1))
        rng = np.random.default_rng(8)
        gp = gradient_penalty(grad_fn, rng.standard_normal((B, K)),
                              rng.standard_normal((B, K)), mix=0)
        assert gp == pytest.approx(0.0, abs=1e-10)

    def test_zero_critic_gives_one(self):
        grad_fn = lambda u: np.zeros_like(u)
        rng = np.random.default_rng(9)
        gp = gradient_penalty(grad_fn, rng.standard_normal((B, K)),
                              rng.standard_normal((B, K)), mix=1)
        assert gp == pytest.approx(1.0, abs=1e-10)

    def test_slope_three_critic_gives_four(self):
        w = np.zeros(K)
        w[0] = 3.0
        grad_fn = lambda u: np.tile(w, (u.shape[0], 1))
        rng = np.random.default_rng(10)
        gp = gradient_penalty(grad_fn, rng.standard_normal((B, K)),
                              rng.standard_normal((B, K)), mix=2)
        assert gp == pytest.approx(4.0, abs=1e-8)

    def test_deterministic_given_mix_seed(self):
        model = small_model()
        from gzslgen.networks import critic_input_grads
        grad_fn = lambda u: critic_input_grads(model.d_s, u)
        rng = np.random.default_rng(11)
        real, fake = rng.standard_normal((B, L)), rng.standard_normal((B, L))
        assert gradient_penalty(grad_fn, real, fake, mix=5) == gradient_penalty(
            grad_fn, real, fake, mix=5)


class TestCriticObjectives:
    def test_identical_inputs_unit_critic_total_zero(self):
        model = small_model()
        direction = np.zeros(K + L)
        direction[1] = 1.0  # unit norm within the visual block
        model.d_v = linear_critic(K + L, direction)
        batch = random_batch()
        total = disc_v_loss(model, batch, batch.visual.copy(), LossWeights(), alpha_for(batch))
        assert total == pytest.approx(0.0, abs=1e-10)

    def test_zero_critic_total_is_lambda1(self):
        model = small_model()
        model.d_v = zero_mlp(K + L, 16, 1)
        batch = random_batch()
        w = LossWeights(lambda1=7.5)
        total = disc_v_loss(model, batch, np.abs(batch.visual) + 0.1, w, alpha_for(batch))
        assert total == pytest.approx(7.5, abs=1e-12)

    def test_disc_v_compositional_oracle(self):
        model = small_model(seed=20)
        batch = random_batch(seed=21)
        synth = gen_sv_forward(model, batch.attributes, batch.noise)
        w = LossWeights()
        alpha = alpha_for(batch)
        total = disc_v_loss(model, batch, synth, w, alpha)

        from gzslgen.networks import critic_input_grads
        fake = disc_v_forward(model, synth, batch.attributes).mean()
        real = disc_v_forward(model, batch.visual, batch.attributes).mean()
        grad_fn = lambda u: critic_input_grads(
            model.d_v, np.hstack([u, batch.attributes]))[:, :K]
        gp = gradient_penalty(grad_fn, batch.visual, synth, alpha)
        assert total == pytest.approx(fake - real + w.lambda1 * gp, abs=1e-10)

    def test_disc_s_zero_critic_total_is_lambda4(self):
        model = small_model()
        model.d_s = zero_mlp(L, 16, 1)
        batch = random_batch()
        w = LossWeights(lambda4=3.0)
        recon = np.abs(np.random.default_rng(1).standard_normal(batch.attributes.shape))
        assert disc_s_loss(model, batch, recon, w, alpha_for(batch)) == pytest.approx(3.0)

    def test_disc_s_identical_inputs_unit_critic_zero(self):
        model = small_model()
        direction = np.zeros(L)
        direction[0] = 1.0
        model.d_s = linear_critic(L, direction)
        batch = random_batch()
        total = disc_s_loss(model, batch, batch.attributes.copy(), LossWeights(),
                            alpha_for(batch))
        assert total == pytest.approx(0.0, abs=1e-10)

    def test_disc_s_compositional_oracle(self):
        model = small_model(seed=22)
        batch = random_batch(seed=23)
        recon = gen_vs_forward(model, batch.visual)
        w = LossWeights()
        alpha = alpha_for(batch)
        total = disc_s_loss(model, batch, recon, w, alpha)

        from gzslgen.networks import critic_input_grads
        fake = disc_s_forward(model, recon).mean()
        real = disc_s_forward(model, batch.attributes).mean()
        grad_fn = lambda u: critic_input_grads(model.d_s, u)
        gp = gradient_penalty(grad_fn, batch.attributes, recon, alpha)
        assert total == pytest.approx(fake - real + w.lambda4 * gp, abs=1e-10)


class TestGeneratorObjectives:
    def setup_method(self):
        self.noise2 = np.random.default_rng(30).standard_normal((B, L))

    def test_gsv_zero_critic_and_weights_total_zero(self):
        model = small_model()
        model.d_v = zero_mlp(K + L, 16, 1)
        batch = random_batch()
        w = LossWeights(lambda2=0.0, lambda3=0.0)
        assert gen_sv_loss(model, batch, w, self.noise2) == 0.0

    def test_gsv_isolates_classification_term(self):
        model = small_model()
        model.d_v = zero_mlp(K + L, 16, 1)
        batch = random_batch()
        w = LossWeights(lambda2=0.25, lambda3=0.0)
        synth = gen_sv_forward(model, batch.attributes, batch.noise)
        expected = 0.25 * classification_loss(model.cls_seen, synth, batch.labels)
        assert gen_sv_loss(model, batch, w, self.noise2) == pytest.approx(expected, rel=1e-12)

    def test_gsv_compositional_oracle(self):
        model = small_model(seed=24)
        batch = random_batch(seed=25)
        w = LossWeights()
        total, terms, _ = losses.gen_sv_loss_and_grads(model, batch, w, self.noise2)

        synth = gen_sv_forward(model, batch.attributes, batch.noise)
        recon = gen_vs_forward(model, synth)
        cycle = gen_sv_forward(model, recon, self.noise2)
        expected = (
            -disc_v_forward(model, synth, batch.attributes).mean()
            - disc_v_forward(model, batch.visual, recon).mean()
            + w.lambda2 * classification_loss(model.cls_seen, synth, batch.labels)
            + w.lambda3 * visual_consistency_loss(
                cycle, batch.labels,
                {c: batch.visual[batch.labels == c] for c in np.unique(batch.labels)})
        )
        assert total == pytest.approx(expected, abs=1e-10)
        assert total == pytest.approx(sum(terms.values()), abs=1e-12)

    def test_gsv_cycle_pairing_oracle(self):
        model = small_model(seed=26)
        batch = random_batch(seed=27)
        w = LossWeights()
        total = gen_sv_loss(model, batch, w, self.noise2, pair_mode="cycle")
        synth = gen_sv_forward(model, batch.attributes, batch.noise)
        recon = gen_vs_forward(model, synth)
        cycle = gen_sv_forward(model, recon, self.noise2)
        expected = (
            -disc_v_forward(model, synth, batch.attributes).mean()
            - disc_v_forward(model, cycle, recon).mean()
            + w.lambda2 * classification_loss(model.cls_seen, synth, batch.labels)
            + w.lambda3 * visual_consistency_loss(
                cycle, batch.labels,
                {c: batch.visual[batch.labels == c] for c in np.unique(batch.labels)})
        )
        assert total == pytest.approx(expected, abs=1e-10)

    def test_gvs_zero_critic_and_weights_total_zero(self):
        model = small_model()
        model.d_s = zero_mlp(L, 16, 1)
        batch = random_batch()
        w = LossWeights(lambda5=0.0, lambda6=0.0)
        assert gen_vs_loss(model, batch, w, self.noise2) == 0.0

    def test_gvs_isolates_centroid_term(self):
        model = small_model()
        model.d_s = zero_mlp(L, 16, 1)
        batch = random_batch()
        w = LossWeights(lambda5=0.4, lambda6=0.0)
        synth = gen_sv_forward(model, batch.attributes, batch.noise)
        recon = gen_vs_forward(model, synth)
        expected = 0.4 * semantic_centroid_loss(
            recon, batch.labels, losses._attr_targets(batch))
        assert gen_vs_loss(model, batch, w, self.noise2) == pytest.approx(expected, rel=1e-12)

    def test_gvs_compositional_oracle(self):
        model = small_model(seed=28)
        batch = random_batch(seed=29)
        w = LossWeights()
        total, terms, _ = losses.gen_vs_loss_and_grads(model, batch, w, self.noise2)
        synth = gen_sv_forward(model, batch.attributes, batch.noise)
        recon = gen_vs_forward(model, synth)
        cycle = gen_sv_forward(model, recon, self.noise2)
        expected = (
            -disc_s_forward(model, recon).mean()
            + w.lambda5 * semantic_centroid_loss(recon, batch.labels, losses._attr_targets(batch))
            + w.lambda6 * visual_consistency_loss(
                cycle, batch.labels,
                {c: batch.visual[batch.labels == c] for c in np.unique(batch.labels)})
        )
        assert total == pytest.approx(expected, abs=1e-10)
        assert total == pytest.approx(sum(terms.values()), abs=1e-12)


class TestRegularizersNonnegative:
    def test_random_cases(self):
        rng = np.random.default_rng(31)
        model = small_model()
        for trial in range(10):
            batch = random_batch(seed=100 + trial)
            synth = gen_sv_forward(model, batch.attributes, batch.noise)
            recon = gen_vs_forward(model, synth)
            assert classification_loss(model.cls_seen, synth, batch.labels) >= 0
            assert semantic_centroid_loss(recon, batch.labels, losses._attr_targets(batch)) >= 0
            assert visual_consistency_loss(
                synth, batch.labels,
                {c: batch.visual[batch.labels == c] for c in np.unique(batch.labels)}) >= 0
            grad_fn = lambda u: np.tile(rng.standard_normal(L), (u.shape[0], 1))
            assert gradient_penalty(
                grad_fn, batch.attributes, recon, int(rng.integers(1e6))) >= 0


class TestLossGradients:
    """Composite-loss analytic gradients vs finite differences (<= 1e-3)."""

    TOL = 1e-3

    def test_disc_v_grads(self):
        model = small_model(seed=40)
        batch = random_batch(seed=41)
        synth = np.abs(np.random.default_rng(42).standard_normal(batch.visual.shape)) + 0.05
        alpha = alpha_for(batch)
        w = LossWeights()
        _, _, grads = losses.disc_v_loss_and_grads(model, batch, synth, w, alpha)
        fn = lambda: disc_v_loss(model, batch, synth, w, alpha)
        errors = check_param_grads(fn, model.d_v, grads)
        assert max(errors.values()) < self.TOL, errors

    def test_disc_s_grads(self):
        model = small_model(seed=43)
        batch = random_batch(seed=44)
        recon = np.abs(np.random.default_rng(45).standard_normal(batch.attributes.shape))
        alpha = alpha_for(batch)
        w = LossWeights()
        _, _, grads = losses.disc_s_loss_and_grads(model, batch, recon, w, alpha)
        fn = lambda: disc_s_loss(model, batch, recon, w, alpha)
        errors = check_param_grads(fn, model.d_s, grads)
        assert max(errors.values()) < self.TOL, errors

    @pytest.mark.parametrize("pair_mode", ["real", "cycle"])
    def test_gen_sv_grads(self, pair_mode):
        model = small_model(seed=46)
        batch = random_batch(seed=47)
        noise2 = np.random.default_rng(48).standard_normal((B, L))
        w = LossWeights()
        _, _, grads = losses.gen_sv_loss_and_grads(
            model, batch, w, noise2, pair_mode=pair_mode)
        fn = lambda: gen_sv_loss(model, batch, w, noise2, pair_mode=pair_mode)
        errors = check_param_grads(fn, model.g_sv, grads)
        assert max(errors.values()) < self.TOL, errors

    def test_gen_vs_grads(self):
        model = small_model(seed=49)
        batch = random_batch(seed=50)
        noise2 = np.random.default_rng(51).standard_normal((B, L))
        w = LossWeights()
        _, _, grads = losses.gen_vs_loss_and_grads(model, batch, w, noise2)
        fn = lambda: gen_vs_loss(model, batch, w, noise2)
        errors = check_param_grads(fn, model.g_vs, grads)
        assert max(errors.values()) < self.TOL, errors

    def test_classification_grads(self):
        model = small_model(seed=52)
        batch = random_batch(seed=53)
        _, dw, db, dx = losses.softmax_ce_grads(model.cls_seen, batch.visual, batch.labels)
        fn = lambda: classification_loss(model.cls_seen, batch.visual, batch.labels)
        assert rel_error(dw, numeric_grad(fn, model.cls_seen.w)) < self.TOL
        assert rel_error(db, numeric_grad(fn, model.cls_seen.b)) < self.TOL
        assert rel_error(dx, numeric_grad(fn, batch.visual)) < self.TOL

    def test_semantic_centroid_grads(self):
        batch = random_batch(seed=54)
        recon = np.random.default_rng(55).uniform(0.1, 1.0, batch.attributes.shape)
        attrs = losses._attr_targets(batch)
        _, d = losses.semantic_centroid_grads(recon, batch.labels, attrs)
        fn = lambda: semantic_centroid_loss(recon, batch.labels, attrs)
        assert rel_error(d, numeric_grad(fn, recon)) < self.TOL

    def test_visual_consistency_grads(self):
        batch = random_batch(seed=56)
        cycle = np.random.default_rng(57).uniform(0.1, 1.0, batch.visual.shape)
        real = {c: batch.visual[batch.labels == c] for c in np.unique(batch.labels)}
        _, d = losses._centroid_match_grads(
            cycle, batch.labels, losses._batch_centroid_targets(batch))
        fn = lambda: visual_consistency_loss(cycle, batch.labels, real)
        assert rel_error(d, numeric_grad(fn, cycle)) < self.TOL
