import itertools
import math

import numpy as np
import pytest

from motionprune import (EmbeddingMatrix, ImportanceScores, ProjectionWeights,
                         Segment, SegmentKind, aggregate_importance,
                         assemble_pruned, attention_scores, prune_pipeline,
                         topk_per_view)
from motionprune.errors import InvalidArgument, InvalidState


def make_matrix(rng, l_vis_views=(6, 6), l_txt=4, l_prop=1, l_act=3, d=8,
                with_eos=True):
    segs = [Segment(SegmentKind.BOS, 1)]
    for view, length in enumerate(l_vis_views):
        segs.append(Segment(SegmentKind.VIS, length, view_id=view))
    segs += [Segment(SegmentKind.PROP, l_prop), Segment(SegmentKind.TXT, l_txt),
             Segment(SegmentKind.ACT, l_act)]
    if with_eos:
        segs.append(Segment(SegmentKind.EOS, 1))
    rows = sum(s.length for s in segs)
    return EmbeddingMatrix(rng.normal(size=(rows, d)), tuple(segs))


def make_weights(rng, d=8, heads=2):
    return ProjectionWeights(rng.normal(size=(d, d)), rng.normal(size=(d, d)),
                             num_heads=heads, head_dim=d // heads)


def naive_scores(emb, weights):
    """Triple-loop oracle for the scaled text-to-vision similarities."""
    h_txt = emb.rows_of(SegmentKind.TXT)
    h_vis = emb.rows_of(SegmentKind.VIS)
    q = h_txt @ weights.w_q
    k = h_vis @ weights.w_k
    nh, d = weights.num_heads, weights.head_dim
    out = np.zeros((nh, h_txt.shape[0], h_vis.shape[0]))
    for h in range(nh):
        for t in range(h_txt.shape[0]):
            for v in range(h_vis.shape[0]):
                acc = 0.0
                for j in range(d):
                    acc += q[t, h * d + j] * k[v, h * d + j]
                out[h, t, v] = acc / math.sqrt(d)
    return out


def oracle_select(phi_view, kc):
    order = sorted(range(len(phi_view)), key=lambda i: (-phi_view[i], i))
    return sorted(order[:kc])


def oracle_quota(k, alpha):
    k_c = [math.floor(a * k) for a in alpha]
    rem = k - sum(k_c)
    for c in sorted(range(len(alpha)), key=lambda c: (-alpha[c], c))[:rem]:
        k_c[c] += 1
    return k_c


class TestAttentionScores:
    def test_orthogonal_rows_zero_scores(self):
        d = 8
        segs = (Segment(SegmentKind.VIS, 2), Segment(SegmentKind.TXT, 2))
        data = np.zeros((4, d))
        data[0, 0] = data[1, 1] = 1.0  # vis
        data[2, 4] = data[3, 5] = 1.0  # txt
        emb = EmbeddingMatrix(data, segs)
        w = ProjectionWeights(np.eye(d), np.eye(d), num_heads=1, head_dim=d)
        assert np.allclose(attention_scores(emb, w), 0.0)

    def test_self_inner_product(self):
        d = 4
        t = np.array([1.0, 2.0, -1.0, 0.5])
        emb = EmbeddingMatrix(np.vstack([t, t]),
                              (Segment(SegmentKind.VIS, 1), Segment(SegmentKind.TXT, 1)))
        w = ProjectionWeights(np.eye(d), np.eye(d), num_heads=1, head_dim=d)
        scores = attention_scores(emb, w)
        assert scores.shape == (1, 1, 1)
        assert scores[0, 0, 0] == pytest.approx(float(t @ t) / math.sqrt(d))

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(20)
        for _ in range(5):
            emb = make_matrix(rng)
            w = make_weights(rng)
            got = attention_scores(emb, w)
            want = naive_scores(emb, w)
            assert np.allclose(got, want, rtol=1e-6, atol=1e-9)

    def test_empty_text_segment_rejected(self):
        emb = EmbeddingMatrix(np.ones((3, 4)),
                              (Segment(SegmentKind.BOS, 1), Segment(SegmentKind.VIS, 2)))
        w = ProjectionWeights(np.eye(4), np.eye(4), num_heads=1, head_dim=4)
        with pytest.raises(InvalidState):
            attention_scores(emb, w)

    def test_width_mismatch_rejected(self):
        emb = EmbeddingMatrix(np.ones((2, 4)),
                              (Segment(SegmentKind.VIS, 1), Segment(SegmentKind.TXT, 1)))
        w = ProjectionWeights(np.eye(8), np.eye(8), num_heads=1, head_dim=8)
        with pytest.raises(InvalidArgument):
            attention_scores(emb, w)


class TestAggregateImportance:
    def test_constant_tensor(self):
        phi = aggregate_importance(np.full((3, 4, 5), 2.5))
        assert np.allclose(phi.values, 2.5)

    def test_degenerate_average_is_row(self):
        row = np.array([[[1.0, -2.0, 3.0]]])
        phi = aggregate_importance(row)
        assert np.array_equal(phi.values, row[0, 0])

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(21)
        scores = rng.normal(size=(3, 5, 7))
        phi = aggregate_importance(scores)
        nh, lt, lv = scores.shape
        want = [sum(scores[h, t, v] for h in range(nh) for t in range(lt)) / (nh * lt)
                for v in range(lv)]
        assert np.allclose(phi.values, want)


class TestTopKPerView:
    def test_single_view_example(self):
        phi = ImportanceScores(np.array([0.1, 0.5, 0.3, 0.2]), (4,))
        decision = topk_per_view(phi, 0.5, (1.0,))
        assert decision.k == 2
        assert decision.kept_indices[0].tolist() == [1, 2]

    def test_four_six_split(self):
        phi = ImportanceScores(np.arange(20.0), (10, 10))
        decision = topk_per_view(phi, 0.5, (0.4, 0.6))
        assert decision.k == 10
        assert decision.k_c == (4, 6)

    def test_full_retention(self):
        phi = ImportanceScores(np.arange(12.0), (6, 6))
        decision = topk_per_view(phi, 1.0, (0.5, 0.5))
        assert [idx.tolist() for idx in decision.kept_indices] == [list(range(6))] * 2

    def test_invalid_rho(self):
        phi = ImportanceScores(np.arange(4.0), (4,))
        for rho in (0.0, -0.1, 1.5):
            with pytest.raises(InvalidArgument):
                topk_per_view(phi, rho, (1.0,))

    def test_degenerate_k_zero(self):
        phi = ImportanceScores(np.arange(4.0), (4,))
        with pytest.raises(InvalidArgument):
            topk_per_view(phi, 0.1, (1.0,))

    def test_ties_break_to_lower_index(self):
        phi = ImportanceScores(np.array([1.0, 1.0, 1.0, 1.0]), (4,))
        decision = topk_per_view(phi, 0.5, (1.0,))
        assert decision.kept_indices[0].tolist() == [0, 1]

    def test_exhaustive_small_instances(self):
        rng = np.random.default_rng(22)
        alphas = {1: [(1.0,)], 2: [(0.0, 1.0), (0.3, 0.7), (0.4, 0.6), (0.5, 0.5), (1.0, 0.0)]}
        for c, l_total in itertools.product((1, 2), range(2, 13)):
            splits = [(l_total,)] if c == 1 else [
                (a, l_total - a) for a in range(1, l_total)]
            for split in splits[:4]:
                phi_vals = rng.normal(size=l_total)
                phi = ImportanceScores(phi_vals, split)
                for rho in [r / 10 for r in range(1, 11)]:
                    k = math.floor(rho * l_total)
                    if k == 0:
                        continue
                    for alpha in alphas[c]:
                        k_c = oracle_quota(k, alpha)
                        if any(kc > lc for kc, lc in zip(k_c, split)):
                            with pytest.raises(InvalidArgument):
                                topk_per_view(phi, rho, alpha)
                            continue
                        decision = topk_per_view(phi, rho, alpha)
                        assert sum(len(i) for i in decision.kept_indices) == k
                        assert list(decision.k_c) == k_c
                        views = phi.per_view()
                        for idx, view_phi, kc in zip(decision.kept_indices, views, k_c):
                            assert idx.tolist() == oracle_select(view_phi.tolist(), kc)

    def test_argmax_invariance_under_affine_scores(self):
        rng = np.random.default_rng(23)
        phi_vals = rng.normal(size=16)
        phi = ImportanceScores(phi_vals, (8, 8))
        base = topk_per_view(phi, 0.5, (0.4, 0.6))
        shifted = ImportanceScores(phi_vals * 3.5 + 11.0, (8, 8))
        other = topk_per_view(shifted, 0.5, (0.4, 0.6))
        for a, b in zip(base.kept_indices, other.kept_indices):
            assert a.tolist() == b.tolist()

    def test_permutation_equivariance_within_view(self):
        rng = np.random.default_rng(24)
        phi_vals = rng.normal(size=10)
        perm = rng.permutation(10)
        base = topk_per_view(ImportanceScores(phi_vals, (10,)), 0.5, (1.0,))
        permuted = topk_per_view(ImportanceScores(phi_vals[perm], (10,)), 0.5, (1.0,))
        kept_orig = set(base.kept_indices[0].tolist())
        kept_unperm = set(int(perm[i]) for i in permuted.kept_indices[0])
        assert kept_orig == kept_unperm


class TestAssemblePruned:
    def test_identity_at_full_retention(self):
        rng = np.random.default_rng(25)
        emb = make_matrix(rng)
        w = make_weights(rng)
        pruned, _, _ = prune_pipeline(emb, w, 1.0, (0.5, 0.5))
        assert np.array_equal(pruned.data, emb.data)
        assert pruned.segments == emb.segments

    def test_length_arithmetic_single_token(self):
        rng = np.random.default_rng(26)
        emb = make_matrix(rng, l_vis_views=(5,))
        w = make_weights(rng)
        pruned, decision, _ = prune_pipeline(emb, w, 0.2, (1.0,))
        assert decision.k == 1
        assert pruned.rows == emb.rows - emb.l_vis + 1

    def test_row_provenance(self):
        rng = np.random.default_rng(27)
        for _ in range(10):
            emb = make_matrix(rng)
            w = make_weights(rng)
            pruned, decision, _ = prune_pipeline(emb, w, 0.5, (0.4, 0.6))
            # non-vis segments pass through bit-identical
            for kind in (SegmentKind.BOS, SegmentKind.PROP, SegmentKind.TXT,
                         SegmentKind.ACT, SegmentKind.EOS):
                assert np.array_equal(pruned.rows_of(kind), emb.rows_of(kind))
            # every kept vis row equals its source row
            vis_in = [emb.data[off:off + seg.length]
                      for seg, off in emb.segment_slices(SegmentKind.VIS)]
            vis_out = [pruned.data[off:off + seg.length]
                       for seg, off in pruned.segment_slices(SegmentKind.VIS)]
            for block_in, block_out, idx in zip(vis_in, vis_out, decision.kept_indices):
                assert np.array_equal(block_out, block_in[idx])

    def test_out_of_range_index_rejected(self):
        rng = np.random.default_rng(28)
        emb = make_matrix(rng, l_vis_views=(4,))
        phi = ImportanceScores(np.arange(4.0), (4,))
        decision = topk_per_view(phi, 0.5, (1.0,))
        bad = type(decision)(decision.rho, decision.alpha,
                             (np.array([0, 99]),), decision.k, decision.k_c)
        with pytest.raises(InvalidArgument):
            assemble_pruned(emb, bad)
