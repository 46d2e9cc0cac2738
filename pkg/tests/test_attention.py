import math

import numpy as np
import pytest

from semqa import numerics as nm
from semqa.annotate import build_masks, mask_full, mask_sentence
from semqa.attention import (
    HeadSpec,
    HeadWeights,
    NUM_HEADS,
    head_weights,
    init_label_table,
    init_multi_head,
    multi_head_forward,
    relational_memory_report,
    semantic_head_forward,
    token_only_head_forward,
)
from semqa.corpus import document_from_sentences


def doc_with_sentences(*lengths):
    return document_from_sentences([[f"t{i}_{j}" for j in range(k)] for i, k in enumerate(lengths)])


def ones_weights(d_model, d_h, d_i):
    return HeadWeights(
        w_q_r=nm.Tensor(np.ones((d_model, d_h))),
        w_k_r=nm.Tensor(np.ones((d_model, d_h))),
        w_v=nm.Tensor(np.ones((d_model, d_h))),
        w_q_s=nm.Tensor(np.ones((d_i, d_h))),
        w_k_s=nm.Tensor(np.ones((d_i, d_h))),
    )


class TestSingleHead:
    def test_hand_evaluated_two_token_head(self):
        # d_model = d_h = d_i = 1, all weights 1, null labels, full mask
        r = nm.Tensor(np.array([[1.0], [3.0]]))
        table = nm.Parameter(np.zeros((1, 1)), "t")
        out = semantic_head_forward(
            r, np.zeros(2, dtype=np.int64), np.ones((2, 2), dtype=bool),
            ones_weights(1, 1, 1), table)
        e2, e6 = math.exp(2.0), math.exp(6.0)
        want = np.array([[(1 + 3 * e2) / (1 + e2)], [(1 + 3 * e6) / (1 + e6)]])
        assert np.allclose(out.data, want, atol=1e-12)

    def test_out_of_scope_perturbation_leaves_row_bitwise_identical(self, rng):
        doc = doc_with_sentences(3, 4)
        mask = mask_sentence(doc).allowed
        n, d_model, d_h, d_i = doc.n, 6, 3, 4
        weights = HeadWeights(
            w_q_r=nm.Tensor(rng.normal(size=(d_model, d_h))),
            w_k_r=nm.Tensor(rng.normal(size=(d_model, d_h))),
            w_v=nm.Tensor(rng.normal(size=(d_model, d_h))),
            w_q_s=nm.Tensor(rng.normal(size=(d_i, d_h))),
            w_k_s=nm.Tensor(rng.normal(size=(d_i, d_h))),
        )
        table = nm.Parameter(rng.normal(size=(5, d_i)), "t")
        ids = rng.integers(0, 5, size=n)
        base = rng.normal(size=(n, d_model))
        out1 = semantic_head_forward(nm.Tensor(base.copy()), ids, mask, weights, table)
        perturbed = base.copy()
        perturbed[5] += 13.7  # token 5 lies in sentence 1; rows 0..2 must not move
        out2 = semantic_head_forward(nm.Tensor(perturbed), ids, mask, weights, table)
        assert np.array_equal(out1.data[:3], out2.data[:3])
        assert not np.array_equal(out1.data[3:], out2.data[3:])

    def test_null_plane_zeroed_s_weights_match_token_only_reference(self, rng):
        n, d_model, d_h, d_i = 5, 8, 4, 16
        w = HeadWeights(
            w_q_r=nm.Tensor(rng.normal(size=(d_model, d_h))),
            w_k_r=nm.Tensor(rng.normal(size=(d_model, d_h))),
            w_v=nm.Tensor(rng.normal(size=(d_model, d_h))),
            w_q_s=nm.Tensor(np.zeros((d_i, d_h))),
            w_k_s=nm.Tensor(np.zeros((d_i, d_h))),
        )
        table = nm.Parameter(rng.normal(size=(7, d_i)), "t")
        table.data[0] = 0.0
        r = nm.Tensor(rng.normal(size=(n, d_model)))
        out = semantic_head_forward(r, np.zeros(n, dtype=np.int64), np.ones((n, n), bool), w, table)
        ref = token_only_head_forward(r, HeadWeights(w_q_r=w.w_q_r, w_k_r=w.w_k_r, w_v=w.w_v))
        assert np.max(np.abs(out.data - ref.data)) == 0.0

    def test_score_scaling_changes_output_argmax(self):
        # crafted so that the sqrt(d_h)=2 scaling flips which value column
        # dominates the output row: raw scores row 0 are [1.2, 0]
        d_h = 4
        r = nm.Tensor(np.eye(2))
        weights = HeadWeights(
            w_q_r=nm.Tensor(np.array([[1.2, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])),
            w_k_r=nm.Tensor(np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]])),
            w_v=nm.Tensor(np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0]])),
        )
        v = np.array([[1.0, 0.0], [0.0, 2.0]])

        def attended(score_row):
            w = np.exp(score_row - score_row.max())
            w /= w.sum()
            return w @ v

        scaled = attended(np.array([1.2, 0.0]) / math.sqrt(d_h))
        unscaled = attended(np.array([1.2, 0.0]))
        assert np.argmax(scaled) == 1 and np.argmax(unscaled) == 0  # the case discriminates

        out = semantic_head_forward(r, None, np.ones((2, 2), dtype=bool), weights, None)
        assert np.allclose(out.data[0][:2], scaled, atol=1e-12)
        assert np.argmax(out.data[0][:2]) == 1

    def test_head_gradients_check_out(self, rng):
        n, d_model, d_h, d_i = 6, 8, 4, 3
        doc = doc_with_sentences(3, 3)
        mask = mask_sentence(doc).allowed
        params = [
            nm.Parameter(rng.normal(size=(d_model, d_h)), "wq"),
            nm.Parameter(rng.normal(size=(d_model, d_h)), "wk"),
            nm.Parameter(rng.normal(size=(d_model, d_h)), "wv"),
            nm.Parameter(rng.normal(size=(d_i, d_h)), "wqs"),
            nm.Parameter(rng.normal(size=(d_i, d_h)), "wks"),
            nm.Parameter(rng.normal(size=(4, d_i)), "table"),
            nm.Parameter(rng.normal(size=(n, d_model)), "r"),
        ]
        ids = rng.integers(0, 4, size=n)
        probe = nm.Tensor(rng.normal(size=(n, d_h)))

        def f():
            w = HeadWeights(*params[:5])
            out = semantic_head_forward(params[6], ids, mask, w, params[5])
            return nm.sum_all(nm.mul(out, probe))

        assert nm.grad_check(f, params) < 1e-4


class TestHeadSpec:
    def test_no_head_requires_full_mask(self):
        with pytest.raises(ValueError, match="full"):
            HeadSpec("No", mask_kind="sentence")

    def test_default_masks(self):
        assert HeadSpec("SRL").mask_kind == "sentence"
        assert HeadSpec("DR_Exp").mask_kind == "sentence"
        assert HeadSpec("DR_NonExp").mask_kind == "pair"
        assert HeadSpec("Coref").mask_kind == "full"
        assert HeadSpec("SentSpan").mask_kind == "window"

    def test_mask_override(self):
        assert HeadSpec("SRL", mask_kind="full").mask_kind == "full"

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="kind"):
            HeadSpec("Syntax")


def build_layer(rng_seed, head_specs, d_model=16, d_i=4, vocab=6):
    params = {}
    rng = nm.philox(rng_seed, 0)
    init_multi_head(params, "L", d_model, head_specs, d_i, rng)
    tables = {}
    for kind in {s.kind for s in head_specs if s.semantic}:
        plane_type = kind
        tables[plane_type] = init_label_table({}, f"tables.{kind}", vocab, d_i, rng)
    return params, tables


class TestMultiHead:
    def test_single_head_layer_with_identity_projection(self, rng):
        specs = [HeadSpec("SRL")]
        params, tables = build_layer(5, specs, d_model=4, d_i=4)
        params["L.w_o"] = nm.Parameter(np.eye(4), "L.w_o")
        doc = doc_with_sentences(2, 2)
        masks = {k: m.allowed for k, m in build_masks(doc).items()}
        ids = np.array([1, 2, 0, 3])
        planes = {"SRL": [ids]}
        r = nm.Tensor(rng.normal(size=(4, 4)))
        out = multi_head_forward(r, specs, params, "L", planes, masks, tables)
        single = semantic_head_forward(
            r, ids, masks["sentence"], head_weights(params, "L", 0, 1), tables["SRL"])
        assert np.allclose(out.data, single.data, atol=1e-12)

    def test_all_no_heads_match_reference_bitwise(self, rng):
        specs = [HeadSpec("No") for _ in range(4)]
        params, tables = build_layer(6, specs, d_model=8)
        doc = doc_with_sentences(3, 2)
        masks = {k: m.allowed for k, m in build_masks(doc).items()}
        planes = {"None": [np.zeros(5, dtype=np.int64)]}
        r = nm.Tensor(rng.normal(size=(5, 8)))
        out = multi_head_forward(r, specs, params, "L", planes, masks, tables)
        ref = multi_head_forward(r, specs, params, "L", {}, {}, {}, reference_token_only=True)
        assert np.array_equal(out.data, ref.data)

    def test_output_shape_with_eight_heads(self, rng):
        specs = [HeadSpec("No") for _ in range(NUM_HEADS)]
        params, tables = build_layer(7, specs, d_model=32)
        n = 10
        planes = {"None": [np.zeros(n, dtype=np.int64)]}
        masks = {"full": np.ones((n, n), dtype=bool)}
        out = multi_head_forward(nm.Tensor(rng.normal(size=(n, 32))), specs, params, "L",
                                 planes, masks, tables)
        assert out.data.shape == (10, 32)

    def test_missing_plane_slot_reported(self, rng):
        specs = [HeadSpec("SRL", plane_slot=2)]
        params, tables = build_layer(8, specs, d_model=4)
        masks = {"sentence": np.ones((3, 3), dtype=bool)}
        with pytest.raises(KeyError, match="slot 2"):
            multi_head_forward(nm.Tensor(rng.normal(size=(3, 4))), specs, params, "L",
                               {"SRL": [np.zeros(3, dtype=np.int64)]}, masks, tables)

    def test_label_plane_storage_is_one_id_per_token(self):
        # the head's auxiliary input is O(n): one label id per token
        doc = doc_with_sentences(4, 4)
        ids = np.zeros(doc.n, dtype=np.int64)
        assert ids.shape == (doc.n,)
        report = relational_memory_report(doc.n, 8, 4)
        assert report["semantic_side_input_count"] == 2 * doc.n * 4 * 8


class TestLabelTable:
    def test_null_row_initialized_to_zeros(self):
        table = init_label_table({}, "t", 9, 8, nm.philox(1, 2))
        assert np.array_equal(table.data[0], np.zeros(8))
        assert np.any(table.data[1:] != 0.0)


class TestMemoryReport:
    def test_paper_formula_values(self):
        report = relational_memory_report(100, 8, 16)
        assert report["semantic_side_input_count"] == 25_600
        assert report["dense_edge_count"] == 1_280_000

    def test_single_token(self):
        report = relational_memory_report(1, 8, 16)
        assert report["semantic_side_input_count"] == 2 * 16 * 8
        assert report["dense_edge_count"] == 16 * 8

    def test_ratio_is_half_n(self):
        for n in (2, 10, 64):
            report = relational_memory_report(n, 8, 4)
            assert report["dense_edge_count"] / report["semantic_side_input_count"] == n / 2

    def test_positive_arguments_required(self):
        with pytest.raises(ValueError):
            relational_memory_report(0, 8, 4)
