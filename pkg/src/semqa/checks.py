"""End-to-end gradient checking at micro scale.

A handcrafted two-sentence document exercises every annotation kind (one
semantic view per verb, a coreference cluster, one Explicit and one
Non-Explicit discourse relation), so central differences cover every
parameter of the model, label-embedding tables included.
"""

from __future__ import annotations

from .annotate import AnnotationBundle, CorefCluster, DiscourseRelation, SemanticView
from .corpus import Dataset, QAExample, document_from_sentences
from .encoder import DropoutCtx, StackConfig
from .model import ModelBundle, ModelConfig, build_model, example_loss
from . import numerics as nm

MICRO_TOLERANCE = 1e-4


def micro_fixture() -> tuple[ModelBundle, QAExample]:
    """A d_model=8, single-block model over an n=8 context and m=4 question."""
    doc = document_from_sentences([
        ["Mira", "slept", "because", "she", "ached"],
        ["Omar", "came", "."],
    ])
    bundle_annotations = AnnotationBundle(
        srl_views=(
            SemanticView(1, ("ARG0", "V", "ARGM-CAU", "ARGM-CAU", "ARGM-CAU", "NONE", "NONE", "NONE")),
            SemanticView(4, ("NONE", "NONE", "NONE", "ARG0", "V", "NONE", "NONE", "NONE")),
            SemanticView(6, ("NONE", "NONE", "NONE", "NONE", "NONE", "ARG0", "V", "NONE")),
        ),
        coref=(CorefCluster(0, ((0, 1), (3, 4))),),
        discourse=(
            DiscourseRelation("Explicit", "Contingency.Cause.Reason",
                              arg1_range=(0, 2), arg2_range=(3, 5), conn_range=(2, 3)),
            DiscourseRelation("NonExplicit", "Expansion.Conjunction",
                              arg1_range=(0, 5), arg2_range=(5, 8)),
        ),
    )
    question = document_from_sentences([["Who", "slept", "badly", "?"]])
    example = QAExample(
        id="micro-q0",
        document_id="micro-0000",
        context=doc,
        question=question,
        answers=(("Mira",), ("Mira",)),
        oracle_span=(0, 1),
    )
    dataset = Dataset(split="train", examples=[example], documents={"micro-0000": doc})

    stack = StackConfig(
        d_model=8,
        num_heads=8,
        num_blocks=1,
        enhanced_indices=(0,),
        head_mix=(("SRL", 1), ("DR_Exp", 1), ("DR_NonExp", 1), ("Coref", 1), ("SentSpan", 1)),
        num_convs=1,
        conv_kernel_width=3,
        passes=3,
    )
    cfg = ModelConfig(
        d_model=8,
        word_dim=6,
        char_dim=4,
        char_conv_width=3,
        max_chars=6,
        max_answer_len=4,
        dropout=0.0,
        label_dim=4,
        embed_convs=1,
        embed_conv_width=3,
        stack=stack,
    )
    bundle = build_model(cfg, dataset, {"micro-0000": bundle_annotations}, seed=3)
    return bundle, example


def micro_gradcheck(h: float = 1e-5) -> tuple[float, int]:
    """Max relative error of analytic vs central-difference gradients.

    Runs in float64; returns (max relative error, parameter element count).
    """
    nm.set_default_dtype("float64")
    bundle, example = micro_fixture()
    params = bundle.eval_params()

    def loss():
        return example_loss(bundle, example, DropoutCtx())

    max_rel = nm.grad_check(loss, params.values(), h=h)
    n_elements = sum(p.data.size for p in params.values())
    return max_rel, n_elements
