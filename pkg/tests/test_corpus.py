import json

import pytest
from hypothesis import given, strategies as st

from semqa.corpus import (
    Document,
    InterchangeError,
    Token,
    document_from_sentences,
    load_dataset,
    tokenize,
    write_dataset,
)
from semqa.synth import SyntheticSpec, generate_synthetic


class TestTokenize:
    def test_simple_sentence(self):
        doc = tokenize("Jeff went home.")
        assert doc.token_texts() == ["Jeff", "went", "home", "."]
        assert doc.sentence_bounds == ((0, 4),)

    def test_empty_text(self):
        doc = tokenize("")
        assert doc.n == 0
        assert doc.sentence_bounds == ()

    def test_two_sentences(self):
        doc = tokenize("A b. C d!")
        assert doc.n == 6
        assert doc.sentence_bounds == ((0, 3), (3, 6))

    def test_char_offsets(self):
        doc = tokenize("go home.")
        home = doc.tokens[1]
        period = doc.tokens[2]
        assert (home.char_start, home.char_end) == (3, 7)
        assert (period.char_start, period.char_end) == (7, 8)

    def test_trailing_unterminated_material(self):
        doc = tokenize("Done. and then")
        assert doc.sentence_bounds == ((0, 2), (2, 4))

    def test_detaches_commas_and_colons(self):
        doc = tokenize("wait, listen: now")
        assert doc.token_texts() == ["wait", ",", "listen", ":", "now"]
        assert doc.num_sentences == 1

    @given(st.text(max_size=200))
    def test_partition_property(self, text):
        doc = tokenize(text)
        expected = 0
        for s, e in doc.sentence_bounds:
            assert s == expected and e > s
            expected = e
        assert expected == doc.n
        indices = doc.sentence_indices()
        assert indices == sorted(indices)


class TestDocumentInvariants:
    def test_token_char_order_enforced(self):
        with pytest.raises(ValueError, match="char_start"):
            Token("x", 5, 5, 0)

    def test_gap_in_bounds_rejected(self):
        tokens = (Token("a", 0, 1, 0), Token("b", 2, 3, 1))
        with pytest.raises(ValueError, match="partition"):
            Document(tokens, ((0, 1), (2, 2)))

    def test_sentence_index_mismatch_rejected(self):
        tokens = (Token("a", 0, 1, 0), Token("b", 2, 3, 0))
        with pytest.raises(ValueError, match="sentence"):
            Document(tokens, ((0, 1), (1, 2)))


class TestInterchange:
    def test_round_trip_identity(self, tmp_path):
        corpus = generate_synthetic(SyntheticSpec(seed=5, train_docs=3, dev_docs=1, test_docs=1))
        for split, dataset in corpus.datasets.items():
            path = tmp_path / f"{split}.jsonl"
            write_dataset(dataset, path)
            loaded = load_dataset(path)
            assert loaded.split == dataset.split
            assert loaded.documents == dataset.documents
            assert loaded.examples == dataset.examples

    def test_empty_dataset_round_trip(self, tmp_path):
        from semqa.corpus import Dataset

        path = tmp_path / "empty.jsonl"
        write_dataset(Dataset(split="dev"), path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1  # header only
        loaded = load_dataset(path)
        assert loaded.examples == [] and loaded.documents == {}

    def test_missing_answers_field_named(self, tmp_path):
        corpus = generate_synthetic(SyntheticSpec(seed=5, train_docs=1, dev_docs=1, test_docs=1))
        path = tmp_path / "train.jsonl"
        write_dataset(corpus.datasets["train"], path)
        lines = path.read_text().splitlines()
        records = [json.loads(l) for l in lines]
        for rec in records:
            if rec["kind"] == "example":
                del rec["answers"]
        path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
        with pytest.raises(InterchangeError, match="answers"):
            load_dataset(path)

    def test_dangling_document_reference(self, tmp_path):
        corpus = generate_synthetic(SyntheticSpec(seed=5, train_docs=1, dev_docs=1, test_docs=1))
        path = tmp_path / "train.jsonl"
        write_dataset(corpus.datasets["train"], path)
        records = [json.loads(l) for l in path.read_text().splitlines()]
        for rec in records:
            if rec["kind"] == "example":
                rec["document_id"] = "no-such-doc"
        path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
        with pytest.raises(InterchangeError, match="dangling"):
            load_dataset(path)

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"kind":"header","format":"qa-dataset","version":1,"split":"dev"}\n{oops\n')
        with pytest.raises(InterchangeError, match=":2"):
            load_dataset(path)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "noheader.jsonl"
        path.write_text("")
        with pytest.raises(InterchangeError, match="header"):
            load_dataset(path)


class TestSynthetic:
    def test_deterministic_byte_identical(self, tmp_path):
        spec = SyntheticSpec(seed=9, train_docs=3, dev_docs=1, test_docs=1)
        blobs = []
        for run in range(2):
            corpus = generate_synthetic(spec)
            path = tmp_path / f"train-{run}.jsonl"
            write_dataset(corpus.datasets["train"], path)
            blobs.append(path.read_bytes())
        assert blobs[0] == blobs[1]

    def test_doc_counts_match_spec(self):
        corpus = generate_synthetic(SyntheticSpec(seed=2, train_docs=3, dev_docs=2, test_docs=4))
        assert len(corpus.datasets["train"].documents) == 3
        assert len(corpus.datasets["dev"].documents) == 2
        assert len(corpus.datasets["test"].documents) == 4
        for dataset in corpus.datasets.values():
            for doc_id in dataset.documents:
                assert doc_id in corpus.annotations

    def test_answers_occur_verbatim(self):
        corpus = generate_synthetic(SyntheticSpec(seed=3, train_docs=4, dev_docs=1, test_docs=1))
        for dataset in corpus.datasets.values():
            for ex in dataset.examples:
                answer = list(ex.answers[0])
                texts = ex.context.token_texts()
                n, k = len(texts), len(answer)
                assert any(texts[i:i + k] == answer for i in range(n - k + 1)), ex.id

    def test_annotations_validate(self):
        corpus = generate_synthetic(SyntheticSpec(seed=4, train_docs=4, dev_docs=2, test_docs=2))
        for dataset in corpus.datasets.values():
            for doc_id, doc in dataset.documents.items():
                corpus.annotations[doc_id].validate(doc)

    def test_invalid_spec_rejected(self):
        with pytest.raises(ValueError):
            SyntheticSpec(seed=1, train_docs=0)
        with pytest.raises(ValueError):
            SyntheticSpec(seed=1, sentences_per_doc=(5, 3))

    def test_question_documents_single_sentence(self):
        corpus = generate_synthetic(SyntheticSpec(seed=6, train_docs=2, dev_docs=1, test_docs=1))
        for ex in corpus.datasets["train"].examples:
            assert ex.question.num_sentences == 1
            assert len(ex.answers) == 2


class TestDocumentFromSentences:
    def test_bounds_and_indices(self):
        doc = document_from_sentences([["a", "b"], ["c"]])
        assert doc.sentence_bounds == ((0, 2), (2, 3))
        assert doc.sentence_indices() == [0, 0, 1]
        assert doc.tokens[0].char_start < doc.tokens[0].char_end
