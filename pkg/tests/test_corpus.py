import json

import pytest
from hypothesis import given, strategies as st

from replytopics.corpus import (CorpusError, CorpusSplit, EmailPair,
                                TokenizedDoc, Vocabulary, corpus_stats,
                                filter_pairs, format_stats, ingest,
                                segment_sentences, split_corpus, tokenize,
                                word_count)


def make_pair(i, customer="customer words " * 5, agent="agent words " * 12):
    return EmailPair(str(i), customer, agent)


class TestEmailPair:
    def test_requires_id(self):
        with pytest.raises(CorpusError):
            EmailPair("", "hello there", "hi back")

    def test_requires_nonempty_texts(self):
        with pytest.raises(CorpusError):
            EmailPair("1", "   ", "hi back")
        with pytest.raises(CorpusError):
            EmailPair("1", "hello", "\n\t")


class TestTokenizedDoc:
    def test_valid_bounds(self):
        TokenizedDoc(tokens=(1, 2, 3), sentence_bounds=((0, 2), (2, 3)))

    def test_gap_rejected(self):
        with pytest.raises(CorpusError):
            TokenizedDoc(tokens=(1, 2, 3), sentence_bounds=((0, 1), (2, 3)))

    def test_uncovered_tail_rejected(self):
        with pytest.raises(CorpusError):
            TokenizedDoc(tokens=(1, 2, 3), sentence_bounds=((0, 2),))


class TestIngest(object):
    def test_parses_jsonl(self, tmp_path):
        f = tmp_path / "c.jsonl"
        f.write_text(json.dumps({"id": "1", "customer": "My phone broke.",
                                 "agent": "Sorry to hear that. "
                                          "Please reset it."}) + "\n")
        pairs = ingest(f)
        assert pairs == [EmailPair("1", "My phone broke.",
                                   "Sorry to hear that. Please reset it.")]

    def test_empty_file(self, tmp_path):
        f = tmp_path / "c.jsonl"
        f.write_text("")
        assert ingest(f) == []

    def test_missing_field_names_line(self, tmp_path):
        f = tmp_path / "c.jsonl"
        f.write_text('{"id":"1","customer":"a b","agent":"c d"}\n'
                     '{"id":"2","customer":"a b"}\n')
        with pytest.raises(CorpusError, match="line 2"):
            ingest(f)

    def test_duplicate_id_rejected(self, tmp_path):
        f = tmp_path / "c.jsonl"
        f.write_text('{"id":"1","customer":"a b","agent":"c d"}\n'
                     '{"id":"1","customer":"e f","agent":"g h"}\n')
        with pytest.raises(CorpusError, match="'1'"):
            ingest(f)

    def test_unknown_format(self, tmp_path):
        with pytest.raises(CorpusError):
            ingest(tmp_path / "c.csv", format="csv")


class TestFilterPairs:
    def test_short_customer_dropped(self):
        p = EmailPair("1", "one two three four five six seven eight nine",
                      "w " * 25)
        assert filter_pairs([p]) == []

    def test_boundary_inclusive(self):
        p = EmailPair("1", " ".join(["w"] * 10), " ".join(["w"] * 20))
        assert filter_pairs([p]) == [p]

    def test_empty_input(self):
        assert filter_pairs([]) == []

    def test_idempotent(self):
        pairs = [EmailPair(str(i), "w " * n, "w " * (n + 15))
                 for i, n in enumerate([5, 10, 12, 30])]
        once = filter_pairs(pairs)
        assert filter_pairs(once) == once

    def test_invalid_threshold(self):
        with pytest.raises(CorpusError):
            filter_pairs([], min_customer=0)


class TestTokenize:
    def test_rule_application(self):
        assert tokenize("My phone's screen CRACKED!") == \
            ["phone", "screen", "cracked"]

    def test_empty(self):
        assert tokenize("") == []

    def test_lookup_drops_oov(self):
        vocab = Vocabulary(tokens=["phone"], doc_freq=[1], corpus_freq=[1])
        assert tokenize("phone screen", vocab) == [0]

    @given(st.text(max_size=200))
    def test_lookup_subset_of_vocab(self, text):
        vocab = Vocabulary(tokens=["alpha", "beta"], doc_freq=[1, 1],
                           corpus_freq=[2, 2])
        ids = tokenize(text, vocab)
        assert all(0 <= i < len(vocab) for i in ids)

    @given(st.text(max_size=200))
    def test_build_mode_normalized(self, text):
        for t in tokenize(text):
            assert t == t.lower() and len(t) >= 2


class TestSegmentSentences:
    def test_basic_split(self):
        assert segment_sentences("Please reset it. Then reply.") == \
            ["Please reset it.", "Then reply."]

    def test_abbreviation_guard(self):
        assert segment_sentences("Contact Mr. Smith today.") == \
            ["Contact Mr. Smith today."]

    def test_question_exclamation(self):
        assert segment_sentences("Is it charged? Try again!") == \
            ["Is it charged?", "Try again!"]

    def test_no_empty_sentences(self):
        for s in segment_sentences("One. Two. Three."):
            assert s.strip()

    @given(st.text(max_size=300))
    def test_reconstruction(self, text):
        joined = "".join(segment_sentences(text))
        assert "".join(joined.split()) == "".join(text.split())


class TestSplitCorpus:
    def test_80_20(self):
        pairs = [make_pair(i) for i in range(10)]
        split = split_corpus(pairs, 0.8, seed=1)
        assert len(split.train) == 8 and len(split.test) == 2

    def test_deterministic(self):
        pairs = [make_pair(i) for i in range(25)]
        assert split_corpus(pairs, 0.8, 5) == split_corpus(pairs, 0.8, 5)

    def test_single_pair_rejected(self):
        with pytest.raises(CorpusError):
            split_corpus([make_pair(0)], 0.8, 0)

    def test_disjoint_and_complete(self):
        pairs = [make_pair(i) for i in range(17)]
        split = split_corpus(pairs, 0.8, 2)
        assert set(split.train) | set(split.test) == {p.id for p in pairs}
        assert not set(split.train) & set(split.test)

    def test_overlap_rejected_by_type(self):
        with pytest.raises(CorpusError):
            CorpusSplit(train=("1", "2"), test=("2",), seed=0)

    def test_bad_ratio(self):
        with pytest.raises(CorpusError):
            split_corpus([make_pair(0), make_pair(1)], 1.0, 0)


class TestCorpusStats:
    def test_agent_avg_tokens(self):
        pairs = [EmailPair("1", "c " * 12, " ".join(["w"] * 10)),
                 EmailPair("2", "c " * 12, " ".join(["w"] * 20))]
        stats = corpus_stats(pairs)
        assert stats["agent"]["avg_tokens"] == 15.0

    def test_avg_sentences(self):
        pairs = [EmailPair("1", "Customer text here.",
                           "One here. Two here. Three here.")]
        assert corpus_stats(pairs)["agent"]["avg_sentences"] == 3.0

    def test_schema(self):
        stats = corpus_stats([make_pair(1)])
        for role in ("customer", "agent"):
            assert set(stats[role]) == {"docs", "avg_tokens", "avg_sentences"}

    def test_empty_rejected(self):
        with pytest.raises(CorpusError):
            corpus_stats([])

    def test_format_stats_smoke(self):
        out = format_stats(corpus_stats([make_pair(1)]))
        assert "customer" in out and "agent" in out


class TestVocabulary:
    def test_build_prunes_by_df(self):
        docs = [["common", "rare"], ["common"], ["common"]]
        vocab = Vocabulary.build(docs, min_doc_freq=2, max_size=100)
        assert "common" in vocab and "rare" not in vocab

    def test_max_size_keeps_most_frequent(self):
        docs = [["a1", "b2", "b2"]] * 3
        vocab = Vocabulary.build(docs, min_doc_freq=1, max_size=1)
        assert vocab.tokens == ["b2"]

    def test_ids_dense_and_ordered(self):
        docs = [["x1", "y2", "z3"]] * 5
        vocab = Vocabulary.build(docs, min_doc_freq=1, max_size=10)
        assert sorted(vocab.id_of(t) for t in vocab.tokens) == \
            list(range(len(vocab)))

    def test_json_round_trip(self):
        docs = [["x1", "y2"]] * 5
        vocab = Vocabulary.build(docs, min_doc_freq=1)
        again = Vocabulary.from_json(vocab.to_json())
        assert again.tokens == vocab.tokens
        assert again.doc_freq == vocab.doc_freq


def test_word_count_is_whitespace_based():
    assert word_count("one two  three\nfour") == 4
