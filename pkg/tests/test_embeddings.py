import io
import os

import numpy as np
import pytest

from metapattern.corpus import read_corpus
from metapattern.embeddings import EmbeddingTable, embed_tokens, ppmi


@pytest.fixture(scope="module")
def table(bundle_dir):
    return embed_tokens(read_corpus(os.path.join(bundle_dir, "corpus.txt")), d=50, window=2, seed=0, level="coarse")


def test_self_similarity_and_oov(table):
    assert table.similarity("president", "president") == pytest.approx(1.0)
    assert table.similarity("president", "no-such-word") == 0.0
    assert "$PERSON" not in table and "," not in table


def test_related_words_are_closer(table):
    assert table.similarity("age", "-year-old") > table.similarity("age", "president")
    assert table.similarity("president", "prime_minister") > table.similarity("president", "-year-old")


def test_deterministic(bundle_dir, table):
    again = embed_tokens(read_corpus(os.path.join(bundle_dir, "corpus.txt")), d=50, window=2, seed=0, level="coarse")
    assert np.array_equal(table.vectors, again.vectors)


def test_save_load():
    t = EmbeddingTable(["a", "b", "z"], [[1.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
    buf = io.StringIO()
    t.save(buf)
    back = EmbeddingTable.load(io.StringIO(buf.getvalue()))
    assert back.words == ["a", "b", "z"]
    assert back.similarity("a", "b") == pytest.approx(2 ** -0.5)
    assert back.similarity("a", "z") == 0.0


def test_ppmi_drops_negative_associations():
    m = ppmi(np.array([[10.0, 0.0], [1.0, 1.0]]))
    assert (m.toarray() >= 0).all()
    assert m[0, 1] == 0
