"""Word/phrase vectors for context similarity.

The default provider builds positive-PMI co-occurrence vectors over a
symmetric window of generalized symbols (type slots included as contexts) and
optionally reduces them to ``d`` dimensions with a truncated SVD. Any
pre-trained table in word2vec text format can be loaded instead.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.utils.extmath import randomized_svd

from .candidates import generalize, is_slot, literal_kind
from .corpus import Corpus


class EmbeddingTable:
    def __init__(self, words, vectors):
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim != 2 or len(words) != len(vectors):
            raise ValueError("need one vector per word")
        self.words = list(words)
        self.index = {w: i for i, w in enumerate(self.words)}
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        self.vectors = np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __contains__(self, w):
        return w in self.index

    def similarity(self, a: str, b: str) -> float:
        """Cosine similarity; 0 when either side is out of vocabulary."""
        i, j = self.index.get(a), self.index.get(b)
        if i is None or j is None:
            return 0.0
        return float(np.clip(self.vectors[i] @ self.vectors[j], -1.0, 1.0))

    def save(self, fh):
        fh.write(f"{len(self.words)} {self.dim}\n")
        for w, v in zip(self.words, self.vectors):
            fh.write(w + " " + " ".join(f"{x:.8g}" for x in v) + "\n")

    @classmethod
    def load(cls, fh) -> "EmbeddingTable":
        words, rows = [], []
        for k, line in enumerate(fh):
            parts = line.rstrip().split(" ")
            if k == 0 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            if len(parts) < 2:
                continue
            words.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
        return cls(words, np.array(rows))


def ppmi(counts: sp.spmatrix) -> sp.csr_matrix:
    counts = sp.csr_matrix(counts, dtype=float)
    total = counts.sum()
    rows = np.asarray(counts.sum(axis=1)).ravel()
    cols = np.asarray(counts.sum(axis=0)).ravel()
    coo = counts.tocoo()
    pmi = np.log(coo.data * total / (rows[coo.row] * cols[coo.col]))
    keep = pmi > 0
    return sp.csr_matrix((pmi[keep], (coo.row[keep], coo.col[keep])), shape=counts.shape)


def embed_tokens(corpus: Corpus, d: int | None = 50, window: int = 2, seed: int = 0,
                 level: str = "fine") -> EmbeddingTable:
    """PPMI vectors for every word/phrase literal in ``corpus``."""
    vocab: dict[str, int] = {}
    ids, sent = [], []
    for k, s in enumerate(corpus):
        for sym in generalize(s, level):
            ids.append(vocab.setdefault(sym, len(vocab)))
            sent.append(k)
    ids = np.array(ids, dtype=np.int64)
    sent = np.array(sent, dtype=np.int64)
    rows, cols = [], []
    for off in range(1, window + 1):
        same = sent[:-off] == sent[off:]
        a, b = ids[:-off][same], ids[off:][same]
        rows += [a, b]
        cols += [b, a]
    V = len(vocab)
    if rows:
        r, c = np.concatenate(rows), np.concatenate(cols)
    else:
        r = c = np.zeros(0, dtype=np.int64)
    counts = sp.coo_matrix((np.ones(len(r)), (r, c)), shape=(V, V)).tocsr()
    counts.sum_duplicates()

    words = [w for w in vocab if not is_slot(w) and literal_kind(w) != "punct"]
    row_ids = np.array([vocab[w] for w in words], dtype=np.int64)
    M = ppmi(counts)[row_ids] if len(words) else sp.csr_matrix((0, V))
    if d is not None and 0 < d < min(M.shape):
        U, S, _ = randomized_svd(M, d, random_state=seed)
        X = U * S
    else:
        X = M.toarray()
    return EmbeddingTable(words, X)
