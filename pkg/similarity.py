"""
Document similarity for partner retrieval and keyword scoring.

Every provider turns documents into fixed-dimension vectors and compares them by
cosine. The lexical provider counts case-folded tokens; the sidecar provider reads
precomputed vectors keyed by record id.
"""
import logging
import re
from abc import ABC, abstractmethod
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

TOKEN_RE = re.compile(r"\w+")

STOPWORDS = frozenset("""
a about above after again against all am an and any are as at be because been before being
below between both but by can could did do does doing down during each few for from further
had has have having he her here hers herself him himself his how i if in into is it its itself
just me more most my myself no nor not now of off on once only or other our ours ourselves out
over own same she should so some such than that the their theirs them themselves then there
these they this those through to too under until up very was we were what when where which
while who whom why will with would you your yours yourself yourselves
""".split())


class EmbeddingFileError(ValueError):
    """A sidecar embedding file that cannot be read consistently"""


class MissingEmbedding(KeyError):
    """A record id with no vector in the sidecar file"""


def tokenize(text: str) -> List[str]:
    """Case-folded word tokens; punctuation and whitespace separate tokens"""
    return TOKEN_RE.findall(text.casefold())


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    """Cosine of two vectors, 0.0 when either has zero norm"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    if norm == 0:
        return 0.0
    return float(np.clip(np.dot(a, b) / norm, -1.0, 1.0))


def cosine_matrix(vectors: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities of the rows; zero rows score 0 against everything"""
    vectors = np.asarray(vectors, dtype=float)
    norms = np.linalg.norm(vectors, axis=1)
    safe = np.where(norms == 0, 1.0, norms)
    unit = vectors / safe[:, None]
    matrix = unit @ unit.T
    matrix[norms == 0, :] = 0.0
    matrix[:, norms == 0] = 0.0
    return np.clip(matrix, -1.0, 1.0)


class SimilarityProvider(ABC):
    """Document embeddings compared by cosine"""

    @abstractmethod
    def embed(self, texts: Sequence[str], ids: Optional[Sequence[str]] = None) -> np.ndarray:
        """One row per document"""

    def similarity(self, a: str, b: str) -> float:
        vectors = self.embed([a, b])
        return cosine(vectors[0], vectors[1])

    def similarity_matrix(self, texts: Sequence[str], ids: Optional[Sequence[str]] = None) -> np.ndarray:
        if len(texts) == 0:
            return np.zeros((0, 0))
        return cosine_matrix(self.embed(texts, ids))


class LexicalSimilarityProvider(SimilarityProvider):
    """Token-count vectors over the vocabulary of the documents embedded together"""

    def embed(self, texts: Sequence[str], ids: Optional[Sequence[str]] = None) -> np.ndarray:
        counts = [Counter(tokenize(text)) for text in texts]
        # sorted so a document's vector does not depend on the order of the others
        vocabulary = {token: i for i, token in enumerate(sorted(set().union(*counts)))}
        vectors = np.zeros((len(texts), max(len(vocabulary), 1)))
        for row, counter in enumerate(counts):
            for token, count in counter.items():
                vectors[row, vocabulary[token]] = count
        return vectors


class SidecarEmbeddingProvider(SimilarityProvider):
    """
    Precomputed vectors read from `id<TAB>v1,v2,...,vd` lines.

    Lookups go by record id, so this provider serves partner retrieval only.
    """

    def __init__(self, vectors: Dict[str, np.ndarray]):
        self.vectors = vectors
        self.dimension = len(next(iter(vectors.values()))) if vectors else 0

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "SidecarEmbeddingProvider":
        vectors: Dict[str, np.ndarray] = {}
        dimension = None
        with open(path, "r", encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                record_id, sep, values = line.partition("\t")
                if not sep:
                    raise EmbeddingFileError(f"{path}:{line_number}: expected 'id<TAB>v1,...,vd'")
                try:
                    vector = np.array([float(v) for v in values.split(",")])
                except ValueError as e:
                    raise EmbeddingFileError(f"{path}:{line_number}: {e}") from e
                if dimension is None:
                    dimension = len(vector)
                elif len(vector) != dimension:
                    raise EmbeddingFileError(
                        f"{path}:{line_number}: dimension {len(vector)} differs from {dimension}"
                    )
                if record_id in vectors:
                    raise EmbeddingFileError(f"{path}:{line_number}: duplicate id '{record_id}'")
                vectors[record_id] = vector
        logger.info(f"Loaded {len(vectors)} embeddings of dimension {dimension or 0} from {path}")
        return cls(vectors)

    def embed(self, texts: Sequence[str], ids: Optional[Sequence[str]] = None) -> np.ndarray:
        if ids is None:
            raise MissingEmbedding("sidecar embeddings are looked up by record id")
        rows = []
        for record_id in ids:
            if record_id not in self.vectors:
                raise MissingEmbedding(record_id)
            rows.append(self.vectors[record_id])
        return np.vstack(rows) if rows else np.zeros((0, self.dimension))
