import numpy as np
import pytest

from similarity import (
    EmbeddingFileError,
    LexicalSimilarityProvider,
    MissingEmbedding,
    SidecarEmbeddingProvider,
    cosine,
    cosine_matrix,
    tokenize,
)


class TestTokenize:
    def test_case_folding_and_punctuation(self):
        assert tokenize("The Team won, 2-1!") == ["the", "team", "won", "2", "1"]

    def test_empty(self):
        assert tokenize("  ...  ") == []


class TestCosine:
    def test_parallel_and_orthogonal(self):
        assert cosine([1, 2], [2, 4]) == pytest.approx(1.0)
        assert cosine([1, 0], [0, 3]) == 0.0

    def test_zero_vector(self):
        assert cosine([0, 0], [1, 1]) == 0.0

    def test_matrix_agrees_with_pairwise(self):
        vectors = np.random.default_rng(0).random((6, 4))
        vectors[2] = 0.0
        matrix = cosine_matrix(vectors)
        for i in range(6):
            for j in range(6):
                assert matrix[i, j] == pytest.approx(cosine(vectors[i], vectors[j]))


class TestLexicalProvider:
    def test_identical_texts(self):
        assert LexicalSimilarityProvider().similarity("Paris wins", "paris WINS") == pytest.approx(1.0)

    def test_no_shared_tokens(self):
        assert LexicalSimilarityProvider().similarity("cats sleep", "stocks crash") == 0.0

    def test_vectors_do_not_depend_on_corpus_order(self):
        provider = LexicalSimilarityProvider()
        texts = ["b a a", "c b", "a c c c"]
        forward = provider.similarity_matrix(texts)
        backward = provider.similarity_matrix(texts[::-1])
        assert np.allclose(forward, backward[::-1, ::-1])

    def test_empty_corpus(self):
        assert LexicalSimilarityProvider().similarity_matrix([]).shape == (0, 0)


class TestSidecarProvider:
    def write(self, tmp_path, text):
        path = tmp_path / "vectors.tsv"
        path.write_text(text, encoding="utf-8")
        return path

    def test_lookup_by_id(self, tmp_path):
        provider = SidecarEmbeddingProvider.from_file(self.write(tmp_path, "d1\t1,0\nd2\t0,1\n\nd3\t1,1\n"))
        assert provider.dimension == 2
        matrix = provider.similarity_matrix(["ignored"] * 3, ["d1", "d2", "d3"])
        assert matrix[0, 1] == 0.0
        assert matrix[0, 2] == pytest.approx(1 / np.sqrt(2))

    def test_missing_id(self, tmp_path):
        provider = SidecarEmbeddingProvider.from_file(self.write(tmp_path, "d1\t1,0\n"))
        with pytest.raises(MissingEmbedding):
            provider.embed(["text"], ["d9"])
        with pytest.raises(MissingEmbedding):
            provider.embed(["text"])

    @pytest.mark.parametrize("text", [
        "d1 1,0\n",
        "d1\t1,zero\n",
        "d1\t1,0\nd2\t1,0,0\n",
        "d1\t1,0\nd1\t0,1\n",
    ])
    def test_malformed_files(self, tmp_path, text):
        with pytest.raises(EmbeddingFileError):
            SidecarEmbeddingProvider.from_file(self.write(tmp_path, text))
