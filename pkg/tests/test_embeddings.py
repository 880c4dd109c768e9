import numpy as np
import pytest

from dispat.embeddings import (EmbeddingProviderConfig, HashedNgramEmbedder, PrecomputedEmbeddings,
                               load_precomputed, make_provider, write_precomputed)
from dispat.errors import (ConfigError, DegenerateVectorWarning, FormatError,
                           MissingEmbeddingError)


def test_deterministic_and_unit_token_vectors():
    a, b = HashedNgramEmbedder(64, seed=5), HashedNgramEmbedder(64, seed=5)
    assert np.array_equal(a.embed("a red cup"), b.embed("a red cup"))
    assert np.linalg.norm(a.token_vector("cup")) == pytest.approx(1.0, abs=1e-12)
    assert not np.array_equal(a.token_vector("cup"), HashedNgramEmbedder(64, 6).token_vector("cup"))


def test_fixed_hash_vector_is_stable():
    # pinned so that any change to the hash or RNG recipe is caught
    v = HashedNgramEmbedder(8, seed=0).token_vector("cup")
    assert v.round(6).tolist() == pytest.approx(GOLDEN_CUP, abs=1e-6)


def test_doubling_text_is_exact():
    e = HashedNgramEmbedder(64)
    text = "the cup of claim 1 wherein the handle is curved"
    assert np.array_equal(e.embed(text), e.embed(text + " " + text))


def test_mean_of_token_vectors():
    e = HashedNgramEmbedder(16)
    want = (2 * e.token_vector("cup") + e.token_vector("red")) / 3
    assert np.allclose(e.embed("cup red cup"), want, atol=1e-15)


def test_unrelated_texts_nearly_orthogonal():
    e = HashedNgramEmbedder(64, seed=1)
    rng = np.random.default_rng(0)
    cos = []
    for p in range(100):
        a = " ".join(f"a{p}w{i}" for i in rng.permutation(100))
        b = " ".join(f"b{p}w{i}" for i in rng.permutation(100))
        va, vb = e.embed(a), e.embed(b)
        cos.append(abs(va @ vb / np.linalg.norm(va) / np.linalg.norm(vb)))
    assert max(cos) < 0.3


def test_empty_claim_zero_and_flagged():
    with pytest.warns(DegenerateVectorWarning):
        assert not HashedNgramEmbedder(8).embed("  ,. ").any()


def test_token_cap():
    e = HashedNgramEmbedder(8, max_tokens=2)
    assert np.array_equal(e.embed("a b c d"), e.embed("a b"))


def test_precomputed_round_trip_and_errors(tmp_path):
    vecs = {"P1#1": np.arange(4, dtype=np.float32), "P1#2": -np.ones(4, dtype=np.float32)}
    path = tmp_path / "v.cemb"
    write_precomputed(path, vecs, 4)
    got = load_precomputed(path)
    assert all(np.array_equal(got[k], v) for k, v in vecs.items())
    write_precomputed(tmp_path / "w.cemb", got, 4)
    assert (tmp_path / "w.cemb").read_bytes() == path.read_bytes()
    prov = make_provider(EmbeddingProviderConfig("precomputed_file", 4, path=str(path)))
    assert prov.embed_claim("P1", 1, "ignored").tolist() == [0, 1, 2, 3]
    with pytest.raises(MissingEmbeddingError):
        prov.embed_claim("P9", 1)
    with pytest.raises(ConfigError):
        load_precomputed(path, dim=768)
    (tmp_path / "bad").write_bytes(b"XXXX")
    with pytest.raises(FormatError):
        load_precomputed(tmp_path / "bad")


def test_single_vector_served_verbatim(tmp_path):
    write_precomputed(tmp_path / "one", {"X#1": np.array([0.5, 0.25], np.float32)}, 2)
    assert PrecomputedEmbeddings.from_file(tmp_path / "one").embed_claim("X", 1).tolist() == [0.5, 0.25]


def test_config_validation():
    with pytest.raises(ConfigError):
        EmbeddingProviderConfig(dim=0)
    with pytest.raises(ConfigError):
        EmbeddingProviderConfig(kind="bert")


GOLDEN_CUP = [-0.121297, -0.152669, -0.11961, -0.492525, 0.286746, -0.370077, 0.623785, 0.311134]
