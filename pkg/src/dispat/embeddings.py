"""Content-embedding providers for claim text.

``hashed_ngram`` averages one pseudo-random unit vector per token. The vector
for a token is drawn from ``numpy.random.default_rng(s)`` where ``s`` is the
little-endian integer of the 8-byte BLAKE2b digest of
``f"{seed}\\x00{token}"``, so vectors are identical on every platform.

``precomputed_file`` serves vectors produced offline (for example averaged
BERT token embeddings) from a CEMB file::

    b"CEMB" | u8 version | u32 dim | u32 count
    count x ( u32 key_len | key utf-8 | dim x f32 )      little-endian

Keys are ``"<patent id>#<1-based claim index>"``.
"""
import hashlib
import struct
import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateVectorWarning, FormatError, MissingEmbeddingError
from .retrieval import tokenize

CEMB_MAGIC = b"CEMB"
CEMB_VERSION = 1


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    kind: str = "hashed_ngram"
    dim: int = 64
    seed: int = 0
    path: str = None
    max_tokens: int = 512

    def __post_init__(self):
        if self.dim <= 0:
            raise ConfigError("embedding dim must be positive")
        if self.kind not in ("hashed_ngram", "precomputed_file"):
            raise ConfigError(f"unknown embedding kind {self.kind!r}")
        if self.kind == "precomputed_file" and not self.path:
            raise ConfigError("precomputed_file needs a path")


def claim_key(patent_id, claim_index):
    return f"{patent_id}#{claim_index}"


class HashedNgramEmbedder:
    def __init__(self, dim, seed=0, max_tokens=512):
        self.dim, self.seed, self.max_tokens = dim, seed, max_tokens
        self._cache = {}

    def token_vector(self, token):
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(f"{self.seed}\x00{token}".encode("utf-8"), digest_size=8).digest()
            v = np.random.default_rng(int.from_bytes(digest, "little")).standard_normal(self.dim)
            vec = self._cache[token] = v / np.linalg.norm(v)
        return vec

    def embed(self, text):
        tokens = tokenize(text)[:self.max_tokens]
        if not tokens:
            warnings.warn("empty claim text embeds to the zero vector",
                          DegenerateVectorWarning, stacklevel=2)
            return np.zeros(self.dim)
        # summing count * vector per distinct token makes the mean exactly
        # invariant to repeating the text
        total = np.zeros(self.dim)
        for tok, count in Counter(tokens).items():
            total += count * self.token_vector(tok)
        return total / len(tokens)

    def embed_claim(self, patent_id, claim_index, text):
        return self.embed(text)


class PrecomputedEmbeddings:
    def __init__(self, vectors, dim):
        self.vectors, self.dim = vectors, dim

    @classmethod
    def from_file(cls, path, dim=None):
        vectors = load_precomputed(path, dim)
        file_dim = next(iter(vectors.values())).shape[0] if vectors else dim
        return cls(vectors, file_dim)

    def embed_claim(self, patent_id, claim_index, text=None):
        key = claim_key(patent_id, claim_index)
        try:
            return self.vectors[key].astype(np.float64)
        except KeyError:
            raise MissingEmbeddingError(key) from None


def write_precomputed(path, vectors, dim):
    with open(path, "wb") as fh:
        fh.write(CEMB_MAGIC + struct.pack("<BII", CEMB_VERSION, dim, len(vectors)))
        for key in sorted(vectors):
            v = np.asarray(vectors[key], dtype="<f4")
            if v.shape != (dim,):
                raise ConfigError(f"vector {key!r} has shape {v.shape}, expected ({dim},)")
            raw = key.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)) + raw + v.tobytes())


def load_precomputed(path, dim=None):
    """Read a CEMB file into ``{key: float32 vector}``; checks ``dim`` if given."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CEMB_MAGIC:
        raise FormatError("not a CEMB file")
    version, file_dim, count = struct.unpack_from("<BII", data, 4)
    if version != CEMB_VERSION:
        raise FormatError(f"unsupported CEMB version {version}")
    if dim is not None and file_dim != dim:
        raise ConfigError(f"embedding file has dim {file_dim}, config expects {dim}")
    pos, out = 13, {}
    for _ in range(count):
        (n,) = struct.unpack_from("<I", data, pos)
        key = data[pos + 4:pos + 4 + n].decode("utf-8")
        pos += 4 + n
        out[key] = np.frombuffer(data, dtype="<f4", count=file_dim, offset=pos).copy()
        pos += 4 * file_dim
    if pos != len(data):
        raise FormatError("CEMB file has trailing or missing bytes")
    return out


def make_provider(config):
    if config.kind == "hashed_ngram":
        return HashedNgramEmbedder(config.dim, config.seed, config.max_tokens)
    return PrecomputedEmbeddings.from_file(config.path, config.dim)
