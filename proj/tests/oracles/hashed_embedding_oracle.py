"""Independent re-derivation of the hashed bag-of-words sentence embedding.

Token vector: FNV-1a 64 of the UTF-8 token, xor (seed * golden-ratio constant),
used as the state of a splitmix64 stream; component k = u_k * 2 - 1 where u_k
is the top 53 bits of the k-th output scaled to [0, 1). Sentence vector: mean
of token vectors, L2-normalized. Cosine computed with numpy.
"""
import numpy as np

M64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def fnv1a(s):
    h = 0xCBF29CE484222325
    for b in s.encode("utf-8"):
        h ^= b
        h = (h * 0x100000001B3) & M64
    return h


def token_vector(tok, seed, dim):
    state = fnv1a(tok) ^ ((seed * GOLDEN) & M64)
    out = []
    for _ in range(dim):
        state = (state + GOLDEN) & M64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        z ^= z >> 31
        out.append((z >> 11) * 2.0 ** -53 * 2.0 - 1.0)
    return np.array(out)


def embed(sentence, seed, dim):
    toks = sentence.split()
    if not toks:
        return np.zeros(dim)
    v = sum(token_vector(t, seed, dim) for t in toks) / len(toks)
    return v / np.linalg.norm(v)


def cosine(a, b):
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


print("tokvec('records', 7, 4)", [f"{x:.17g}" for x in token_vector("records", 7, 4)])
for seed, dim, a, b in [(7, 512, "returns the user name", "records a music file"),
                        (42, 64, "open socket", "close file"),
                        (7, 512, "records a sound file", "records a music file")]:
    print(f"seed={seed} dim={dim} {a!r} vs {b!r}: {cosine(embed(a, seed, dim), embed(b, seed, dim)):.17g}")
