"""Seeded random peptides and texts for tests, benchmarks and ``verify --random``."""
import numpy as np

from .ingest import ALPHABET, build_pool


def random_sequence(rng, length, alphabet=ALPHABET):
    letters = np.frombuffer(alphabet.encode("ascii"), dtype=np.uint8)
    return letters[rng.integers(0, len(alphabet), size=length)].tobytes().decode("ascii")


def random_pool(rng, n, min_len=2, max_len=12, alphabet=ALPHABET, max_tries=100):
    """Up to ``n`` distinct random peptides (fewer if the alphabet runs dry)."""
    seqs = []
    seen = set()
    tries = 0
    while len(seqs) < n and tries < n * max_tries:
        tries += 1
        s = random_sequence(rng, int(rng.integers(min_len, max_len + 1)), alphabet)
        if s not in seen:
            seen.add(s)
            seqs.append(s)
    return build_pool(seqs)


def random_text(rng, length, peptides=(), plant_rate=0.0, alphabet=ALPHABET):
    """Random residues with peptides copied in at roughly ``plant_rate`` per residue."""
    text = bytearray(random_sequence(rng, length, alphabet).encode("ascii"))
    seqs = [p.sequence if hasattr(p, "sequence") else p for p in peptides]
    if seqs and length and plant_rate > 0:
        for _ in range(int(rng.poisson(plant_rate * length))):
            s = seqs[int(rng.integers(len(seqs)))]
            if len(s) > length:
                continue
            at = int(rng.integers(0, length - len(s) + 1))
            text[at:at + len(s)] = s.encode("ascii")
    return text.decode("ascii")
