"""Protein/peptide input: FASTA and peptide-list parsing, tryptic digestion,
5-bit residue encoding.
"""
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import EmptyInput, InvalidResidue, MalformedFasta, PeptideTooShort

ALPHABET = "ACDEFGHIKLMNPQRSTVWY"
CODE_BITS = 5


class AminoAcid(NamedTuple):
    letter: str
    code: int


AMINO_ACIDS = tuple(AminoAcid(letter, code) for code, letter in enumerate(ALPHABET))
_CODE = {aa.letter: aa.code for aa in AMINO_ACIDS}

# byte -> code lookup, 255 marks anything non-canonical
_LUT = np.full(256, 255, dtype=np.uint8)
for _aa in AMINO_ACIDS:
    _LUT[ord(_aa.letter)] = _aa.code


def encode_residue(letter):
    try:
        return _CODE[letter]
    except KeyError:
        raise InvalidResidue(0, letter) from None


def decode_residue(code):
    return ALPHABET[code]


def encode(sequence, offset=0):
    """Residue string -> int64 code array.

    Raises InvalidResidue with the 0-based position (plus ``offset``) of the
    first letter outside the 20 canonical residues.
    """
    raw = np.frombuffer(sequence.encode("latin-1", errors="replace"), dtype=np.uint8)
    codes = _LUT[raw]
    bad = np.flatnonzero(codes == 255)
    if bad.size:
        pos = int(bad[0])
        raise InvalidResidue(pos + offset, sequence[pos])
    return codes.astype(np.int64)


def decode(codes):
    return "".join(ALPHABET[c] for c in codes)


@dataclass(frozen=True)
class Peptide:
    id: int
    sequence: str

    def __post_init__(self):
        encode(self.sequence)

    @property
    def codes(self):
        return encode(self.sequence)

    def __len__(self):
        return len(self.sequence)


@dataclass(frozen=True)
class ProteinRecord:
    header: str
    sequence: str


@dataclass(frozen=True)
class DigestConfig:
    missed_cleavages: int = 0
    min_len: int = 2
    max_len: Optional[int] = None

    def __post_init__(self):
        if self.missed_cleavages < 0:
            raise ValueError("missed_cleavages must be >= 0")
        if self.min_len < 2:
            raise ValueError("min_len must be >= 2")
        if self.max_len is not None and self.max_len < self.min_len:
            raise ValueError("min_len must not exceed max_len")


@dataclass(frozen=True)
class PeptidePool:
    """Deduplicated peptides with dense ids 0..n-1."""

    peptides: tuple = ()

    def __post_init__(self):
        for i, p in enumerate(self.peptides):
            if p.id != i:
                raise ValueError(f"pool ids must be dense: position {i} has id {p.id}")
            if len(p.sequence) < 2:
                raise PeptideTooShort(f"peptide {i} ({p.sequence!r}) is shorter than a dipeptide")

    def __len__(self):
        return len(self.peptides)

    def __iter__(self):
        return iter(self.peptides)

    def __getitem__(self, i):
        return self.peptides[i]

    @property
    def sequences(self):
        return [p.sequence for p in self.peptides]


@dataclass(frozen=True)
class BitStreams:
    streams: tuple

    def reassemble(self):
        """Column-wise recombination back to residue codes."""
        if not self.streams or not self.streams[0]:
            return []
        n = len(self.streams[0])
        return [
            sum(int(self.streams[j][i]) << (CODE_BITS - 1 - j) for j in range(CODE_BITS))
            for i in range(n)
        ]


def parse_fasta(text):
    if not text or not text.strip():
        raise EmptyInput("FASTA input is empty")
    records = []
    header = None
    chunks = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith(">"):
            if header is not None:
                records.append(ProteinRecord(header, "".join(chunks)))
            header = line[1:].strip()
            chunks = []
        elif header is None:
            raise MalformedFasta(f"line {lineno}: sequence data before the first '>' header")
        else:
            chunks.append("".join(line.split()).upper())
    if header is not None:
        records.append(ProteinRecord(header, "".join(chunks)))
    if not records:
        raise EmptyInput("FASTA input has no records")
    for rec in records:
        if not rec.sequence:
            raise MalformedFasta(f"record {rec.header!r} has an empty sequence")
    return records


def parse_peptide_list(text):
    """One peptide per line; '#' starts a comment line; blank lines skipped."""
    seqs = []
    for line in text.splitlines():
        line = line.rstrip()
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        seqs.append(line.strip().upper())
    return seqs


def read_sequences(text):
    """FASTA records or a plain peptide list, whichever ``text`` is."""
    stripped = text.lstrip()
    if stripped.startswith(">"):
        return [r.sequence for r in parse_fasta(text)]
    return parse_peptide_list(text)


def tryptic_fragments(sequence):
    """Cut after K or R unless the next residue is P."""
    frags = []
    start = 0
    n = len(sequence)
    for i, ch in enumerate(sequence):
        if ch in "KR" and i + 1 < n and sequence[i + 1] != "P":
            frags.append(sequence[start:i + 1])
            start = i + 1
    if start < n:
        frags.append(sequence[start:])
    return frags


def digest(protein, cfg=DigestConfig()):
    seq = protein.sequence if isinstance(protein, ProteinRecord) else protein
    encode(seq)
    frags = tryptic_fragments(seq)
    out = []
    for span in range(1, cfg.missed_cleavages + 2):
        for i in range(len(frags) - span + 1):
            out.append("".join(frags[i:i + span]))
    hi = cfg.max_len if cfg.max_len is not None else float("inf")
    out = [s for s in out if cfg.min_len <= len(s) <= hi]
    return [Peptide(i, s) for i, s in enumerate(out)]


def build_pool(peptides):
    seen = set()
    kept = []
    for p in peptides:
        seq = p.sequence if isinstance(p, Peptide) else p
        if seq in seen:
            continue
        seen.add(seq)
        kept.append(Peptide(len(kept), seq))
    return PeptidePool(tuple(kept))


def bit_split_strings(peptide):
    """Five binary strings, stream j holding bit j (0 = MSB) of every residue."""
    seq = peptide.sequence if isinstance(peptide, Peptide) else peptide
    codes = encode(seq)
    return BitStreams(tuple(
        "".join("1" if (c >> (CODE_BITS - 1 - j)) & 1 else "0" for c in codes)
        for j in range(CODE_BITS)
    ))
