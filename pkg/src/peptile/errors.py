class PeptileError(Exception):
    """Base class for all errors raised by peptile."""


class EmptyInput(PeptileError):
    pass


class MalformedFasta(PeptileError):
    pass


class InvalidResidue(PeptileError, ValueError):
    def __init__(self, position, letter=None):
        self.position = position
        self.letter = letter
        msg = f"non-canonical residue at position {position}"
        if letter is not None:
            msg += f": {letter!r}"
        super().__init__(msg)


class PeptideTooShort(PeptileError, ValueError):
    pass


class EmptyPool(PeptileError):
    pass


class SinglePeptideExceedsCap(PeptileError):
    def __init__(self, peptide_id, sequence=None, cost=None):
        self.peptide_id = peptide_id
        self.sequence = sequence
        self.cost = cost
        msg = f"peptide {peptide_id}"
        if sequence is not None:
            msg += f" ({sequence})"
        msg += " alone exceeds the state cap"
        if cost is not None:
            msg += f" (cost {cost})"
        super().__init__(msg)


class PoolTooLarge(PeptileError):
    pass


class MismatchedPools(PeptileError):
    pass


class PlanFormatError(PeptileError):
    pass
