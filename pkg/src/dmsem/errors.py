"""Exception hierarchy shared across the package.

DataError covers malformed or missing inputs (exit code 2 in the CLI),
NumericError covers mathematically invalid values (exit code 3).
"""


class DmsemError(Exception):
    pass


class DataError(DmsemError):
    pass


class NumericError(DmsemError):
    pass


class DimensionMismatchError(NumericError):
    pass


class OOVError(DataError):
    """One or more lemmas are missing from the model store."""

    def __init__(self, lemmas):
        self.lemmas = sorted(set(lemmas))
        super().__init__("out-of-vocabulary lemmas: " + ", ".join(self.lemmas))


class DegenerateCompositionError(NumericError):
    """Composition produced a matrix with (numerically) zero trace.

    Happens when operator and argument have disjoint support under
    mult/fuzz/phaser; such pairs are excluded from evaluation and counted.
    """
