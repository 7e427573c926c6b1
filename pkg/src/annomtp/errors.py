"""Exception hierarchy shared across the package.

Every public function raises one of these (or a stdlib error for plain
programming mistakes).  Callers that need robustness should catch
``ComputationError`` for numeric degeneracies and ``DataError`` for
ingestion problems.
"""

from __future__ import annotations


class AnnomtpError(Exception):
    """Base class for all package errors."""


# ---------------------------------------------------------------------------
# numeric / statistical degeneracies
# ---------------------------------------------------------------------------


class ComputationError(AnnomtpError):
    """A statistic is undefined for the given inputs."""


class LengthMismatch(ComputationError):
    """Paired vectors or matrices do not conform in length/shape."""


class ZeroVariance(ComputationError):
    """A correlation input is constant."""


class DegenerateMargin(ComputationError):
    """A 2x2 contingency table has an empty row or column."""


class GroupTooSmall(ComputationError):
    """A two-group statistic has fewer than 2 members in one group."""


class ZeroDenominator(ComputationError):
    """A standardized statistic has a zero scale estimate."""


class NoUsableStratum(ComputationError):
    """No parent-pattern stratum contains both annotation states."""


class ZeroStandardError(ComputationError):
    """A t-statistic was requested with a zero standard error."""


class OutOfRangeP(ComputationError):
    """A p-value lies outside [0, 1]."""


class DegenerateReplicate(ComputationError):
    """A resampled dataset stayed degenerate past the redraw cap."""


# ---------------------------------------------------------------------------
# graph / annotation errors
# ---------------------------------------------------------------------------


class DagError(AnnomtpError):
    """Base for ontology-graph errors."""


class CycleDetected(DagError):
    """The input graph contains a directed cycle.

    ``cycle`` holds one witnessing vertex sequence, first == last.
    """

    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(self.cycle))


class UnknownTerm(DagError):
    """A term id is absent from the ontology graph."""


class UnmappedProbe(AnnomtpError):
    """A probe row has no entry in the probe-to-gene map."""


class EmptyUniverse(AnnomtpError):
    """An annotation matrix was requested over an empty gene universe."""


# ---------------------------------------------------------------------------
# pipeline / harness errors
# ---------------------------------------------------------------------------


class AlignmentError(AnnomtpError):
    """Gene universes of paired inputs do not match."""


class TermSetMismatch(AnnomtpError):
    """Reports being compared cover different term sets."""


class ConfigError(AnnomtpError):
    """Contradictory or invalid configuration."""


class DataError(AnnomtpError):
    """Malformed input file; message carries the file and line number."""


class EmptyResultWarning(UserWarning):
    """A filter left no genes; downstream steps will see an empty set."""
