"""False-discovery-controlled model selection over graded model posets."""

from .core import (
    AxiomReport,
    CoveringPair,
    DiscoveryReport,
    FamilyMismatchError,
    GradedPoset,
    MinimalCoveringSet,
    NoJoinError,
    PathCertificate,
    PathError,
    SizeCapError,
    discovery_report,
    meet_valuation_bruteforce,
    telescoping_decompose,
    verify_valuation_axioms,
)
from . import families
from .families import (
    BooleanPoset,
    ChangepointPoset,
    CpdagPoset,
    PartialRankingPoset,
    PartitionPoset,
    RestrictedCpdagPoset,
    ReversePartitionPoset,
    TotalRankingPoset,
)

__version__ = "0.1.0"
