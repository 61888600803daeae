"""Local fractions of multipartite correlation tables and certificates of full nonlocality."""

from .boxes import mermin_box, pr_box, svetlichny_box, tsirelson_box
from .certifier import Certificate, certify_graph, certify_smolin, theorem1_certify, theorem2_certify
from .epr2 import (DecompositionResult, bipartition_local_fraction, check_dual_certificate, cut_scan,
                   local_fraction, svetlichny_decomposition)
from .errors import CapExceeded, InputError, NonlocError, SignalingError, ZeroProbabilityError
from .polytopes import VertexSet, hybrid_vertices, local_deterministic_vertices, ns_polytope_vertices
from .scenario import Behavior, Bipartition, Scenario, bipartitions, condition, marginal, validate

__version__ = "0.1.0"

__all__ = [
    "Behavior", "Bipartition", "CapExceeded", "Certificate", "DecompositionResult", "InputError", "NonlocError",
    "Scenario", "SignalingError", "VertexSet", "ZeroProbabilityError", "bipartition_local_fraction", "bipartitions",
    "certify_graph", "certify_smolin", "check_dual_certificate", "condition", "cut_scan", "hybrid_vertices",
    "local_deterministic_vertices", "local_fraction", "marginal", "mermin_box", "ns_polytope_vertices", "pr_box",
    "svetlichny_box", "svetlichny_decomposition", "theorem1_certify", "theorem2_certify", "tsirelson_box", "validate",
]
