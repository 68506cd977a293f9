"""Self-adjoint extensions of the Laplacian parametrized by boundary unitaries."""

from .boundary_unitary import (
    BoundaryMesh,
    BoundaryUnitary,
    GapReport,
    PartialCayley,
    admissibility_norm,
    decompose,
    gap_report,
    partial_cayley,
)
from .errors import LapextError
from .form_assembly import Spectrum, assemble, extension_consistency, solve, verify_lower_bound
from .gallery import Triangulation, block_unitary, preset_unitary
from .isotropy import BoundaryPair, IsotropicSubspace, recover_unitary, subspace_from_unitary
from .mesh import Mesh

__all__ = [
    "BoundaryMesh",
    "BoundaryPair",
    "BoundaryUnitary",
    "GapReport",
    "IsotropicSubspace",
    "LapextError",
    "Mesh",
    "PartialCayley",
    "Spectrum",
    "Triangulation",
    "admissibility_norm",
    "assemble",
    "block_unitary",
    "decompose",
    "extension_consistency",
    "gap_report",
    "partial_cayley",
    "preset_unitary",
    "recover_unitary",
    "solve",
    "subspace_from_unitary",
    "verify_lower_bound",
]
