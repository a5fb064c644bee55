"""Loop-erased walk determinant identities on lattices and their continuum limits."""
from .lattice import (LatticePath, RowWeights, Vertex, build_cylinder, build_grid, build_strip,
                      build_up_right, graph_from_spec, preset)
from .loop_erasure import affine_condition, fomin_condition, loop_erase
from .hitting import (affine_determinant, cyclic_route_sum, fomin_determinant,
                      hitting_probability_matrix, twisted_hitting_matrix, windowed_strip_matrix)
from .montecarlo import (McConfig, estimate_affine_and_cylinder, estimate_affine_lhs,
                         estimate_fomin_lhs, z_report)

__all__ = [
    "LatticePath", "RowWeights", "Vertex", "build_cylinder", "build_grid", "build_strip",
    "build_up_right", "graph_from_spec", "preset", "affine_condition", "fomin_condition",
    "loop_erase", "affine_determinant", "cyclic_route_sum", "fomin_determinant",
    "hitting_probability_matrix", "twisted_hitting_matrix", "windowed_strip_matrix", "McConfig",
    "estimate_affine_and_cylinder", "estimate_affine_lhs", "estimate_fomin_lhs", "z_report",
]
