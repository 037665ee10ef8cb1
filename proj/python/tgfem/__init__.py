from ._tgfem import (
    InputError,
    Mesh,
    NumericalError,
    compliance,
    generate_grid,
    load_gmsh,
    local_stiffness,
    reduce_matrix,
    scatter_add_oracle,
    set_thread_count,
    solve_poisson,
    topopt_cantilever,
    write_gmsh,
)

__all__ = [
    "InputError",
    "Mesh",
    "NumericalError",
    "compliance",
    "generate_grid",
    "load_gmsh",
    "local_stiffness",
    "reduce_matrix",
    "scatter_add_oracle",
    "set_thread_count",
    "solve_poisson",
    "topopt_cantilever",
    "write_gmsh",
]
