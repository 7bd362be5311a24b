"""Box-Delaunay graphs and Hasse diagrams of random point sets."""

from .graphs import (
    Graph,
    build_boxdel,
    build_boxdel_bruteforce,
    build_boxdel_fast2d,
    build_boxdel_grid2d,
    build_boxdel_sweep,
    build_hasse,
    build_path1d,
    is_edge_boxdel,
    is_edge_hasse,
    orientation_union,
    orientation_union_check,
    orientations,
)
from .points import (
    DyadicIndex,
    OpenRect,
    PointSet,
    boxes_of_weight,
    dominates,
    dyadic_box,
    dyadic_index,
    open_rect,
    read_points,
    rect_contains,
    rect_volume,
    sample_poissonised,
    sample_uniform,
    write_points,
)
from .seeding import derive_seed
from .stats import (
    EdgeClassPolicy,
    caro_wei_bound,
    classify_edges,
    degree_stats,
    dsatur_coloring,
    greedy_coloring,
    independent_set,
    max_clique_upto,
    neighborhood_edge_count,
    triangles_per_vertex,
)

__version__ = "0.1.0"
