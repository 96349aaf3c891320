from .torus import (Coord, Square, TorusGeometry, adjacent_blocks, block_index, canonical_seed_cluster,
                    distance_histogram, torus_distance)
