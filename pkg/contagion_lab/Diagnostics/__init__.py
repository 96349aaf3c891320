from .censuses import (BlockCensus, HeavySubsetWitness, WideBridgeCensus, heavy_connected_subset_search,
                       long_tie_block_census, wide_bridge_census)
from .recursive_spreading import SpreadingEstimate, recursive_spreading_trial, subsquare_side
