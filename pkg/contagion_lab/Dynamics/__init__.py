from .contagion_engine import (NEVER, ContagionTrace, detect_new_seed_cluster, rounds_lower_envelope, rounds_to_full,
                               run_contagion)
from .infection_dag import (InfectionDag, build_dag, check_either_or, check_path_time_consistency, long_tie_count,
                            long_tie_threshold, short_closure, validate_dag)
