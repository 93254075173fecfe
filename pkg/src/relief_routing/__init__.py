"""Exact solvers and online-policy simulation for truck-and-drone relief routing."""

from .adversarial import (AdversarialInstance, FamilyConditionError, FAMILIES,
                          make_lemma_instance, tight_ratio_family)
from .generators import (GeneratorConfig, Xoshiro256StarStar, build_dataset,
                         dataset_manifest, gen_center, gen_coastal,
                         gen_mountain, gen_random, generate_graph, mix_seed,
                         sample_damage)
from .graphs import (DEPOT, DisconnectedGraphError, GraphError, InstanceError,
                     MetricClosure, RdpInstance, Tour, WeightedGraph,
                     instance_from_dict, instance_to_dict, load_instance,
                     make_star, make_two_level_star, metric_closure,
                     save_instance, tour_time)
from .harness import (BoundReport, RatioRecord, SummaryRow, aggregate,
                      evaluate, quartiles, records_from_csv, records_to_csv,
                      summaries_to_csv, summarize, verify_bounds)
from .policies import (POLICIES, PolicyError, SimulationOutcome, check_feasible,
                       policy_efha, policy_efhs, policy_optimistic,
                       policy_regretless, policy_truck_only, simulate,
                       split_tour)
from .solver import (HeldKarpTable, InfeasibleError, MultiTspSolution,
                     SolverCapError, SolverContext, brute_force_multi_tsp,
                     held_karp, multi_tsp, open_path_tsp, rdp_star_opt,
                     solver_context)

__version__ = "0.1.0"
