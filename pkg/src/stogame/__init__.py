"""stogame: solve, decompose and synthesize strategy automata for finite
multiplayer stochastic games."""

from .automata import (
    JointAutomaton,
    JointAutomatonProfile,
    build_product_model,
    discounted_value,
    limit_value,
    stationary_automaton,
)
from .builder import (
    Classification,
    ExitPlan,
    assemble_profile,
    build_correlated_stationary,
    build_type_a_automaton,
    build_type_b_automaton,
    classify_set,
    companion_action,
    exit_options,
    first_exit_distribution,
    solve_eta,
    type_b_feasibility,
)
from .frequencies import (
    FrequencyVector,
    RecurrentPoint,
    SustainPlan,
    enumerate_recurrent_points,
    payoff_of_frequency,
    stationary_frequency,
    type_a_feasibility,
)
from .game import (
    GameFormatError,
    StationaryCorrelated,
    StationaryProfile,
    StochasticGame,
    discounted_payoff_stationary,
    extend_payoff,
    extend_transition,
    load_game,
    pure_profile,
    save_game,
    validate_game,
)
from .generators import acceptance_suite, bundled_game, sorin_game
from .minmax import (
    MinMaxReport,
    default_schedule,
    discounted_minmax,
    shapley_operator,
    solve_uniform_minmax,
    uniform_minmax,
)
from .matrixgame import solve_matrix_game
from .oneshot import (
    AuxiliaryGame,
    EquilibriumSet,
    build_auxiliary_game,
    check_value_inequality,
    continuation_values,
    enumerate_all_states,
    enumerate_equilibria,
)
from .pipeline import PipelineResult, run_pipeline
from .simulate import simulate
from .structure import (
    CommunicatingSet,
    Decomposition,
    TravelStrategy,
    decompose,
    irreducible_sets,
    leads_in_set,
    maximal_communicating_sets,
    minimal_closed_sets_under_E,
    transient_profile,
    travel_strategy,
)
from .verify import (
    AcceptabilityReport,
    automaton_size_audit,
    check_average_limit_acceptable,
    check_individual_rationality,
    check_minmax_acceptable,
    check_submartingale,
    check_w_acceptable,
    exact_discounted_payoff_automaton,
)

__version__ = "0.1.0"
