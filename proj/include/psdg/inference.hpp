#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "psdg/grammar.hpp"
#include "psdg/state.hpp"

namespace psdg {

/// Evidence that Q^time lies in `states`.
struct Observation {
  std::size_t time = 0;
  StateSet states;
};

/// Dense numbering of production states <a,b> (production, 1-based cursor).
class FrameCatalog {
 public:
  FrameCatalog() = default;
  explicit FrameCatalog(const Psdg& g);

  std::size_t size() const { return production_.size(); }
  std::size_t index(ProductionId production, std::size_t cursor) const {
    return offset_[production] + cursor - 1;
  }
  ProductionId production(std::size_t index) const { return production_[index]; }
  std::size_t cursor(std::size_t index) const { return cursor_[index]; }

 private:
  std::vector<std::size_t> offset_;
  std::vector<ProductionId> production_;
  std::vector<std::size_t> cursor_;
};

/// Marginals of the plan variables at one time step.
struct PlanDistribution {
  std::size_t time = 0;
  std::vector<std::vector<double>> symbols;  // [level-1][nonterminal ordinal]: Pr(N_l = X)
  std::vector<std::vector<double>> frames;   // [level-1][frame index]: Pr(P_l = <a,b>)
  std::vector<double> terminals;             // [terminal ordinal]: Pr(Sigma = x)
  double completed = 0.0;                    // root terminated before `time`
};

struct StepReport {
  std::size_t time = 0;    // index of the observed state Q^time
  double evidence = 1.0;   // Pr(Q^time in R^time | earlier evidence)
  double log_evidence = 0.0;  // cumulative over the stream
  bool reinitialized = false;
  StateSet support;                    // R^time
  std::vector<double> state_posterior; // over `support`
  std::optional<PlanDistribution> explanation;  // stack at `time` (absent for time 0)
  PlanDistribution prediction;                  // stack at time+1
};

using StackId = std::uint32_t;

/// Interned root-to-leaf expansion stacks reachable in a grammar, with their
/// deterministic successor structure. Id 0 is the absorbing "completed" stack.
class StackCatalog {
 public:
  static constexpr StackId kCompleted = 0;

  struct FrameKey {
    ProductionId production;
    std::uint32_t cursor;
    friend bool operator==(const FrameKey&, const FrameKey&) = default;
  };

  struct Successor {
    StackId next;
    int path;  // fresh expansion path multiplying the weight, -1 for none
  };

  struct Stack {
    std::vector<FrameKey> frames;  // frames[k] at level k+1
    SymbolId leaf = 0;
    std::vector<bool> terminates;  // per level
    bool successors_ready = false;
    std::vector<Successor> successors;  // empty with root_terminates
    bool root_terminates = false;
  };

  /// A fresh top-down expansion: productions chosen at consecutive levels.
  struct Path {
    SymbolId symbol;
    std::vector<ProductionId> productions;
  };

  explicit StackCatalog(const Psdg& g);

  const Stack& stack(StackId id) const { return stacks_[id]; }
  std::size_t size() const { return stacks_.size(); }
  const Path& path(int id) const { return paths_[static_cast<std::size_t>(id)]; }
  std::size_t path_count() const { return paths_.size(); }
  std::span<const int> paths_of(SymbolId symbol) const;

  /// Stacks at time 1: one per fresh path of the start symbol.
  std::vector<Successor> initial();
  const std::vector<Successor>& successors(StackId id);

  /// Sum over stored stacks of their frame count.
  std::size_t stored_frames() const;

 private:
  StackId intern(std::vector<FrameKey> frames);

  const Psdg& g_;
  std::deque<Stack> stacks_;  // stable references while interning
  struct KeyHash {
    std::size_t operator()(const std::vector<FrameKey>& frames) const;
  };
  std::unordered_map<std::vector<FrameKey>, StackId, KeyHash> index_;
  std::vector<Path> paths_;
  std::vector<std::vector<int>> paths_by_symbol_;  // by nonterminal ordinal
};

/// Belief for stack time t, conditioned on evidence through Q^{t-1}. Holds the
/// exact joint Pr(stack_t = s, Q^{t-1} = q | E^{t-1}) over q in the support,
/// and the per-level tables derived from it:
///   B_Q(q)         = Pr(Q^{t-1} = q | E^{t-1})
///   B_N(l, X, q)   = Pr(N_l^t = X | E^{t-1}, Q^{t-1} = q)
///   B_P(l, ab, q)  = Pr(P_l^t = <a,b> | E^{t-1}, Q^{t-1} = q)
///   B_S(x, q)      = Pr(Sigma^t = x | E^{t-1}, Q^{t-1} = q)
///   B_T(l, q)      = Pr(T_l^t | E^{t-1}, Q^{t-1} = q)
///   B_TN(l, X, q)  = Pr(T_l^t | E^{t-1}, Q^{t-1} = q, N_l^t = X)
/// plus the completed-plan mass per q. Conditional rows of states with zero
/// weight are all zero.
class BeliefState {
 public:
  std::size_t time() const { return time_; }
  const StateSet& support() const { return support_; }
  std::size_t support_size() const { return support_size_; }
  std::size_t depth() const { return depth_; }

  std::span<const double> state_weights() const { return state_; }
  double symbol(std::size_t level, std::size_t nonterminal, std::size_t q) const {
    return symbols_[((level - 1) * n_nonterminals_ + nonterminal) * support_size_ + q];
  }
  double frame(std::size_t level, std::size_t frame_index, std::size_t q) const {
    return frames_[((level - 1) * n_frames_ + frame_index) * support_size_ + q];
  }
  double terminal(std::size_t terminal_ordinal, std::size_t q) const {
    return terminals_[terminal_ordinal * support_size_ + q];
  }
  double completed(std::size_t q) const { return completed_[q]; }
  double terminates(std::size_t level, std::size_t q) const {
    return terminates_[(level - 1) * support_size_ + q];
  }
  double terminates_given_symbol(std::size_t level, std::size_t nonterminal, std::size_t q) const {
    return terminates_given_symbol_[((level - 1) * n_nonterminals_ + nonterminal) * support_size_ + q];
  }

  /// Joint rows: stack ids and their weight vectors over the support.
  std::span<const StackId> rows() const { return rows_; }
  std::span<const double> row(std::size_t i) const {
    return {joint_.data() + i * support_size_, support_size_};
  }

  struct Size {
    std::size_t joint = 0;   // stored (stack, q) weights
    std::size_t tables = 0;  // per-level table entries
    std::size_t total() const { return joint + tables; }
  };
  Size entry_count() const;

  /// Empty when every normalization invariant holds within `tolerance`.
  std::vector<std::string> check_invariants(double tolerance = 1e-9) const;

 private:
  friend class Recognizer;

  std::size_t time_ = 1;
  StateSet support_;
  std::vector<StatePoint> states_;
  std::size_t support_size_ = 0;
  std::size_t depth_ = 0;
  std::size_t n_nonterminals_ = 0;
  std::size_t n_frames_ = 0;
  std::size_t n_terminals_ = 0;

  std::vector<StackId> rows_;
  std::vector<double> joint_;

  std::vector<double> state_;
  std::vector<double> symbols_;
  std::vector<double> frames_;
  std::vector<double> terminals_;
  std::vector<double> completed_;
  std::vector<double> terminates_;
  std::vector<double> terminates_given_symbol_;
};

/// Result of conditioning the belief on the next observed state.
struct Explanation {
  std::size_t time = 0;  // stack time explained; the observation is on Q^time
  StateSet observed;
  double evidence = 0.0;
  std::vector<double> state_posterior;  // Pr(Q^time = q' | E^time) over `observed`
  std::vector<double> row_mass;         // per belief row: Pr(stack_time = s | E^time)
  std::vector<double> pushed;           // per belief row, over `observed`: unnormalized
                                        // Pr(stack_time = s, Q^time = q' | E^{time-1})
  PlanDistribution plans;
};

/// Unnormalized joint for the next stack time, before table construction.
struct Prediction {
  std::size_t time = 0;  // predicted stack time
  std::vector<StackId> rows;
  std::vector<double> joint;  // rows x |observed|, normalized to Pr(s, Q^{time-1}=q | E^{time-1})
  PlanDistribution plans;
};

struct InferenceOptions {
  std::uint64_t support_bound = 4096;
  /// Test hook: added to one predicted joint entry to corrupt the update.
  double debug_perturbation = 0.0;
};

/// Exact online recognizer for one observation stream.
class Recognizer {
 public:
  explicit Recognizer(const Psdg& g, InferenceOptions options = {});

  const Psdg& grammar() const { return g_; }
  const FrameCatalog& frame_catalog() const { return frames_; }
  const StackCatalog& stack_catalog() const { return *stacks_; }

  /// Belief for stack time 1. With `initial`, Q^0 is restricted to it and
  /// `evidence_out` (if given) receives pi0(initial). `start_time` other than 1
  /// restarts a plan from the prior at a later time (zero-evidence recovery).
  BeliefState init_belief(const std::optional<StateSet>& initial = std::nullopt,
                          double* evidence_out = nullptr, std::size_t start_time = 1);

  /// Plan marginals of the stack the belief is about.
  PlanDistribution prediction_of(const BeliefState& belief) const;

  Explanation explain(const BeliefState& belief, const StateSet& observed);
  Prediction predict(const BeliefState& belief, const Explanation& explanation);
  BeliefState update(const BeliefState& belief, const Explanation& explanation,
                     Prediction prediction);

  struct StepResult {
    StepReport report;
    BeliefState belief;
  };
  StepResult step(const BeliefState& belief, const StateSet& observed);

  /// Pr(Q^t = next | Q^{t-1} = prev, N_l^t = X, E^{t-1}), with prev and next
  /// given as positions in the belief support and in `next_set`.
  double symbol_transition(const BeliefState& belief, std::size_t level, SymbolId symbol,
                           std::size_t prev, const StateSet& next_set, std::size_t next) const;

  /// Pr(P_l = <a,b> | N_l = X, E, Q = q) read off the belief tables.
  double conditional_production_given_symbol(const BeliefState& belief, std::size_t level,
                                             std::size_t frame_index, SymbolId symbol,
                                             std::size_t q) const;

  std::size_t support_limit() const { return options_.support_bound; }

 private:
  PlanDistribution marginals(std::size_t time, std::span<const StackId> rows,
                             std::span<const double> mass) const;
  void build_tables(BeliefState& belief) const;
  BeliefState empty_belief(std::size_t time, const StateSet& support) const;
  void check_support(const StateSet& set) const;

  const Psdg& g_;
  InferenceOptions options_;
  FrameCatalog frames_;
  std::unique_ptr<StackCatalog> stacks_;
};

enum class ZeroEvidencePolicy { Error, Reinit };

/// Streaming driver: enforces increasing observation times, fills missing
/// steps with unconstrained observations and applies the zero-evidence policy.
class OnlineRecognizer {
 public:
  OnlineRecognizer(const Psdg& g, InferenceOptions options = {},
                   ZeroEvidencePolicy policy = ZeroEvidencePolicy::Error);

  StepReport observe(const Observation& observation);
  const BeliefState& belief();
  double log_evidence() const { return log_evidence_; }

 private:
  void ensure_started();

  Recognizer recognizer_;
  ZeroEvidencePolicy policy_;
  std::optional<BeliefState> belief_;
  std::optional<std::size_t> last_time_;
  double log_evidence_ = 0.0;
};

}  // namespace psdg
