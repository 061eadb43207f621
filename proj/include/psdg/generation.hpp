#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "psdg/grammar.hpp"

namespace psdg {

/// One active expansion: production `production` of `symbol`, currently on
/// right-hand-side position `cursor` (1-based).
struct Frame {
  std::size_t level = 1;
  SymbolId symbol = 0;
  ProductionId production = 0;
  std::size_t cursor = 1;

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Root-to-leaf path of active plans at one time step. `frames[k]` sits at
/// level k+1; the leaf is the terminal under the last frame's cursor.
struct ExpansionStack {
  std::vector<Frame> frames;
  SymbolId leaf = 0;

  friend bool operator==(const ExpansionStack&, const ExpansionStack&) = default;
};

struct TrajectoryStep {
  ExpansionStack stack;  // N^t, P^t and the emitted terminal
  StatePoint state;      // Q^t, sampled after the terminal
  friend bool operator==(const TrajectoryStep&, const TrajectoryStep&) = default;
};

struct Trajectory {
  StatePoint initial;  // Q^0
  std::vector<TrajectoryStep> steps;
  bool completed = false;  // the root expansion terminated at the last step
  std::uint64_t seed = 0;

  friend bool operator==(const Trajectory& a, const Trajectory& b) {
    return a.initial == b.initial && a.steps == b.steps && a.completed == b.completed;
  }
};

/// Source of every random draw. Draw order is fixed: productions top-down and
/// left to right, state features in declaration order.
class Sampler {
 public:
  /// The seed goes through std::seed_seq so that nearby seeds (the CLI uses
  /// seed, seed+1, ...) give unrelated streams.
  explicit Sampler(std::uint64_t seed);

  /// Production labels used, in order, for the next fresh expansions instead
  /// of sampling. A forced production must have positive probability.
  void force_productions(std::vector<ProductionId> ids) { forced_.assign(ids.begin(), ids.end()); }

  ProductionId choose_production(const Psdg& g, SymbolId lhs, const StatePoint& state);
  FeatureValue draw_value(std::span<const double> distribution);
  StatePoint draw_prior(const Psdg& g);
  StatePoint draw_transition(const Psdg& g, const StatePoint& prev, SymbolId terminal);

 private:
  double uniform();

  std::mt19937_64 rng_;
  std::deque<ProductionId> forced_;
};

/// True iff the frame at `level` terminates at this step: its cursor is on the
/// last right-hand symbol and that symbol is the terminal leaf or a child
/// expansion that itself terminates.
bool expansion_terminates(const Psdg& g, const ExpansionStack& stack, std::size_t level);

/// Deepest level whose expansion does not terminate; 0 when the root does.
std::size_t deepest_open_level(const Psdg& g, const ExpansionStack& stack);

/// Expands `symbol` at `level` top-down, sampling productions under `state`,
/// until a terminal leaf is reached. Appends the new frames to `stack`.
void expand_fresh(const Psdg& g, SymbolId symbol, std::size_t level, const StatePoint& state,
                  Sampler& sampler, ExpansionStack& stack);

/// Stack for the next time step. `state` is the state the next expansions are
/// chosen under. Requires that the root has not terminated.
ExpansionStack advance_stack(const Psdg& g, const ExpansionStack& stack, const StatePoint& state,
                             Sampler& sampler);

struct SampleOptions {
  std::size_t horizon = 1;
  std::uint64_t seed = 0;
  std::vector<ProductionId> forced_productions;
  std::optional<StatePoint> initial_state;  // fixes Q^0 instead of drawing it
};

Trajectory sample_trajectory(const Psdg& g, const SampleOptions& options);

/// Log joint probability of the trajectory's parse-tree prefix and state
/// sequence, -inf when some factor is zero. Throws InvalidTrajectory when
/// the stacks do not follow the expansion rules.
double trajectory_probability(const Psdg& g, const Trajectory& trajectory);

}  // namespace psdg
