#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "psdg/generation.hpp"
#include "psdg/grammar.hpp"
#include "psdg/inference.hpp"

namespace psdg {

/// Every positive-probability execution of length <= horizon with its
/// probability. Trajectories that complete early keep their exact probability
/// and are frozen afterwards. Storage is compact: stacks are interned and each
/// entry is a run of (stack id, state index) pairs.
class JointTable {
 public:
  std::size_t horizon() const { return horizon_; }
  std::size_t size() const { return probability_.size(); }
  double probability(std::size_t entry) const { return probability_[entry]; }
  double total_mass() const;

  /// Number of recorded steps (< horizon only for completed trajectories).
  std::size_t length(std::size_t entry) const { return length_[entry]; }
  bool completed(std::size_t entry) const { return completed_[entry] != 0; }
  StateIndex initial(std::size_t entry) const { return data_[offset_[entry]]; }
  /// 1 <= t <= length(entry)
  const ExpansionStack& stack(std::size_t entry, std::size_t t) const {
    return stacks_[data_[offset_[entry] + 2 * t - 1]];
  }
  /// Q^t for 0 <= t, frozen after completion; t must not exceed the horizon
  /// for trajectories that did not complete.
  StateIndex state(std::size_t entry, std::size_t t) const;
  StatePoint state_point(std::size_t entry, std::size_t t) const {
    return space_.decode(state(entry, t));
  }
  /// T_level^t; 1 <= t <= length(entry)
  bool terminates(std::size_t entry, std::size_t t, std::size_t level) const;

  Trajectory trajectory(std::size_t entry) const;

 private:
  friend class JointBuilder;

  std::size_t horizon_ = 0;
  StateSpace space_;
  std::vector<ExpansionStack> stacks_;
  std::vector<std::vector<bool>> terminates_;  // per interned stack and level
  std::vector<std::uint32_t> data_;  // q0, then (stack, state) per step
  std::vector<std::size_t> offset_;
  std::vector<std::uint32_t> length_;
  std::vector<std::uint8_t> completed_;
  std::vector<double> probability_;
};

inline constexpr std::uint64_t kDefaultEntryBound = 10'000'000;

/// Full joint distribution up to `horizon`. Throws ExplosionBound when more
/// than `entry_bound` entries would be produced.
JointTable enumerate_joint(const Psdg& g, std::size_t horizon,
                           std::uint64_t entry_bound = kDefaultEntryBound);

/// The entries of enumerate_joint consistent with `evidence` (branches that
/// contradict an observation are cut during the search). Total mass equals
/// Pr(evidence).
JointTable enumerate_consistent(const Psdg& g, std::size_t horizon,
                                std::span<const Observation> evidence,
                                std::uint64_t entry_bound = kDefaultEntryBound);

/// Event over one joint entry.
struct Query {
  std::function<bool(const JointTable&, std::size_t)> holds;
};

namespace query {
/// N_level^t = symbol (false after completion)
Query symbol(std::size_t t, std::size_t level, SymbolId symbol);
/// P_level^t = <production, cursor>
Query frame(std::size_t t, std::size_t level, ProductionId production, std::size_t cursor);
/// Sigma^t = terminal
Query terminal(std::size_t t, SymbolId terminal);
/// Q^t in states
Query state(std::size_t t, StateSet states);
/// T_level^t
Query terminates(std::size_t t, std::size_t level);
/// The root terminated at some step before t.
Query completed_before(std::size_t t);
Query all(std::vector<Query> parts);
}  // namespace query

/// Pr(query | evidence) by filtering and renormalizing. Throws ZeroEvidenceMass
/// when no entry is consistent with the evidence.
double exact_posterior(const JointTable& joint, std::span<const Observation> evidence,
                       const Query& q);

/// Reports the recognizer should produce for each observation of the stream,
/// computed by enumeration. Missing time steps are unconstrained. Throws
/// ZeroEvidenceMass when the stream has probability zero.
std::vector<StepReport> reference_reports(const Psdg& g, std::span<const Observation> stream,
                                          std::uint64_t entry_bound = kDefaultEntryBound);

/// Largest absolute differences between two reports of the same step.
struct Deviation {
  double evidence = 0.0;
  double log_evidence = 0.0;  // relative: |exp(a - b) - 1|
  double state = 0.0;
  double explanation = 0.0;
  double prediction = 0.0;
  double max() const;
};

Deviation compare_reports(const StepReport& actual, const StepReport& expected);

}  // namespace psdg
