#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "psdg/state.hpp"

namespace psdg {

using SymbolId = std::uint32_t;
using ProductionId = std::uint32_t;

inline constexpr double kNormalizationTolerance = 1e-9;
inline constexpr double kDistributionTolerance = 1e-12;

/// A guard conjunct: feature value must lie in `allowed` (mask over domain).
struct ValueConstraint {
  std::size_t feature = 0;
  std::vector<bool> allowed;
};

struct GuardRule {
  std::vector<ValueConstraint> guard;
  double value = 0.0;
};

/// Ordered guard-rule table with a default. The first rule whose guard holds
/// gives the value; otherwise the default applies.
class ProbabilityFunction {
 public:
  ProbabilityFunction() = default;
  ProbabilityFunction(std::vector<GuardRule> rules, double default_value);

  static ProbabilityFunction constant(double value) { return ProbabilityFunction({}, value); }

  double operator()(std::span<const FeatureValue> state) const;
  double operator()(const StatePoint& state) const { return (*this)(state.values); }

  const std::vector<GuardRule>& rules() const { return rules_; }
  double default_value() const { return default_; }

  /// Sorted, deduplicated features that any guard mentions.
  std::vector<std::size_t> scope() const;

 private:
  std::vector<GuardRule> rules_;
  double default_ = 1.0;
};

/// Per-feature state dynamics and prior. The terminal emitted in the interval
/// is an implicit extra parent of every CPT.
struct Feature {
  std::string name;
  std::vector<std::string> values;
  std::vector<double> prior;
  std::vector<std::size_t> parents;  // previous-slice features
  bool persistent = false;           // no CPT given: value carries over unchanged

  // Dense CPT indexed by (parent configuration, terminal ordinal), each entry a
  // distribution over `values`. Filled in by validation.
  std::vector<double> table;
  std::vector<std::size_t> parent_strides;
};

struct Production {
  ProductionId id = 0;     // dense position in Psdg::productions()
  long label = 0;          // index as written in the grammar file
  SymbolId lhs = 0;
  std::vector<SymbolId> rhs;
  ProbabilityFunction probability;
  bool tail_recursive = false;  // rhs ends in lhs; that child re-enters lhs's level

  std::size_t length() const { return rhs.size(); }
};

struct Symbol {
  std::string name;
  bool terminal = false;
  std::size_t ordinal = 0;  // index among terminals or among nonterminals
};

class Validator;

/// A validated probabilistic state-dependent grammar. Immutable once built;
/// safe to share between threads.
class Psdg {
 public:
  const std::vector<Symbol>& symbols() const { return symbols_; }
  const Symbol& symbol(SymbolId id) const { return symbols_[id]; }
  const std::string& name(SymbolId id) const { return symbols_[id].name; }
  bool is_terminal(SymbolId id) const { return symbols_[id].terminal; }
  std::optional<SymbolId> find_symbol(std::string_view name) const;

  const std::vector<SymbolId>& terminals() const { return terminals_; }
  const std::vector<SymbolId>& nonterminals() const { return nonterminals_; }
  SymbolId start() const { return start_; }

  const std::vector<Feature>& features() const { return features_; }
  std::optional<std::size_t> find_feature(std::string_view name) const;
  std::optional<FeatureValue> find_value(std::size_t feature, std::string_view value) const;
  const StateSpace& state_space() const { return space_; }

  const std::vector<Production>& productions() const { return productions_; }
  const Production& production(ProductionId id) const { return productions_[id]; }
  std::span<const ProductionId> productions_of(SymbolId lhs) const;
  std::optional<ProductionId> find_production_label(long label) const;

  /// Largest level any expansion frame can occupy (root is level 1).
  std::size_t max_depth() const { return max_depth_; }
  /// Longest right-hand side.
  std::size_t max_length() const { return max_length_; }

  double production_probability(ProductionId id, const StatePoint& state) const {
    return productions_[id].probability(state);
  }
  double transition_probability(const StatePoint& prev, SymbolId terminal,
                                const StatePoint& next) const;
  double prior_probability(const StatePoint& state) const;

  /// Distribution over feature f's next value given the previous state and the
  /// emitted terminal.
  std::span<const double> feature_transition(std::size_t feature, std::span<const FeatureValue> prev,
                                             SymbolId terminal) const;

  std::string state_label(const StatePoint& state) const;
  std::string frame_label(ProductionId production, std::size_t cursor) const;

 private:
  friend class Validator;

  std::vector<Symbol> symbols_;
  std::unordered_map<std::string, SymbolId> symbol_index_;
  std::vector<SymbolId> terminals_;
  std::vector<SymbolId> nonterminals_;
  SymbolId start_ = 0;
  std::vector<Feature> features_;
  StateSpace space_;
  std::vector<Production> productions_;
  std::vector<std::vector<ProductionId>> by_lhs_;  // indexed by nonterminal ordinal
  std::size_t max_depth_ = 0;
  std::size_t max_length_ = 0;
};

}  // namespace psdg
