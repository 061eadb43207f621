#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "psdg/generation.hpp"
#include "psdg/grammar.hpp"

namespace psdg {

/// State-annotated context-free grammar equivalent to a PSDG. Nonterminals
/// are tuples <qi, X, qf> (X expanded from context state qi, leaving the state
/// at qf) and preterminals <q, x, q'> (terminal x moving the state q -> q');
/// plain terminals are the PSDG terminals. START rewrites to <q0, S, qf>.
class Pcfg {
 public:
  enum class Kind { Start, Tuple, Preterminal, Terminal };

  struct Symbol {
    Kind kind;
    std::string name;
    SymbolId base = 0;     // PSDG symbol (unused for Start)
    StateIndex from = 0;   // qi
    StateIndex to = 0;     // qf
  };

  struct Production {
    std::uint32_t lhs;
    std::vector<std::uint32_t> rhs;
    double probability;
  };

  const std::vector<Symbol>& symbols() const { return symbols_; }
  const std::vector<Production>& productions() const { return productions_; }
  std::uint32_t start() const { return 0; }

  /// Id of a tuple, preterminal or terminal symbol; npos when pruned.
  std::uint32_t find(Kind kind, SymbolId base, StateIndex from = 0, StateIndex to = 0) const;
  /// Index into productions() or npos.
  std::uint32_t find_production(std::uint32_t lhs, const std::vector<std::uint32_t>& rhs) const;

  std::size_t count(Kind kind) const;
  /// Productions whose lhs is a tuple symbol.
  std::size_t tuple_production_count() const;

  /// `lhs -> rhs # prob` lines with a header naming the state indices.
  std::string to_text(const Psdg& g) const;

  /// Hand construction. The first symbol added is the start symbol; adding
  /// an existing symbol returns its id and adding an existing rule adds to its
  /// probability.
  std::uint32_t add_symbol(Symbol s);
  std::uint32_t add_production(std::uint32_t lhs, std::vector<std::uint32_t> rhs, double probability);

  static constexpr std::uint32_t npos = static_cast<std::uint32_t>(-1);

 private:
  static std::string key(Kind kind, SymbolId base, StateIndex from, StateIndex to);

  std::vector<Symbol> symbols_;
  std::unordered_map<std::string, std::uint32_t> symbol_index_;
  std::vector<Production> productions_;
  std::unordered_map<std::string, std::uint32_t> production_index_;
};

/// Builds the equivalent PCFG with unreachable and zero-weight symbols pruned.
/// Throws ExplosionBound when more than `production_bound` productions would be
/// generated.
Pcfg to_pcfg(const Psdg& g, std::uint64_t production_bound = 10'000'000);

struct PcfgTree {
  std::uint32_t symbol;
  std::vector<PcfgTree> children;
};

/// Parse tree of a completed trajectory, labelled with PCFG symbols. Throws
/// InvalidTrajectory for incomplete or malformed trajectories and
/// UnknownProduction when a node's symbol was pruned from the PCFG.
PcfgTree trajectory_to_tree(const Psdg& g, const Pcfg& pcfg, const Trajectory& trajectory);

/// Sum of log production probabilities (-inf for a probability-0 production).
/// Throws UnknownProduction if the tree uses a rule the grammar lacks.
double pcfg_tree_probability(const Pcfg& pcfg, const PcfgTree& tree);

}  // namespace psdg
