#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psdg/grammar.hpp"

namespace psdg {

struct SourceLocation {
  std::size_t line = 0;
  std::size_t column = 0;
};

// Unvalidated grammar exactly as written. Names are unresolved strings.

struct RawGuardTerm {
  std::string feature;
  std::vector<std::string> values;
  SourceLocation where;
};

struct RawRule {
  std::vector<RawGuardTerm> guard;
  double value = 0.0;
  SourceLocation where;
};

struct RawProbability {
  std::vector<RawRule> rules;
  std::optional<double> default_value;
  bool present = false;  // a `{ ... }` block was written
};

struct RawCptRow {
  std::vector<std::string> parent_values;  // "*" matches any value
  std::string terminal;                    // "*" matches any terminal
  std::vector<double> distribution;
  SourceLocation where;
};

struct RawFeature {
  std::string name;
  std::vector<std::string> values;
  std::vector<double> prior;  // empty means uniform
  std::vector<std::string> parents;
  std::vector<RawCptRow> cpt;
  SourceLocation where;
};

struct RawProduction {
  long label = 0;
  std::string lhs;
  std::vector<std::string> rhs;
  std::vector<SourceLocation> rhs_where;
  RawProbability probability;
  SourceLocation where;
};

struct GrammarDefinition {
  std::vector<RawFeature> features;
  std::string start;
  SourceLocation start_where;
  std::optional<std::vector<std::string>> declared_terminals;
  SourceLocation terminals_where;
  std::vector<RawProduction> productions;
};

/// Parses the line-oriented grammar text. Throws ParseError with position.
GrammarDefinition parse_grammar(std::string_view text);

struct ValidateOptions {
  /// Cap on the number of guard-relevant states enumerated per nonterminal
  /// during the normalization check.
  std::uint64_t enumeration_bound = 1'000'000;
};

/// Resolves names, compiles CPTs and checks every structural and
/// normalization constraint. Throws ValidationError listing all violations.
Psdg validate(const GrammarDefinition& definition, const ValidateOptions& options = {});

/// parse_grammar + validate.
Psdg load_grammar(std::string_view text, const ValidateOptions& options = {});
Psdg load_grammar_file(const std::filesystem::path& path, const ValidateOptions& options = {});

}  // namespace psdg
