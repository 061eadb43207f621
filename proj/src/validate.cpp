#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "psdg/error.hpp"
#include "psdg/grammar_io.hpp"

namespace psdg {

class Validator {
 public:
  Validator(const GrammarDefinition& def, const ValidateOptions& options)
      : def_(def), options_(options) {}

  Psdg run() {
    build_features();
    build_symbols();
    build_productions();
    check_levels();
    compile_cpts();
    check_normalization();
    if (!diagnostics_.empty()) throw ValidationError(std::move(diagnostics_));
    return std::move(g_);
  }

 private:
  void report(DiagnosticKind kind, std::string message, SourceLocation where = {}) {
    diagnostics_.push_back({kind, std::move(message), where.line, where.column});
  }

  static bool valid_distribution(const std::vector<double>& p) {
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0) || v > 1.0) return false;
      sum += v;
    }
    return std::abs(sum - 1.0) <= kDistributionTolerance;
  }

  void build_features() {
    std::set<std::string> seen;
    std::vector<std::size_t> radices;
    for (const auto& raw : def_.features) {
      if (!seen.insert(raw.name).second) {
        report(DiagnosticKind::DuplicateDefinition, "feature '" + raw.name + "' declared twice",
               raw.where);
      }
      Feature f;
      f.name = raw.name;
      f.values = raw.values;
      std::set<std::string> labels(raw.values.begin(), raw.values.end());
      if (raw.values.empty()) {
        report(DiagnosticKind::BadDistribution, "feature '" + raw.name + "' has no values", raw.where);
        f.values.push_back("_");
      } else if (labels.size() != raw.values.size()) {
        report(DiagnosticKind::DuplicateDefinition,
               "feature '" + raw.name + "' repeats a value label", raw.where);
      }
      if (raw.prior.empty()) {
        f.prior.assign(f.values.size(), 1.0 / static_cast<double>(f.values.size()));
      } else if (raw.prior.size() != f.values.size()) {
        report(DiagnosticKind::BadDistribution,
               "prior of feature '" + raw.name + "' has " + std::to_string(raw.prior.size()) +
                   " entries for " + std::to_string(f.values.size()) + " values",
               raw.where);
        f.prior.assign(f.values.size(), 1.0 / static_cast<double>(f.values.size()));
      } else {
        if (!valid_distribution(raw.prior)) {
          report(DiagnosticKind::BadDistribution,
                 "prior of feature '" + raw.name + "' is not a probability distribution", raw.where);
        }
        f.prior = raw.prior;
      }
      radices.push_back(f.values.size());
      g_.features_.push_back(std::move(f));
    }
    for (std::size_t i = 0; i < def_.features.size(); ++i) {
      for (const auto& parent : def_.features[i].parents) {
        auto idx = g_.find_feature(parent);
        if (!idx) {
          report(DiagnosticKind::UndeclaredSymbol,
                 "feature '" + def_.features[i].name + "' lists undeclared parent '" + parent + "'",
                 def_.features[i].where);
          continue;
        }
        g_.features_[i].parents.push_back(*idx);
      }
    }
    g_.space_ = StateSpace(std::move(radices));
  }

  SymbolId add_symbol(const std::string& name, bool terminal) {
    const auto id = static_cast<SymbolId>(g_.symbols_.size());
    Symbol s;
    s.name = name;
    s.terminal = terminal;
    if (terminal) {
      s.ordinal = g_.terminals_.size();
      g_.terminals_.push_back(id);
    } else {
      s.ordinal = g_.nonterminals_.size();
      g_.nonterminals_.push_back(id);
    }
    g_.symbols_.push_back(std::move(s));
    g_.symbol_index_.emplace(name, id);
    return id;
  }

  void build_symbols() {
    for (const auto& p : def_.productions) {
      if (!g_.symbol_index_.contains(p.lhs)) add_symbol(p.lhs, false);
    }
    std::set<std::string> declared;
    if (def_.declared_terminals) {
      for (const auto& name : *def_.declared_terminals) {
        if (g_.symbol_index_.contains(name)) {
          const auto id = g_.symbol_index_.at(name);
          if (!g_.symbols_[id].terminal) {
            report(DiagnosticKind::DuplicateDefinition,
                   "'" + name + "' is declared a terminal but appears as a left-hand side",
                   def_.terminals_where);
          }
          continue;
        }
        declared.insert(name);
        add_symbol(name, true);
      }
    }
    for (const auto& p : def_.productions) {
      for (std::size_t i = 0; i < p.rhs.size(); ++i) {
        const auto& name = p.rhs[i];
        if (g_.symbol_index_.contains(name)) continue;
        if (def_.declared_terminals) {
          report(DiagnosticKind::UndeclaredSymbol, "symbol '" + name + "' is not declared",
                 p.rhs_where[i]);
        }
        add_symbol(name, true);
      }
    }
    g_.by_lhs_.resize(g_.nonterminals_.size());

    auto start = g_.find_symbol(def_.start);
    if (!start) {
      report(DiagnosticKind::UndeclaredSymbol, "start symbol '" + def_.start + "' has no productions",
             def_.start_where);
    } else if (g_.symbols_[*start].terminal) {
      report(DiagnosticKind::UndeclaredSymbol,
             "start symbol '" + def_.start + "' is a terminal, not a nonterminal", def_.start_where);
    } else {
      g_.start_ = *start;
    }
  }

  std::optional<ValueConstraint> resolve_guard(const RawGuardTerm& term) {
    auto f = g_.find_feature(term.feature);
    if (!f) {
      report(DiagnosticKind::UndeclaredSymbol, "guard references undeclared feature '" + term.feature + "'",
             term.where);
      return std::nullopt;
    }
    ValueConstraint c;
    c.feature = *f;
    c.allowed.assign(g_.features_[*f].values.size(), false);
    for (const auto& value : term.values) {
      auto v = g_.find_value(*f, value);
      if (!v) {
        report(DiagnosticKind::UndeclaredSymbol,
               "feature '" + term.feature + "' has no value '" + value + "'", term.where);
        return std::nullopt;
      }
      c.allowed[*v] = true;
    }
    return c;
  }

  void build_productions() {
    std::map<long, SourceLocation> labels;
    for (const auto& raw : def_.productions) {
      if (auto [it, fresh] = labels.emplace(raw.label, raw.where); !fresh) {
        report(DiagnosticKind::DuplicateDefinition,
               "production index " + std::to_string(raw.label) + " is used twice", raw.where);
      }
      Production p;
      p.id = static_cast<ProductionId>(g_.productions_.size());
      p.label = raw.label;
      p.lhs = g_.symbol_index_.at(raw.lhs);
      for (const auto& name : raw.rhs) p.rhs.push_back(g_.symbol_index_.at(name));
      if (p.rhs.empty()) {
        report(DiagnosticKind::EmptyRhs,
               "production " + std::to_string(raw.label) + " (" + raw.lhs + ") has an empty right-hand side",
               raw.where);
      }
      bool self_inside = false;
      for (std::size_t i = 0; i + 1 < p.rhs.size(); ++i) self_inside |= p.rhs[i] == p.lhs;
      if (self_inside) {
        report(DiagnosticKind::NonTailRecursion,
               "production " + std::to_string(raw.label) + ": " + raw.lhs +
                   " recurses before its final right-hand symbol",
               raw.where);
      }
      if (!p.rhs.empty() && p.rhs.back() == p.lhs) {
        if (p.rhs.size() == 1) {
          report(DiagnosticKind::NonTailRecursion,
                 "production " + std::to_string(raw.label) + ": " + raw.lhs + " -> " + raw.lhs +
                     " re-enters itself without emitting anything",
                 raw.where);
        }
        p.tail_recursive = true;
      }

      std::vector<GuardRule> rules;
      bool guards_ok = true;
      for (const auto& raw_rule : raw.probability.rules) {
        GuardRule rule;
        rule.value = raw_rule.value;
        if (!(raw_rule.value >= 0.0 && raw_rule.value <= 1.0)) {
          report(DiagnosticKind::BadDistribution,
                 "rule value " + std::to_string(raw_rule.value) + " lies outside [0,1]", raw_rule.where);
        }
        for (const auto& term : raw_rule.guard) {
          auto c = resolve_guard(term);
          if (!c) {
            guards_ok = false;
            continue;
          }
          rule.guard.push_back(std::move(*c));
        }
        rules.push_back(std::move(rule));
      }
      double fallback = raw.probability.present ? 0.0 : 1.0;
      if (raw.probability.default_value) {
        fallback = *raw.probability.default_value;
        if (!(fallback >= 0.0 && fallback <= 1.0)) {
          report(DiagnosticKind::BadDistribution,
                 "default value " + std::to_string(fallback) + " lies outside [0,1]", raw.where);
        }
      }
      if (!guards_ok) broken_lhs_.insert(p.lhs);
      p.probability = ProbabilityFunction(std::move(rules), fallback);
      g_.max_length_ = std::max(g_.max_length_, p.rhs.size());
      g_.by_lhs_[g_.symbols_[p.lhs].ordinal].push_back(p.id);
      g_.productions_.push_back(std::move(p));
    }
  }

  // Children occupy level l+1, except a trailing lhs child which stays at l.
  std::vector<std::vector<std::size_t>> level_edges() const {
    const auto n = g_.nonterminals_.size();
    std::vector<std::vector<std::size_t>> edges(n);
    for (const auto& p : g_.productions_) {
      const auto from = g_.symbols_[p.lhs].ordinal;
      for (std::size_t i = 0; i < p.rhs.size(); ++i) {
        const auto s = p.rhs[i];
        if (g_.symbols_[s].terminal) continue;
        if (p.tail_recursive && i + 1 == p.rhs.size()) continue;
        edges[from].push_back(g_.symbols_[s].ordinal);
      }
    }
    for (auto& e : edges) {
      std::sort(e.begin(), e.end());
      e.erase(std::unique(e.begin(), e.end()), e.end());
    }
    return edges;
  }

  void check_levels() {
    const auto edges = level_edges();
    const auto n = edges.size();
    enum Color { White, Grey, Black };
    std::vector<Color> color(n, White);
    std::vector<std::size_t> path;
    std::set<std::vector<std::size_t>> reported;
    bool cyclic = false;

    auto dfs = [&](auto&& self, std::size_t u) -> void {
      color[u] = Grey;
      path.push_back(u);
      for (auto v : edges[u]) {
        if (color[v] == Grey) {
          cyclic = true;
          auto it = std::find(path.begin(), path.end(), v);
          std::vector<std::size_t> cycle(it, path.end());
          auto key = cycle;
          std::sort(key.begin(), key.end());
          if (u == v && reported_self_.contains(g_.nonterminals_[u])) continue;
          if (!reported.insert(key).second) continue;
          std::string names;
          for (auto c : cycle) names += g_.symbols_[g_.nonterminals_[c]].name + " -> ";
          names += g_.symbols_[g_.nonterminals_[v]].name;
          report(DiagnosticKind::NonTailRecursion,
                 "recursion outside trailing self position: " + names);
        } else if (color[v] == White) {
          self(self, v);
        }
      }
      path.pop_back();
      color[u] = Black;
    };
    for (const auto& p : g_.productions_) {
      for (std::size_t i = 0; i + 1 < p.rhs.size(); ++i) {
        if (p.rhs[i] == p.lhs) reported_self_.insert(p.lhs);
      }
    }
    for (std::size_t u = 0; u < n; ++u) {
      if (color[u] == White) dfs(dfs, u);
    }
    if (cyclic || g_.nonterminals_.empty()) return;

    // Longest level reachable from the start symbol.
    std::vector<std::size_t> depth(n, 0);
    auto longest = [&](auto&& self, std::size_t u) -> std::size_t {
      if (depth[u]) return depth[u];
      std::size_t best = 1;
      for (auto v : edges[u]) best = std::max(best, 1 + self(self, v));
      return depth[u] = best;
    };
    if (!g_.symbols_[g_.start_].terminal) {
      g_.max_depth_ = longest(longest, g_.symbols_[g_.start_].ordinal);
    }
  }

  void compile_cpts() {
    const auto n_terminals = g_.terminals_.size();
    for (std::size_t i = 0; i < def_.features.size(); ++i) {
      const auto& raw = def_.features[i];
      auto& f = g_.features_[i];
      const auto width = f.values.size();
      if (raw.cpt.empty()) {
        if (!raw.parents.empty()) {
          report(DiagnosticKind::BadDistribution,
                 "feature '" + f.name + "' declares parents but no cpt rows", raw.where);
        }
        // Persistent: the feature is its own sole parent with identity rows.
        f.persistent = true;
        f.parents = {i};
        f.parent_strides = {1};
        f.table.assign(width * n_terminals * width, 0.0);
        for (std::size_t v = 0; v < width; ++v) {
          for (std::size_t x = 0; x < n_terminals; ++x) f.table[(v * n_terminals + x) * width + v] = 1.0;
        }
        continue;
      }
      if (f.parents.size() != raw.parents.size()) continue;  // undeclared parent already reported

      std::size_t configs = 1;
      f.parent_strides.assign(f.parents.size(), 0);
      for (std::size_t k = f.parents.size(); k-- > 0;) {
        f.parent_strides[k] = configs;
        configs *= g_.features_[f.parents[k]].values.size();
      }
      if (configs * n_terminals > options_.enumeration_bound) {
        report(DiagnosticKind::BadDistribution,
               "cpt of feature '" + f.name + "' has too many parent configurations", raw.where);
        continue;
      }

      struct Row {
        std::vector<int> parent_values;  // -1 = wildcard
        int terminal = -1;               // terminal ordinal, -1 = wildcard
        const std::vector<double>* distribution = nullptr;
      };
      std::vector<Row> rows;
      bool ok = true;
      for (const auto& r : raw.cpt) {
        Row row;
        if (r.parent_values.size() != f.parents.size()) {
          report(DiagnosticKind::BadDistribution,
                 "cpt row of '" + f.name + "' gives " + std::to_string(r.parent_values.size()) +
                     " parent values for " + std::to_string(f.parents.size()) + " parents",
                 r.where);
          ok = false;
          continue;
        }
        for (std::size_t k = 0; k < f.parents.size(); ++k) {
          if (r.parent_values[k] == "*") {
            row.parent_values.push_back(-1);
            continue;
          }
          auto v = g_.find_value(f.parents[k], r.parent_values[k]);
          if (!v) {
            report(DiagnosticKind::UndeclaredSymbol,
                   "parent '" + g_.features_[f.parents[k]].name + "' has no value '" +
                       r.parent_values[k] + "'",
                   r.where);
            ok = false;
            continue;
          }
          row.parent_values.push_back(*v);
        }
        if (r.terminal != "*") {
          auto s = g_.find_symbol(r.terminal);
          if (!s || !g_.symbols_[*s].terminal) {
            report(DiagnosticKind::UndeclaredSymbol, "cpt row names unknown terminal '" + r.terminal + "'",
                   r.where);
            ok = false;
            continue;
          }
          row.terminal = static_cast<int>(g_.symbols_[*s].ordinal);
        }
        if (r.distribution.size() != width || !valid_distribution(r.distribution)) {
          report(DiagnosticKind::BadDistribution,
                 "cpt row of '" + f.name + "' is not a distribution over its " + std::to_string(width) +
                     " values",
                 r.where);
          ok = false;
          continue;
        }
        row.distribution = &r.distribution;
        rows.push_back(std::move(row));
      }
      if (!ok) continue;

      f.table.assign(configs * n_terminals * width, 0.0);
      std::vector<int> values(f.parents.size());
      for (std::size_t config = 0; config < configs; ++config) {
        for (std::size_t k = 0; k < f.parents.size(); ++k) {
          values[k] = static_cast<int>((config / f.parent_strides[k]) %
                                       g_.features_[f.parents[k]].values.size());
        }
        for (std::size_t x = 0; x < n_terminals; ++x) {
          const Row* match = nullptr;
          for (const auto& row : rows) {
            bool holds = row.terminal < 0 || row.terminal == static_cast<int>(x);
            for (std::size_t k = 0; holds && k < values.size(); ++k) {
              holds = row.parent_values[k] < 0 || row.parent_values[k] == values[k];
            }
            if (holds) {
              match = &row;
              break;
            }
          }
          if (!match) {
            std::string where;
            for (std::size_t k = 0; k < values.size(); ++k) {
              where += g_.features_[f.parents[k]].name + "=" +
                       g_.features_[f.parents[k]].values[values[k]] + " ";
            }
            report(DiagnosticKind::BadDistribution,
                   "cpt of '" + f.name + "' has no row for " + where + "terminal " +
                       g_.symbols_[g_.terminals_[x]].name,
                   raw.where);
            ok = false;
            break;
          }
          std::copy(match->distribution->begin(), match->distribution->end(),
                    f.table.begin() + static_cast<std::ptrdiff_t>((config * n_terminals + x) * width));
        }
        if (!ok) break;
      }
    }
  }

  void check_normalization() {
    for (auto lhs : g_.nonterminals_) {
      if (broken_lhs_.contains(lhs)) continue;
      const auto ids = g_.productions_of(lhs);
      std::vector<std::size_t> scope;
      for (auto id : ids) {
        auto s = g_.productions_[id].probability.scope();
        scope.insert(scope.end(), s.begin(), s.end());
      }
      std::sort(scope.begin(), scope.end());
      scope.erase(std::unique(scope.begin(), scope.end()), scope.end());

      std::uint64_t count = 1;
      for (auto f : scope) count *= g_.features_[f].values.size();
      if (count > options_.enumeration_bound) {
        report(DiagnosticKind::NormalizationViolation,
               "cannot check normalization of '" + g_.symbols_[lhs].name + "': " +
                   std::to_string(count) + " guard-relevant states exceed the enumeration bound");
        continue;
      }
      StatePoint q;
      q.values.assign(g_.features_.size(), 0);
      for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t rest = i;
        for (std::size_t k = scope.size(); k-- > 0;) {
          const auto f = scope[k];
          q.values[f] = static_cast<FeatureValue>(rest % g_.features_[f].values.size());
          rest /= g_.features_[f].values.size();
        }
        double sum = 0.0;
        for (auto id : ids) sum += g_.productions_[id].probability(q);
        if (std::abs(sum - 1.0) > kNormalizationTolerance) {
          std::string witness;
          for (std::size_t f = 0; f < g_.features_.size(); ++f) {
            if (f) witness += ",";
            witness += g_.features_[f].name + "=" + g_.features_[f].values[q.values[f]];
          }
          std::ostringstream msg;
          msg << "productions of '" << g_.symbols_[lhs].name << "' sum to " << sum << " in state "
              << witness;
          if (scope.size() < g_.features_.size()) msg << " (and whatever the unguarded features are)";
          report(DiagnosticKind::NormalizationViolation, msg.str());
          break;
        }
      }
    }
  }

  const GrammarDefinition& def_;
  const ValidateOptions& options_;
  Psdg g_;
  std::vector<Diagnostic> diagnostics_;
  std::set<SymbolId> broken_lhs_;
  std::set<SymbolId> reported_self_;
};

Psdg validate(const GrammarDefinition& definition, const ValidateOptions& options) {
  return Validator(definition, options).run();
}

}  // namespace psdg
