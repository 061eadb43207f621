#include "psdg/grammar.hpp"

#include <algorithm>
#include <sstream>

#include "psdg/error.hpp"

namespace psdg {

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

const char* to_string(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::UndeclaredSymbol: return "UndeclaredSymbol";
    case DiagnosticKind::NormalizationViolation: return "NormalizationViolation";
    case DiagnosticKind::NonTailRecursion: return "NonTailRecursion";
    case DiagnosticKind::EmptyRhs: return "EmptyRhs";
    case DiagnosticKind::BadDistribution: return "BadDistribution";
    case DiagnosticKind::DuplicateDefinition: return "DuplicateDefinition";
  }
  return "Unknown";
}

namespace {

std::string summarize(const std::vector<Diagnostic>& diagnostics) {
  std::ostringstream out;
  out << diagnostics.size() << " validation error" << (diagnostics.size() == 1 ? "" : "s");
  if (!diagnostics.empty()) out << "; first: " << to_string(diagnostics.front().kind) << ": "
                                << diagnostics.front().message;
  return out.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<Diagnostic> diagnostics)
    : Error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}

ProbabilityFunction::ProbabilityFunction(std::vector<GuardRule> rules, double default_value)
    : rules_(std::move(rules)), default_(default_value) {}

double ProbabilityFunction::operator()(std::span<const FeatureValue> state) const {
  for (const auto& rule : rules_) {
    bool holds = true;
    for (const auto& c : rule.guard) {
      if (!c.allowed[state[c.feature]]) {
        holds = false;
        break;
      }
    }
    if (holds) return rule.value;
  }
  return default_;
}

std::vector<std::size_t> ProbabilityFunction::scope() const {
  std::vector<std::size_t> out;
  for (const auto& rule : rules_) {
    for (const auto& c : rule.guard) out.push_back(c.feature);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<SymbolId> Psdg::find_symbol(std::string_view name) const {
  auto it = symbol_index_.find(std::string(name));
  if (it == symbol_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Psdg::find_feature(std::string_view name) const {
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (features_[f].name == name) return f;
  }
  return std::nullopt;
}

std::optional<FeatureValue> Psdg::find_value(std::size_t feature, std::string_view value) const {
  const auto& values = features_[feature].values;
  for (std::size_t v = 0; v < values.size(); ++v) {
    if (values[v] == value) return static_cast<FeatureValue>(v);
  }
  return std::nullopt;
}

std::span<const ProductionId> Psdg::productions_of(SymbolId lhs) const {
  const auto& sym = symbols_[lhs];
  if (sym.terminal) return {};
  return by_lhs_[sym.ordinal];
}

std::optional<ProductionId> Psdg::find_production_label(long label) const {
  for (const auto& p : productions_) {
    if (p.label == label) return p.id;
  }
  return std::nullopt;
}

std::span<const double> Psdg::feature_transition(std::size_t feature,
                                                 std::span<const FeatureValue> prev,
                                                 SymbolId terminal) const {
  const auto& f = features_[feature];
  std::size_t config = 0;
  for (std::size_t i = 0; i < f.parents.size(); ++i) {
    config += prev[f.parents[i]] * f.parent_strides[i];
  }
  const std::size_t width = f.values.size();
  const std::size_t offset = (config * terminals_.size() + symbols_[terminal].ordinal) * width;
  return {f.table.data() + offset, width};
}

double Psdg::transition_probability(const StatePoint& prev, SymbolId terminal,
                                    const StatePoint& next) const {
  double p = 1.0;
  for (std::size_t f = 0; f < features_.size(); ++f) {
    p *= feature_transition(f, prev.values, terminal)[next.values[f]];
    if (p == 0.0) return 0.0;
  }
  return p;
}

double Psdg::prior_probability(const StatePoint& state) const {
  double p = 1.0;
  for (std::size_t f = 0; f < features_.size(); ++f) p *= features_[f].prior[state.values[f]];
  return p;
}

std::string Psdg::state_label(const StatePoint& state) const {
  std::string out;
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (f) out += ',';
    out += features_[f].name;
    out += '=';
    out += features_[f].values[state.values[f]];
  }
  return out;
}

std::string Psdg::frame_label(ProductionId production, std::size_t cursor) const {
  return std::to_string(productions_[production].label) + ":" + std::to_string(cursor);
}

}  // namespace psdg
