#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "fixtures.hpp"
#include "psdg/error.hpp"
#include "psdg/grammar_io.hpp"
#include "random_grammar.hpp"

using namespace psdg;
using psdg::testing::traffic;

namespace {

std::vector<Diagnostic> diagnostics_of(const std::string& text) {
  try {
    load_grammar(text);
  } catch (const ValidationError& e) {
    return e.diagnostics();
  }
  return {};
}

bool has_kind(const std::vector<Diagnostic>& ds, DiagnosticKind kind) {
  return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) { return d.kind == kind; });
}

StatePoint state(const Psdg& g, std::initializer_list<const char*> values) {
  StatePoint q;
  std::size_t f = 0;
  for (const char* v : values) q.values.push_back(*g.find_value(f++, v));
  return q;
}

ProductionId by_label(const Psdg& g, long label) { return *g.find_production_label(label); }

}  // namespace

TEST_CASE("traffic grammar loads with depth 2 over Drive and Pass") {
  const auto& g = traffic();
  CHECK(g.productions().size() == 7);
  CHECK(g.max_depth() == 2);
  CHECK(g.max_length() == 2);
  CHECK(g.state_space().size() == 18);
  CHECK(g.terminals().size() == 4);
  REQUIRE(g.nonterminals().size() == 2);
  CHECK(g.name(g.start()) == "Drive");
  CHECK(g.find_symbol("Pass").has_value());
  CHECK(g.production(by_label(g, 3)).tail_recursive);
  CHECK_FALSE(g.production(by_label(g, 5)).tail_recursive);
}

TEST_CASE("production 1 is impossible in the left lane") {
  const auto& g = traffic();
  for (const char* exit : {"no", "yes"}) {
    for (const char* ahead : {"clear", "slow", "blocked"}) {
      CHECK(g.production_probability(by_label(g, 1), state(g, {"left", exit, ahead})) == 0.0);
      CHECK(g.production_probability(by_label(g, 2), state(g, {"right", exit, ahead})) == 0.0);
    }
  }
  CHECK(g.production_probability(by_label(g, 1), state(g, {"center", "no", "clear"})) == doctest::Approx(0.15));
}

TEST_CASE("single production of a nonterminal has probability 1 everywhere") {
  const auto g = load_grammar(psdg::testing::kPassMix);
  const auto drive = g.productions_of(*g.find_symbol("Drive"));
  REQUIRE(drive.size() == 1);
  for (StateIndex i = 0; i < g.state_space().size(); ++i) {
    CHECK(g.production_probability(drive[0], g.state_space().decode(i)) == 1.0);
  }
}

TEST_CASE("default value applies when no guard matches") {
  ValueConstraint fast{0, {false, true}};
  ProbabilityFunction p({GuardRule{{fast}, 0.8}}, 0.2);
  CHECK(p(StatePoint{{0}}) == 0.2);
  CHECK(p(StatePoint{{1}}) == 0.8);
  CHECK(p.scope() == std::vector<std::size_t>{0});
}

TEST_CASE("first matching rule wins") {
  ValueConstraint a{0, {true, true}};
  ValueConstraint b{1, {false, true}};
  ProbabilityFunction p({GuardRule{{b}, 0.1}, GuardRule{{a}, 0.9}}, 0.5);
  CHECK(p(StatePoint{{0, 1}}) == 0.1);
  CHECK(p(StatePoint{{0, 0}}) == 0.9);
  CHECK(p.scope() == std::vector<std::size_t>{0, 1});
}

TEST_CASE("production probabilities sum to one for every nonterminal and state") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto g = load_grammar(psdg::testing::random_grammar_text(seed));
    for (StateIndex i = 0; i < g.state_space().size(); ++i) {
      const auto q = g.state_space().decode(i);
      for (SymbolId x : g.nonterminals()) {
        double total = 0.0;
        for (ProductionId a : g.productions_of(x)) total += g.production_probability(a, q);
        CHECK(std::abs(total - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("identity dynamics keep the state") {
  const auto g = load_grammar(psdg::testing::kIdentity);
  const auto& space = g.state_space();
  for (SymbolId x : g.terminals()) {
    for (StateIndex i = 0; i < space.size(); ++i) {
      for (StateIndex j = 0; j < space.size(); ++j) {
        CHECK(g.transition_probability(space.decode(i), x, space.decode(j)) == (i == j ? 1.0 : 0.0));
      }
    }
  }
}

TEST_CASE("single binary feature flipping with probability 0.3") {
  const auto g = load_grammar(R"(
feature F { values: f0, f1 ; parents: F ; cpt: f0 | * -> 0.7, 0.3 ; f1 | * -> 0.3, 0.7 }
terminals a
start S
prod 0: S -> a { default: 1 }
)");
  CHECK(g.transition_probability(StatePoint{{0}}, *g.find_symbol("a"), StatePoint{{1}}) == doctest::Approx(0.3));
}

TEST_CASE("two independent flips multiply and rows sum to one") {
  const auto g = load_grammar(R"(
feature F { values: f0, f1 ; parents: F ; cpt: f0 | * -> 0.7, 0.3 ; f1 | * -> 0.3, 0.7 }
feature G { values: g0, g1 ; parents: G ; cpt: g0 | * -> 0.5, 0.5 ; g1 | * -> 0.5, 0.5 }
terminals a
start S
prod 0: S -> a { default: 1 }
)");
  const auto a = *g.find_symbol("a");
  CHECK(g.transition_probability(StatePoint{{0, 0}}, a, StatePoint{{1, 1}}) == doctest::Approx(0.15).epsilon(1e-15));
  for (StateIndex i = 0; i < 4; ++i) {
    double row = 0.0;
    for (StateIndex j = 0; j < 4; ++j) {
      row += g.transition_probability(g.state_space().decode(i), a, g.state_space().decode(j));
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("terminal-specific CPT rows take precedence over wildcard rows") {
  const auto& g = traffic();
  const auto left = *g.find_symbol("Left");
  const auto stay = *g.find_symbol("Stay");
  const auto f = g.feature_transition(0, state(g, {"center", "no", "clear"}).values, left);
  CHECK(f[0] == 0.9);
  CHECK(f[1] == doctest::Approx(0.1));
  const auto s = g.feature_transition(0, state(g, {"center", "no", "clear"}).values, stay);
  CHECK(s[1] == 1.0);
  // Ahead lists `clear | *` before `* | Left`; the first matching row is used.
  const auto ahead = g.feature_transition(2, state(g, {"center", "no", "clear"}).values, left);
  CHECK(ahead[0] == 0.8);
  const auto ahead_slow = g.feature_transition(2, state(g, {"center", "no", "slow"}).values, left);
  CHECK(ahead_slow[0] == 0.6);
}

TEST_CASE("transition rows sum to one on random grammars") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto g = load_grammar(psdg::testing::random_grammar_text(seed));
    const auto& space = g.state_space();
    for (SymbolId x : g.terminals()) {
      for (StateIndex i = 0; i < space.size(); ++i) {
        double row = 0.0;
        for (StateIndex j = 0; j < space.size(); ++j) {
          row += g.transition_probability(space.decode(i), x, space.decode(j));
        }
        CHECK(std::abs(row - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("point-mass priors") {
  const auto g = load_grammar(psdg::testing::kForcedDrive);
  CHECK(g.prior_probability(StatePoint{{0}}) == 1.0);
  CHECK(g.prior_probability(StatePoint{{1}}) == 0.0);
}

TEST_CASE("uniform prior when none is given") {
  const auto g = load_grammar(R"(
feature F { values: f0, f1 }
terminals a
start S
prod 0: S -> a { default: 1 }
)");
  CHECK(g.prior_probability(StatePoint{{0}}) == 0.5);
  CHECK(g.prior_probability(StatePoint{{1}}) == 0.5);
}

TEST_CASE("independent priors multiply") {
  const auto g = load_grammar(R"(
feature F { values: f0, f1 ; prior: 0.9, 0.1 }
feature G { values: g0, g1 ; prior: 0.5, 0.5 }
terminals a
start S
prod 0: S -> a { default: 1 }
)");
  CHECK(g.prior_probability(StatePoint{{0, 0}}) == doctest::Approx(0.45).epsilon(1e-15));
  double total = 0.0;
  for (StateIndex i = 0; i < 4; ++i) total += g.prior_probability(g.state_space().decode(i));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("expansion probabilities summing to 1.1 are rejected") {
  const auto ds = diagnostics_of(R"(
feature F { values: f0, f1 }
terminals a, b
start X
prod 0: X -> a { default: 0.6 }
prod 1: X -> b { default: 0.5 }
)");
  REQUIRE(has_kind(ds, DiagnosticKind::NormalizationViolation));
  const auto& d = *std::find_if(ds.begin(), ds.end(),
                                [](const Diagnostic& d) { return d.kind == DiagnosticKind::NormalizationViolation; });
  CHECK(d.message.find("X") != std::string::npos);
  CHECK(d.message.find("F=") != std::string::npos);
}

TEST_CASE("normalization violation in a single state names that state") {
  const auto ds = diagnostics_of(R"(
feature F { values: f0, f1, f2 }
terminals a, b
start X
prod 0: X -> a { rule F in {f2} : 0.4 ; default: 0.5 }
prod 1: X -> b { default: 0.5 }
)");
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].kind == DiagnosticKind::NormalizationViolation);
  CHECK(ds[0].message.find("f2") != std::string::npos);
}

TEST_CASE("mutual recursion is not tail recursion") {
  const auto ds = diagnostics_of(R"(
feature F { values: f0 }
terminals a
start X
prod 0: X -> Y { default: 1 }
prod 1: Y -> X { default: 0.5 }
prod 2: Y -> a { default: 0.5 }
)");
  REQUIRE(has_kind(ds, DiagnosticKind::NonTailRecursion));
  const auto it = std::find_if(ds.begin(), ds.end(),
                               [](const Diagnostic& d) { return d.kind == DiagnosticKind::NonTailRecursion; });
  CHECK(it->message.find("X") != std::string::npos);
  CHECK(it->message.find("Y") != std::string::npos);
}

TEST_CASE("self recursion before the last position is rejected") {
  const auto ds = diagnostics_of(R"(
feature F { values: f0 }
terminals a
start X
prod 0: X -> X a { default: 0.5 }
prod 1: X -> a { default: 0.5 }
)");
  CHECK(has_kind(ds, DiagnosticKind::NonTailRecursion));
}

TEST_CASE("undeclared symbol is reported with its location") {
  const auto ds = diagnostics_of("feature F { values: f0 }\nterminals a\nstart S\nprod 0: S -> a zz { default: 1 }\n");
  REQUIRE(has_kind(ds, DiagnosticKind::UndeclaredSymbol));
  const auto it = std::find_if(ds.begin(), ds.end(),
                               [](const Diagnostic& d) { return d.kind == DiagnosticKind::UndeclaredSymbol; });
  CHECK(it->line == 4);
  CHECK(it->column == 16);
}

TEST_CASE("every violation is reported, not only the first") {
  const auto ds = diagnostics_of(R"(
feature F { values: f0, f1 ; prior: 0.5, 0.6 }
terminals a
start S
prod 0: S -> a q { default: 0.7 }
prod 0: S -> a { default: 0.2 }
)");
  CHECK(has_kind(ds, DiagnosticKind::BadDistribution));
  CHECK(has_kind(ds, DiagnosticKind::UndeclaredSymbol));
  CHECK(has_kind(ds, DiagnosticKind::DuplicateDefinition));
}

TEST_CASE("CPT rows must be distributions") {
  const auto ds = diagnostics_of(R"(
feature F { values: f0, f1 ; parents: F ; cpt: f0 | * -> 0.5, 0.4 ; f1 | * -> 0, 1 }
terminals a
start S
prod 0: S -> a { default: 1 }
)");
  CHECK(has_kind(ds, DiagnosticKind::BadDistribution));
}

TEST_CASE("empty file is a parse error on line 1") {
  try {
    load_grammar("");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
}

TEST_CASE("syntax errors carry their position") {
  try {
    load_grammar("feature F { values: f0 }\nterminals a\nstart S\nprod 0: S -> a { default 1 }\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(e.column() > 1);
  }
}

TEST_CASE("missing grammar file is an I/O error") {
  CHECK_THROWS_AS(load_grammar_file("/nonexistent/grammar.psdg"), IoError);
}

TEST_CASE("state and frame labels") {
  const auto& g = traffic();
  CHECK(g.state_label(state(g, {"left", "yes", "slow"})) == "Lane=left,AtExit=yes,Ahead=slow");
  CHECK(g.frame_label(by_label(g, 5), 2) == "5:2");
}
