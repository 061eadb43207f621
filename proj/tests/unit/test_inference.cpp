#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "psdg/error.hpp"
#include "psdg/generation.hpp"
#include "psdg/inference.hpp"
#include "psdg/oracle.hpp"
#include "random_grammar.hpp"

using namespace psdg;
using psdg::testing::traffic;

namespace {

std::size_t ordinal(const Psdg& g, const char* name) { return g.symbol(*g.find_symbol(name)).ordinal; }

ProductionId by_label(const Psdg& g, long label) { return *g.find_production_label(label); }

StateSet pin(const Psdg& g, std::initializer_list<std::pair<const char*, const char*>> fixed) {
  std::vector<std::vector<FeatureValue>> allowed;
  for (const auto& f : g.features()) {
    std::vector<FeatureValue> all(f.values.size());
    std::iota(all.begin(), all.end(), FeatureValue{0});
    allowed.push_back(all);
  }
  for (const auto& [feature, value] : fixed) {
    const auto f = *g.find_feature(feature);
    allowed[f] = {*g.find_value(f, value)};
  }
  return StateSet(std::move(allowed));
}

double row_sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("single state S -> a: the only plan emits a and terminates") {
  const auto g = load_grammar("feature F { values: f0 }\nterminals a\nstart S\nprod 0: S -> a { default: 1 }\n");
  Recognizer rec(g);
  const auto b = rec.init_belief();
  CHECK(b.time() == 1);
  CHECK(b.support_size() == 1);
  CHECK(b.state_weights()[0] == 1.0);
  CHECK(b.symbol(1, ordinal(g, "S"), 0) == 1.0);
  CHECK(b.terminal(g.symbol(*g.find_symbol("a")).ordinal, 0) == 1.0);
  CHECK(b.terminates(1, 0) == 1.0);
  CHECK(b.completed(0) == 0.0);
  CHECK(b.check_invariants().empty());
}

TEST_CASE("left lane states give production 1 no weight at time 1") {
  const auto& g = traffic();
  Recognizer rec(g);
  const auto b = rec.init_belief();
  const auto frame = rec.frame_catalog().index(by_label(g, 1), 1);
  std::size_t left = 0;
  for (std::size_t i = 0; i < b.support_size(); ++i) {
    if (b.support().member(i).values[0] != 0) continue;
    ++left;
    CHECK(b.frame(1, frame, i) == 0.0);
  }
  CHECK(left == 6);
}

TEST_CASE("constant production functions appear unchanged in every state") {
  const auto g = load_grammar(psdg::testing::kConstantToy);
  Recognizer rec(g);
  const auto b = rec.init_belief();
  const double expect[] = {0.2, 0.3, 0.5};
  for (std::size_t q = 0; q < b.support_size(); ++q) {
    for (long a = 0; a < 3; ++a) {
      CHECK(b.frame(1, rec.frame_catalog().index(by_label(g, a), 1), q) == doctest::Approx(expect[a]).epsilon(1e-15));
    }
    CHECK(b.terminates(1, q) == doctest::Approx(1.0));
  }
  CHECK(b.state_weights()[0] == doctest::Approx(0.4));
}

TEST_CASE("symbol transition with a single possible terminal is the state transition") {
  const auto g = load_grammar(R"(
feature F { values: f0, f1, f2 ; parents: F ; cpt: f0 | a -> 0.1, 0.6, 0.3 ; f1 | a -> 0.5, 0.5, 0 ; f2 | a -> 0, 0.2, 0.8 ; * | * -> 1, 0, 0 }
terminals a, b
start S
prod 0: S -> a { rule F in {f0} : 0.4 ; default: 0.7 }
prod 1: S -> a b { rule F in {f0} : 0.6 ; default: 0.3 }
)");
  Recognizer rec(g);
  const auto b = rec.init_belief();
  const auto full = StateSet::full(g.state_space());
  const auto a = *g.find_symbol("a");
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t n = 0; n < 3; ++n) {
      const double expect = g.transition_probability(b.support().member(p), a, full.member(n));
      CHECK(rec.symbol_transition(b, 1, g.start(), p, full, n) == doctest::Approx(expect).epsilon(1e-14));
    }
  }
}

TEST_CASE("symbol transition under identity dynamics") {
  const auto g = load_grammar(psdg::testing::kIdentity);
  Recognizer rec(g);
  const auto b = rec.init_belief();
  const auto full = StateSet::full(g.state_space());
  for (std::size_t p = 0; p < 4; ++p) {
    for (std::size_t n = 0; n < 4; ++n) {
      CHECK(rec.symbol_transition(b, 1, g.start(), p, full, n) == doctest::Approx(p == n ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("Pass at level 2 mixes the Left and Right transitions evenly") {
  const auto g = load_grammar(psdg::testing::kPassMix);
  Recognizer rec(g);
  const auto b = rec.init_belief();
  const auto full = StateSet::full(g.state_space());
  const auto left = *g.find_symbol("Left");
  const auto right = *g.find_symbol("Right");
  const auto pass = *g.find_symbol("Pass");
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t n = 0; n < 3; ++n) {
      const auto qp = b.support().member(p);
      const auto qn = full.member(n);
      const double expect =
          0.5 * g.transition_probability(qp, left, qn) + 0.5 * g.transition_probability(qp, right, qn);
      CHECK(rec.symbol_transition(b, 2, pass, p, full, n) == doctest::Approx(expect).epsilon(1e-14));
    }
  }
}

TEST_CASE("symbol transitions marginalize to the unconditional state transition") {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const auto g = load_grammar(psdg::testing::random_grammar_text(seed));
    Recognizer rec(g);
    const auto b = rec.init_belief();
    const auto full = StateSet::full(g.state_space());
    for (std::size_t p = 0; p < b.support_size(); ++p) {
      for (std::size_t n = 0; n < full.size(); ++n) {
        double mixed = 0.0;
        for (SymbolId x : g.nonterminals()) {
          mixed += b.symbol(1, g.symbol(x).ordinal, p) * rec.symbol_transition(b, 1, x, p, full, n);
        }
        double direct = 0.0;
        for (SymbolId x : g.terminals()) {
          direct += b.terminal(g.symbol(x).ordinal, p) *
                    g.transition_probability(b.support().member(p), x, full.member(n));
        }
        CHECK(std::abs(mixed - direct) <= 1e-12);
      }
    }
  }
}

TEST_CASE("conditional production given symbol") {
  const auto g = load_grammar(R"(
feature F { values: f0 }
terminals a, b, c
start S
prod 0: S -> X { default: 0.2 }
prod 1: S -> a { default: 0.8 }
prod 2: X -> b { default: 0.3 }
prod 3: X -> c { default: 0.7 }
)");
  Recognizer rec(g);
  const auto b = rec.init_belief();
  const auto& fc = rec.frame_catalog();
  const auto x = *g.find_symbol("X");
  CHECK(b.symbol(2, g.symbol(x).ordinal, 0) == doctest::Approx(0.2));
  CHECK(b.frame(2, fc.index(by_label(g, 2), 1), 0) == doctest::Approx(0.06));
  CHECK(b.frame(2, fc.index(by_label(g, 3), 1), 0) == doctest::Approx(0.14));
  CHECK(rec.conditional_production_given_symbol(b, 2, fc.index(by_label(g, 2), 1), x, 0) == doctest::Approx(0.3));
  CHECK(rec.conditional_production_given_symbol(b, 2, fc.index(by_label(g, 3), 1), x, 0) == doctest::Approx(0.7));
  CHECK(rec.conditional_production_given_symbol(b, 1, fc.index(by_label(g, 0), 1), g.start(), 0) ==
        doctest::Approx(0.2));
  CHECK(rec.conditional_production_given_symbol(b, 2, fc.index(by_label(g, 0), 1), x, 0) == 0.0);
  CHECK_THROWS_AS(rec.conditional_production_given_symbol(b, 2, fc.index(by_label(g, 0), 1), g.start(), 0),
                  UndefinedConditional);
}

TEST_CASE("single production of a symbol has conditional 1") {
  const auto g = load_grammar(psdg::testing::kPassMix);
  Recognizer rec(g);
  const auto b = rec.init_belief();
  for (std::size_t q = 0; q < b.support_size(); ++q) {
    CHECK(rec.conditional_production_given_symbol(b, 1, rec.frame_catalog().index(0, 1), g.start(), q) ==
          doctest::Approx(1.0));
  }
}

TEST_CASE("forced grammar: explanations and predictions are point masses") {
  const auto g = load_grammar(psdg::testing::kForcedDrive);
  OnlineRecognizer rec(g);
  const FrameCatalog fc(g);
  const auto pass = ordinal(g, "Pass");
  const auto drive = ordinal(g, "Drive");

  const auto r1 = rec.observe({1, pin(g, {{"Done", "no"}})});
  CHECK(r1.evidence == doctest::Approx(1.0));
  REQUIRE(r1.explanation);
  CHECK(r1.explanation->symbols[0][drive] == doctest::Approx(1.0));
  CHECK(r1.explanation->symbols[1][pass] == doctest::Approx(1.0));
  CHECK(r1.explanation->frames[1][fc.index(by_label(g, 5), 1)] == doctest::Approx(1.0));
  CHECK(r1.explanation->terminals[g.symbol(*g.find_symbol("Left")).ordinal] == doctest::Approx(1.0));
  // Pass <5,1> finished Left, so the next terminal is Right.
  CHECK(r1.prediction.terminals[g.symbol(*g.find_symbol("Right")).ordinal] == doctest::Approx(1.0));
  CHECK(r1.prediction.frames[1][fc.index(by_label(g, 5), 2)] == doctest::Approx(1.0));

  const auto& b1 = rec.belief();
  CHECK(b1.terminates(2, 0) == 1.0);
  CHECK(b1.terminates(1, 0) == 0.0);

  const auto r2 = rec.observe({2, pin(g, {{"Done", "yes"}})});
  CHECK(r2.evidence == doctest::Approx(1.0));
  CHECK(r2.prediction.frames[0][fc.index(by_label(g, 4), 1)] == doctest::Approx(1.0));

  const auto r3 = rec.observe({3, pin(g, {{"Done", "yes"}})});
  CHECK(r3.explanation->terminals[g.symbol(*g.find_symbol("Exit")).ordinal] == doctest::Approx(1.0));
  CHECK(r3.prediction.completed == doctest::Approx(1.0));
  for (const auto& row : r3.prediction.symbols) CHECK(row_sum(row) == 0.0);
  CHECK(row_sum(r3.prediction.terminals) == 0.0);
  CHECK(rec.log_evidence() == doctest::Approx(0.0));
}

TEST_CASE("a frame before its last symbol never terminates") {
  const auto g = load_grammar(psdg::testing::kForcedDrive);
  Recognizer rec(g);
  const auto b = rec.init_belief();
  CHECK(b.terminates(1, 0) == 0.0);
  CHECK(b.terminates(2, 0) == 0.0);
}

TEST_CASE("single-terminal expansions terminate at every populated level") {
  const auto g = load_grammar(psdg::testing::kConstantToy);
  OnlineRecognizer rec(g);
  rec.observe({0, pin(g, {{"F", "hi"}})});
  for (std::size_t q = 0; q < rec.belief().support_size(); ++q) CHECK(rec.belief().terminates(1, q) == 1.0);
}

TEST_CASE("vacuous evidence leaves plan posteriors at their priors") {
  const auto& g = traffic();
  Recognizer rec(g);
  const auto b = rec.init_belief();
  const auto prior = rec.prediction_of(b);
  const auto ex = rec.explain(b, StateSet::full(g.state_space()));
  CHECK(ex.evidence == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t l = 0; l < prior.symbols.size(); ++l) {
    for (std::size_t x = 0; x < prior.symbols[l].size(); ++x) {
      CHECK(ex.plans.symbols[l][x] == doctest::Approx(prior.symbols[l][x]).epsilon(1e-14));
    }
  }
  // State posterior is B_Q pushed through one step.
  const auto full = StateSet::full(g.state_space());
  for (std::size_t n = 0; n < full.size(); ++n) {
    double pushed = 0.0;
    for (std::size_t p = 0; p < b.support_size(); ++p) {
      for (SymbolId x : g.terminals()) {
        pushed += b.state_weights()[p] * b.terminal(g.symbol(x).ordinal, p) *
                  g.transition_probability(b.support().member(p), x, full.member(n));
      }
    }
    CHECK(ex.state_posterior[n] == doctest::Approx(pushed).epsilon(1e-13));
  }
}

TEST_CASE("B_Q under vacuous observations equals the forward marginal") {
  const auto& g = traffic();
  const auto joint = enumerate_joint(g, 3);
  OnlineRecognizer rec(g);
  std::vector<Observation> none;
  for (std::size_t t = 1; t <= 2; ++t) {
    rec.observe({t, StateSet::full(g.state_space())});
    const auto& b = rec.belief();
    for (std::size_t q = 0; q < b.support_size(); ++q) {
      const double expect = exact_posterior(joint, none, query::state(t, StateSet::singleton(b.support().member(q))));
      CHECK(std::abs(b.state_weights()[q] - expect) <= 1e-12);
    }
  }
}

TEST_CASE("termination tables match the oracle") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto g = load_grammar(psdg::testing::random_grammar_text(seed));
    const auto stream = psdg::testing::random_stream(g, seed + 1000, 4);
    OnlineRecognizer rec(g);
    std::vector<Observation> seen;
    for (const auto& obs : stream) {
      rec.observe(obs);
      seen.push_back(obs);
      const auto& b = rec.belief();
      const auto joint = enumerate_consistent(g, b.time(), seen);
      for (std::size_t q = 0; q < b.support_size(); ++q) {
        if (b.state_weights()[q] == 0.0) continue;
        auto evidence = seen;
        evidence.push_back({b.time() - 1, StateSet::singleton(b.support().member(q))});
        for (std::size_t l = 1; l <= g.max_depth(); ++l) {
          const double expect = exact_posterior(joint, evidence, query::terminates(b.time(), l));
          CHECK(std::abs(b.terminates(l, q) - expect) <= 1e-9);
          for (SymbolId x : g.nonterminals()) {
            const double px = exact_posterior(joint, evidence, query::symbol(b.time(), l, x));
            CHECK(std::abs(b.symbol(l, g.symbol(x).ordinal, q) - px) <= 1e-9);
            if (px <= 1e-12) continue;
            const double both = exact_posterior(
                joint, evidence, query::all({query::symbol(b.time(), l, x), query::terminates(b.time(), l)}));
            CHECK(std::abs(b.terminates_given_symbol(l, g.symbol(x).ordinal, q) - both / px) <= 1e-9);
          }
        }
      }
    }
  }
}

TEST_CASE("replayed trajectories keep the true plan in every explanation") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto g = load_grammar(psdg::testing::random_grammar_text(seed));
    SampleOptions opts;
    opts.horizon = 6;
    opts.seed = seed;
    const auto tr = sample_trajectory(g, opts);
    OnlineRecognizer rec(g);
    Recognizer plain(g);
    rec.observe({0, StateSet::singleton(tr.initial)});
    for (std::size_t t = 1; t <= tr.steps.size(); ++t) {
      const auto& step = tr.steps[t - 1];
      const auto r = rec.observe({t, StateSet::singleton(step.state)});
      CHECK(r.evidence > 0.0);
      REQUIRE(r.explanation);
      CHECK(r.explanation->terminals[g.symbol(step.stack.leaf).ordinal] > 0.0);
      for (const auto& f : step.stack.frames) {
        CHECK(r.explanation->symbols[f.level - 1][g.symbol(f.symbol).ordinal] > 0.0);
        CHECK(r.explanation->frames[f.level - 1][plain.frame_catalog().index(f.production, f.cursor)] > 0.0);
      }
    }
  }
}

TEST_CASE("beliefs satisfy the normalization invariants after every step") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto g = load_grammar(psdg::testing::random_grammar_text(seed));
    OnlineRecognizer rec(g);
    CHECK(rec.belief().check_invariants().empty());
    for (const auto& obs : psdg::testing::random_stream(g, seed, 6)) {
      const auto r = rec.observe(obs);
      const auto problems = rec.belief().check_invariants();
      CHECK(problems.empty());
      CHECK(std::abs(row_sum(r.state_posterior) - 1.0) <= 1e-9);
      CHECK(std::abs(row_sum(r.prediction.terminals) + r.prediction.completed - 1.0) <= 1e-9);
      // Support is exactly the observed set.
      CHECK(rec.belief().support() == obs.states);
      CHECK(r.state_posterior.size() == obs.states.size());
    }
  }
}

TEST_CASE("per-level tables stay within c |R| |P| d m") {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto g = load_grammar(psdg::testing::random_grammar_text(seed));
    OnlineRecognizer rec(g);
    for (const auto& obs : psdg::testing::random_stream(g, seed, 4)) {
      rec.observe(obs);
      const auto& b = rec.belief();
      const double scale = static_cast<double>(b.support_size() * g.productions().size() * g.max_depth() *
                                               g.max_length());
      worst = std::max(worst, static_cast<double>(b.entry_count().tables) / scale);
    }
  }
  // Per support state: B_Q, completed, B_T (d), B_N and B_TN (d|N| each),
  // B_P (at most d|P|m) and B_S (|Sigma|, which may include unused terminals).
  MESSAGE("largest table entries / (|R||P|dm): " << worst);
  CHECK(worst <= 10.0);
}

TEST_CASE("product of step evidences is the probability of the stream") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto g = load_grammar(psdg::testing::random_grammar_text(seed));
    const auto stream = psdg::testing::random_stream(g, seed * 31, 5);
    OnlineRecognizer rec(g);
    double product = 1.0;
    for (const auto& obs : stream) product *= rec.observe(obs).evidence;
    const double mass = enumerate_consistent(g, stream.back().time + 1, stream).total_mass();
    CHECK(std::abs(product / mass - 1.0) <= 1e-9);
    CHECK(std::abs(std::exp(rec.log_evidence()) / mass - 1.0) <= 1e-9);
  }
}

TEST_CASE("engine reports match the oracle reference") {
  for (std::uint64_t seed = 200; seed < 215; ++seed) {
    const auto g = load_grammar(psdg::testing::random_grammar_text(seed));
    const auto stream = psdg::testing::random_stream(g, seed, 5);
    const auto expected = reference_reports(g, stream);
    OnlineRecognizer rec(g);
    for (std::size_t i = 0; i < stream.size(); ++i) {
      CHECK(compare_reports(rec.observe(stream[i]), expected[i]).max() <= 1e-9);
    }
  }
}

TEST_CASE("skipped time steps behave like unconstrained observations") {
  const auto& g = traffic();
  const auto late = pin(g, {{"Lane", "right"}, {"AtExit", "yes"}});
  OnlineRecognizer gap(g);
  const auto a = gap.observe({3, late});
  OnlineRecognizer filled(g);
  filled.observe({1, StateSet::full(g.state_space())});
  filled.observe({2, StateSet::full(g.state_space())});
  const auto b = filled.observe({3, late});
  CHECK(compare_reports(a, b).max() <= 1e-14);
  CHECK(a.time == 3);
}

TEST_CASE("observation times must increase") {
  const auto& g = traffic();
  OnlineRecognizer rec(g);
  rec.observe({2, StateSet::full(g.state_space())});
  CHECK_THROWS_AS(rec.observe({2, StateSet::full(g.state_space())}), std::invalid_argument);
  CHECK_THROWS_AS(rec.observe({1, StateSet::full(g.state_space())}), std::invalid_argument);
}

TEST_CASE("unreachable state under identity dynamics is zero evidence") {
  const auto g = load_grammar(psdg::testing::kIdentity);
  OnlineRecognizer rec(g);
  rec.observe({0, pin(g, {{"A", "a0"}})});
  CHECK_THROWS_AS(rec.observe({1, pin(g, {{"A", "a1"}})}), ZeroEvidence);
}

TEST_CASE("reinit policy restarts from the prior on the contradicting observation") {
  const auto g = load_grammar(psdg::testing::kIdentity);
  OnlineRecognizer rec(g, {}, ZeroEvidencePolicy::Reinit);
  const auto r0 = rec.observe({0, pin(g, {{"A", "a0"}})});
  CHECK(r0.evidence == doctest::Approx(0.5));
  const double before = rec.log_evidence();
  const auto r1 = rec.observe({1, pin(g, {{"A", "a1"}})});
  CHECK(r1.reinitialized);
  CHECK(r1.evidence == 0.0);
  CHECK(rec.log_evidence() == before);
  CHECK(r1.state_posterior.size() == 2);
  CHECK(row_sum(r1.state_posterior) == doctest::Approx(1.0));
  const auto r2 = rec.observe({2, pin(g, {{"A", "a1"}})});
  CHECK_FALSE(r2.reinitialized);
  CHECK(r2.evidence > 0.0);
}

TEST_CASE("support larger than the bound needs an initial restriction") {
  const auto& g = traffic();
  InferenceOptions opts;
  opts.support_bound = 6;
  Recognizer rec(g, opts);
  CHECK_THROWS_AS(rec.init_belief(), SupportTooLarge);
  const auto b = rec.init_belief(pin(g, {{"Lane", "left"}}));
  CHECK(b.support_size() == 6);
}
