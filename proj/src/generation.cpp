#include "psdg/generation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "psdg/error.hpp"

namespace psdg {

Sampler::Sampler(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  rng_.seed(seq);
}

double Sampler::uniform() {
  // 53 random mantissa bits; std::uniform_real_distribution is not
  // reproducible across standard libraries.
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

ProductionId Sampler::choose_production(const Psdg& g, SymbolId lhs, const StatePoint& state) {
  const auto candidates = g.productions_of(lhs);
  if (!forced_.empty()) {
    const auto id = forced_.front();
    forced_.pop_front();
    if (g.production(id).lhs != lhs) {
      throw InvalidTrajectory("forced production " + std::to_string(g.production(id).label) +
                              " does not expand " + g.name(lhs));
    }
    if (!(g.production_probability(id, state) > 0.0)) {
      throw DeadEnd("forced production " + std::to_string(g.production(id).label) +
                    " has probability 0 in state " + g.state_label(state));
    }
    return id;
  }
  double total = 0.0;
  for (auto id : candidates) total += g.production_probability(id, state);
  if (!(total > 0.0)) {
    throw DeadEnd("no production of " + g.name(lhs) + " has positive probability in state " +
                  g.state_label(state));
  }
  const double target = uniform() * total;
  double acc = 0.0;
  ProductionId last_positive = candidates.front();
  for (auto id : candidates) {
    const double p = g.production_probability(id, state);
    if (p <= 0.0) continue;
    last_positive = id;
    acc += p;
    if (target < acc) return id;
  }
  return last_positive;
}

FeatureValue Sampler::draw_value(std::span<const double> distribution) {
  const double target = uniform();
  double acc = 0.0;
  FeatureValue last_positive = 0;
  for (std::size_t v = 0; v < distribution.size(); ++v) {
    if (distribution[v] <= 0.0) continue;
    last_positive = static_cast<FeatureValue>(v);
    acc += distribution[v];
    if (target < acc) return last_positive;
  }
  return last_positive;
}

StatePoint Sampler::draw_prior(const Psdg& g) {
  StatePoint q;
  q.values.reserve(g.features().size());
  for (const auto& f : g.features()) q.values.push_back(draw_value(f.prior));
  return q;
}

StatePoint Sampler::draw_transition(const Psdg& g, const StatePoint& prev, SymbolId terminal) {
  StatePoint q;
  q.values.reserve(g.features().size());
  for (std::size_t f = 0; f < g.features().size(); ++f) {
    q.values.push_back(draw_value(g.feature_transition(f, prev.values, terminal)));
  }
  return q;
}

bool expansion_terminates(const Psdg& g, const ExpansionStack& stack, std::size_t level) {
  if (level < 1 || level > stack.frames.size()) return false;
  for (std::size_t k = level - 1; k < stack.frames.size(); ++k) {
    const auto& frame = stack.frames[k];
    if (frame.cursor != g.production(frame.production).length()) return false;
  }
  return true;
}

std::size_t deepest_open_level(const Psdg& g, const ExpansionStack& stack) {
  for (std::size_t k = stack.frames.size(); k-- > 0;) {
    const auto& frame = stack.frames[k];
    if (frame.cursor != g.production(frame.production).length()) return k + 1;
  }
  return 0;
}

void expand_fresh(const Psdg& g, SymbolId symbol, std::size_t level, const StatePoint& state,
                  Sampler& sampler, ExpansionStack& stack) {
  while (true) {
    const auto id = sampler.choose_production(g, symbol, state);
    stack.frames.push_back({level, symbol, id, 1});
    const auto child = g.production(id).rhs.front();
    if (g.is_terminal(child)) {
      stack.leaf = child;
      return;
    }
    symbol = child;
    ++level;
  }
}

ExpansionStack advance_stack(const Psdg& g, const ExpansionStack& stack, const StatePoint& state,
                             Sampler& sampler) {
  const auto open = deepest_open_level(g, stack);
  if (open == 0) throw std::invalid_argument("advance_stack: the root expansion has terminated");

  ExpansionStack next;
  next.frames.assign(stack.frames.begin(), stack.frames.begin() + static_cast<std::ptrdiff_t>(open - 1));
  const auto& frame = stack.frames[open - 1];
  const auto& production = g.production(frame.production);
  const auto cursor = frame.cursor + 1;
  const auto symbol = production.rhs[cursor - 1];

  if (production.tail_recursive && cursor == production.length()) {
    // Trailing self symbol: same level, fresh production.
    expand_fresh(g, frame.symbol, frame.level, state, sampler, next);
    return next;
  }
  next.frames.push_back({frame.level, frame.symbol, frame.production, cursor});
  if (g.is_terminal(symbol)) {
    next.leaf = symbol;
  } else {
    expand_fresh(g, symbol, frame.level + 1, state, sampler, next);
  }
  return next;
}

Trajectory sample_trajectory(const Psdg& g, const SampleOptions& options) {
  if (options.horizon < 1) throw std::invalid_argument("sample_trajectory: horizon must be >= 1");
  Sampler sampler(options.seed);
  sampler.force_productions(options.forced_productions);

  Trajectory out;
  out.seed = options.seed;
  out.initial = options.initial_state ? *options.initial_state : sampler.draw_prior(g);
  out.steps.reserve(options.horizon);

  ExpansionStack stack;
  expand_fresh(g, g.start(), 1, out.initial, sampler, stack);
  const StatePoint* prev = &out.initial;
  for (std::size_t t = 1; t <= options.horizon; ++t) {
    StatePoint q = sampler.draw_transition(g, *prev, stack.leaf);
    const bool done = deepest_open_level(g, stack) == 0;
    out.steps.push_back({stack, std::move(q)});
    prev = &out.steps.back().state;
    if (done) {
      out.completed = true;
      break;
    }
    if (t < options.horizon) stack = advance_stack(g, stack, *prev, sampler);
  }
  return out;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void invalid(std::size_t t, const std::string& why) {
  throw InvalidTrajectory("step " + std::to_string(t) + ": " + why);
}

// Checks frames[from..] form a fresh top-down expansion of `symbol` and adds
// their production log-probabilities under `state`.
double score_fresh(const Psdg& g, const ExpansionStack& stack, std::size_t from, SymbolId symbol,
                   std::size_t level, const StatePoint& state, std::size_t t) {
  double log_p = 0.0;
  for (std::size_t k = from; k < stack.frames.size(); ++k) {
    const auto& frame = stack.frames[k];
    if (frame.production >= g.productions().size()) invalid(t, "unknown production");
    const auto& production = g.production(frame.production);
    if (frame.symbol != symbol || production.lhs != symbol) invalid(t, "frame symbol mismatch");
    if (frame.level != level) invalid(t, "frame level mismatch");
    if (frame.cursor != 1) invalid(t, "fresh expansion must start at cursor 1");
    log_p += std::log(g.production_probability(frame.production, state));
    symbol = production.rhs.front();
    ++level;
    if (g.is_terminal(symbol)) {
      if (k + 1 != stack.frames.size()) invalid(t, "frames continue below a terminal");
      if (stack.leaf != symbol) invalid(t, "leaf does not match the cursor symbol");
      return log_p;
    }
  }
  invalid(t, "stack ends before reaching a terminal");
}

}  // namespace

double trajectory_probability(const Psdg& g, const Trajectory& trajectory) {
  const auto& space = g.state_space();
  if (!space.well_formed(trajectory.initial)) throw InvalidTrajectory("malformed initial state");
  if (trajectory.steps.empty()) throw InvalidTrajectory("trajectory has no steps");

  double log_p = std::log(g.prior_probability(trajectory.initial));
  const StatePoint* context = &trajectory.initial;
  for (std::size_t t = 1; t <= trajectory.steps.size(); ++t) {
    const auto& step = trajectory.steps[t - 1];
    if (!space.well_formed(step.state)) invalid(t, "malformed state");
    if (step.stack.frames.empty()) invalid(t, "empty stack");
    if (t == 1) {
      log_p += score_fresh(g, step.stack, 0, g.start(), 1, *context, t);
    } else {
      const auto& prev = trajectory.steps[t - 2].stack;
      const auto open = deepest_open_level(g, prev);
      if (open == 0) invalid(t, "step follows a completed root expansion");
      for (std::size_t k = 0; k + 1 < open; ++k) {
        if (k >= step.stack.frames.size() || step.stack.frames[k] != prev.frames[k]) {
          invalid(t, "frame above the advancing level changed");
        }
      }
      const auto& frame = prev.frames[open - 1];
      const auto& production = g.production(frame.production);
      const auto cursor = frame.cursor + 1;
      if (production.tail_recursive && cursor == production.length()) {
        log_p += score_fresh(g, step.stack, open - 1, frame.symbol, frame.level, *context, t);
      } else {
        if (step.stack.frames.size() < open ||
            step.stack.frames[open - 1] != Frame{frame.level, frame.symbol, frame.production, cursor}) {
          invalid(t, "advancing frame did not move to the next cursor");
        }
        const auto symbol = production.rhs[cursor - 1];
        if (g.is_terminal(symbol)) {
          if (step.stack.frames.size() != open || step.stack.leaf != symbol) {
            invalid(t, "terminal cursor symbol must be the leaf");
          }
        } else {
          log_p += score_fresh(g, step.stack, open, symbol, frame.level + 1, *context, t);
        }
      }
    }
    log_p += std::log(g.transition_probability(*context, step.stack.leaf, step.state));
    const bool done = deepest_open_level(g, step.stack) == 0;
    if (done && t != trajectory.steps.size()) invalid(t, "root terminated before the last step");
    if (t == trajectory.steps.size() && done != trajectory.completed) {
      invalid(t, "completion flag disagrees with the final stack");
    }
    context = &step.state;
    if (log_p == kNegInf) return kNegInf;
  }
  return log_p;
}

}  // namespace psdg
