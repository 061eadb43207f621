#include "psdg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "psdg/error.hpp"

namespace psdg {

double JointTable::total_mass() const {
  double s = 0.0;
  for (double p : probability_) s += p;
  return s;
}

StateIndex JointTable::state(std::size_t entry, std::size_t t) const {
  if (t == 0) return initial(entry);
  const auto len = length_[entry];
  if (t > len) {
    if (!completed(entry)) throw std::out_of_range("JointTable::state: time beyond the horizon");
    t = len;
  }
  return data_[offset_[entry] + 2 * t];
}

bool JointTable::terminates(std::size_t entry, std::size_t t, std::size_t level) const {
  const auto& flags = terminates_[data_[offset_[entry] + 2 * t - 1]];
  return level >= 1 && level <= flags.size() && flags[level - 1];
}

Trajectory JointTable::trajectory(std::size_t entry) const {
  Trajectory out;
  out.initial = space_.decode(initial(entry));
  for (std::size_t t = 1; t <= length(entry); ++t) {
    out.steps.push_back({stack(entry, t), space_.decode(state(entry, t))});
  }
  out.completed = completed(entry);
  return out;
}

// Depth-first enumeration of executions. The expansion rules are implemented
// here a second time, directly from the definitions, rather than shared with
// the sampler or the recognizer.
class JointBuilder {
 public:
  JointBuilder(const Psdg& g, std::size_t horizon, std::span<const Observation> evidence,
               std::uint64_t bound)
      : g_(g), horizon_(horizon), bound_(bound) {
    const auto n = g.state_space().size();
    if (n > 1'000'000) throw ExplosionBound("state space too large to enumerate");
    for (StateIndex i = 0; i < n; ++i) states_.push_back(g.state_space().decode(i));
    for (const auto& obs : evidence) {
      if (obs.time > horizon) continue;
      allowed_.emplace(obs.time, obs.states);
    }
    table_.horizon_ = horizon;
    table_.space_ = g.state_space();
  }

  JointTable run() {
    for (StateIndex q0 = 0; q0 < states_.size(); ++q0) {
      const double p0 = g_.prior_probability(states_[q0]);
      if (p0 <= 0.0 || !admits(0, q0)) continue;
      path_.assign(1, static_cast<std::uint32_t>(q0));
      for (auto& [stack, p] : fresh(g_.start(), 1, states_[q0])) {
        walk(1, std::move(stack), q0, p0 * p);
      }
    }
    return std::move(table_);
  }

 private:
  bool admits(std::size_t t, StateIndex q) const {
    auto it = allowed_.find(t);
    return it == allowed_.end() || it->second.contains(states_[q]);
  }

  // Every top-down expansion of `symbol` at `level` with its probability.
  std::vector<std::pair<ExpansionStack, double>> fresh(SymbolId symbol, std::size_t level,
                                                       const StatePoint& q) const {
    std::vector<std::pair<ExpansionStack, double>> out;
    for (auto a : g_.productions_of(symbol)) {
      const double p = g_.production_probability(a, q);
      if (p <= 0.0) continue;
      const auto child = g_.production(a).rhs[0];
      Frame f{level, symbol, a, 1};
      if (g_.is_terminal(child)) {
        out.push_back({ExpansionStack{{f}, child}, p});
        continue;
      }
      for (auto& [below, pb] : fresh(child, level + 1, q)) {
        ExpansionStack s;
        s.frames.push_back(f);
        s.frames.insert(s.frames.end(), below.frames.begin(), below.frames.end());
        s.leaf = below.leaf;
        out.push_back({std::move(s), p * pb});
      }
    }
    return out;
  }

  bool finished(const Frame& f) const { return f.cursor == g_.production(f.production).length(); }

  bool root_done(const ExpansionStack& s) const {
    return std::all_of(s.frames.begin(), s.frames.end(), [&](const Frame& f) { return finished(f); });
  }

  std::vector<std::pair<ExpansionStack, double>> successors(const ExpansionStack& s,
                                                            const StatePoint& q) const {
    std::size_t k = s.frames.size();
    while (finished(s.frames[k - 1])) --k;
    const auto& f = s.frames[k - 1];
    const auto& prod = g_.production(f.production);
    ExpansionStack base;
    base.frames.assign(s.frames.begin(), s.frames.begin() + static_cast<std::ptrdiff_t>(k - 1));
    std::vector<std::pair<ExpansionStack, double>> out;
    auto attach = [&](SymbolId symbol, std::size_t level) {
      for (auto& [below, p] : fresh(symbol, level, q)) {
        ExpansionStack n = base;
        n.frames.insert(n.frames.end(), below.frames.begin(), below.frames.end());
        n.leaf = below.leaf;
        out.push_back({std::move(n), p});
      }
    };
    const auto next = f.cursor + 1;
    const auto symbol = prod.rhs[next - 1];
    if (next == prod.length() && symbol == prod.lhs) {
      attach(symbol, f.level);
      return out;
    }
    base.frames.push_back({f.level, f.symbol, f.production, next});
    if (g_.is_terminal(symbol)) {
      base.leaf = symbol;
      out.push_back({std::move(base), 1.0});
    } else {
      attach(symbol, f.level + 1);
    }
    return out;
  }

  std::uint32_t intern(const ExpansionStack& s) {
    for (std::size_t i = 0; i < table_.stacks_.size(); ++i) {
      if (table_.stacks_[i] == s) return static_cast<std::uint32_t>(i);
    }
    table_.stacks_.push_back(s);
    std::vector<bool> flags(s.frames.size());
    bool below = true;
    for (std::size_t k = s.frames.size(); k-- > 0;) {
      below = below && finished(s.frames[k]);
      flags[k] = below;
    }
    table_.terminates_.push_back(std::move(flags));
    return static_cast<std::uint32_t>(table_.stacks_.size() - 1);
  }

  void record(bool completed, double p) {
    if (table_.probability_.size() >= bound_) {
      throw ExplosionBound("joint enumeration exceeds " + std::to_string(bound_) + " entries");
    }
    table_.offset_.push_back(table_.data_.size());
    table_.data_.insert(table_.data_.end(), path_.begin(), path_.end());
    table_.length_.push_back(static_cast<std::uint32_t>((path_.size() - 1) / 2));
    table_.completed_.push_back(completed ? 1 : 0);
    table_.probability_.push_back(p);
  }

  void walk(std::size_t t, ExpansionStack stack, StateIndex prev, double p) {
    const auto sid = intern(stack);
    const bool done = root_done(stack);
    for (StateIndex q = 0; q < states_.size(); ++q) {
      const double pt = g_.transition_probability(states_[prev], stack.leaf, states_[q]);
      if (pt <= 0.0 || !admits(t, q)) continue;
      const double pq = p * pt;
      path_.push_back(sid);
      path_.push_back(static_cast<std::uint32_t>(q));
      if (done) {
        bool ok = true;
        for (std::size_t u = t + 1; u <= horizon_ && ok; ++u) ok = admits(u, q);
        if (ok) record(true, pq);
      } else if (t == horizon_) {
        record(false, pq);
      } else {
        for (auto& [next, pn] : successors(stack, states_[q])) walk(t + 1, std::move(next), q, pq * pn);
      }
      path_.resize(path_.size() - 2);
    }
  }

  const Psdg& g_;
  std::size_t horizon_;
  std::uint64_t bound_;
  std::vector<StatePoint> states_;
  std::map<std::size_t, StateSet> allowed_;
  std::vector<std::uint32_t> path_;
  JointTable table_;
};

JointTable enumerate_joint(const Psdg& g, std::size_t horizon, std::uint64_t entry_bound) {
  return JointBuilder(g, horizon, {}, entry_bound).run();
}

JointTable enumerate_consistent(const Psdg& g, std::size_t horizon,
                                std::span<const Observation> evidence, std::uint64_t entry_bound) {
  return JointBuilder(g, horizon, evidence, entry_bound).run();
}

namespace query {

Query symbol(std::size_t t, std::size_t level, SymbolId symbol) {
  return {[=](const JointTable& j, std::size_t e) {
    if (t < 1 || t > j.length(e)) return false;
    const auto& s = j.stack(e, t);
    return level >= 1 && level <= s.frames.size() && s.frames[level - 1].symbol == symbol;
  }};
}

Query frame(std::size_t t, std::size_t level, ProductionId production, std::size_t cursor) {
  return {[=](const JointTable& j, std::size_t e) {
    if (t < 1 || t > j.length(e)) return false;
    const auto& s = j.stack(e, t);
    return level >= 1 && level <= s.frames.size() && s.frames[level - 1].production == production &&
           s.frames[level - 1].cursor == cursor;
  }};
}

Query terminal(std::size_t t, SymbolId terminal) {
  return {[=](const JointTable& j, std::size_t e) {
    return t >= 1 && t <= j.length(e) && j.stack(e, t).leaf == terminal;
  }};
}

Query state(std::size_t t, StateSet states) {
  return {[=, states = std::move(states)](const JointTable& j, std::size_t e) {
    return states.contains(j.state_point(e, t));
  }};
}

Query terminates(std::size_t t, std::size_t level) {
  return {[=](const JointTable& j, std::size_t e) {
    return t >= 1 && t <= j.length(e) && j.terminates(e, t, level);
  }};
}

Query completed_before(std::size_t t) {
  return {[=](const JointTable& j, std::size_t e) { return j.completed(e) && j.length(e) < t; }};
}

Query all(std::vector<Query> parts) {
  return {[parts = std::move(parts)](const JointTable& j, std::size_t e) {
    for (const auto& p : parts) {
      if (!p.holds(j, e)) return false;
    }
    return true;
  }};
}

}  // namespace query

namespace {

bool consistent(const JointTable& j, std::size_t e, std::span<const Observation> evidence) {
  for (const auto& obs : evidence) {
    if (obs.time > j.horizon()) {
      throw std::invalid_argument("evidence at t=" + std::to_string(obs.time) +
                                  " lies beyond the joint horizon");
    }
    if (!obs.states.contains(j.state_point(e, obs.time))) return false;
  }
  return true;
}

PlanDistribution plan_marginals(const Psdg& g, const FrameCatalog& frames, const JointTable& j,
                                std::size_t t, double mass) {
  PlanDistribution out;
  out.time = t;
  out.symbols.assign(g.max_depth(), std::vector<double>(g.nonterminals().size(), 0.0));
  out.frames.assign(g.max_depth(), std::vector<double>(frames.size(), 0.0));
  out.terminals.assign(g.terminals().size(), 0.0);
  for (std::size_t e = 0; e < j.size(); ++e) {
    const double w = j.probability(e) / mass;
    if (t > j.length(e)) {
      out.completed += w;
      continue;
    }
    const auto& s = j.stack(e, t);
    for (std::size_t k = 0; k < s.frames.size(); ++k) {
      out.symbols[k][g.symbol(s.frames[k].symbol).ordinal] += w;
      out.frames[k][frames.index(s.frames[k].production, s.frames[k].cursor)] += w;
    }
    out.terminals[g.symbol(s.leaf).ordinal] += w;
  }
  return out;
}

double max_abs(const PlanDistribution& a, const PlanDistribution& b) {
  double d = std::abs(a.completed - b.completed);
  auto cmp = [&](const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = std::max(x.size(), y.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double u = i < x.size() ? x[i] : 0.0;
      const double v = i < y.size() ? y[i] : 0.0;
      d = std::max(d, std::abs(u - v));
    }
  };
  const auto levels = std::max(a.symbols.size(), b.symbols.size());
  static const std::vector<double> empty;
  for (std::size_t l = 0; l < levels; ++l) {
    cmp(l < a.symbols.size() ? a.symbols[l] : empty, l < b.symbols.size() ? b.symbols[l] : empty);
    cmp(l < a.frames.size() ? a.frames[l] : empty, l < b.frames.size() ? b.frames[l] : empty);
  }
  cmp(a.terminals, b.terminals);
  if (a.time != b.time) d = std::max(d, 1.0);
  return d;
}

}  // namespace

double exact_posterior(const JointTable& joint, std::span<const Observation> evidence,
                       const Query& q) {
  double num = 0.0, den = 0.0;
  for (std::size_t e = 0; e < joint.size(); ++e) {
    if (!consistent(joint, e, evidence)) continue;
    den += joint.probability(e);
    if (q.holds(joint, e)) num += joint.probability(e);
  }
  if (!(den > 0.0)) throw ZeroEvidenceMass("no execution is consistent with the evidence");
  return num / den;
}

std::vector<StepReport> reference_reports(const Psdg& g, std::span<const Observation> stream,
                                          std::uint64_t entry_bound) {
  const FrameCatalog frames(g);
  std::vector<StepReport> out;
  double previous_mass = 1.0;
  for (std::size_t k = 0; k < stream.size(); ++k) {
    const auto t = stream[k].time;
    if (k > 0 && t <= stream[k - 1].time) {
      throw std::invalid_argument("observation times must be strictly increasing");
    }
    const auto joint = enumerate_consistent(g, t + 1, stream.first(k + 1), entry_bound);
    const double mass = joint.total_mass();
    if (!(mass > 0.0)) throw ZeroEvidenceMass("observation stream has probability zero");

    StepReport r;
    r.time = t;
    r.evidence = mass / previous_mass;
    r.log_evidence = std::log(mass);
    r.support = stream[k].states;
    r.state_posterior.assign(static_cast<std::size_t>(r.support.size()), 0.0);
    for (std::size_t e = 0; e < joint.size(); ++e) {
      r.state_posterior[r.support.position(joint.state_point(e, t))] += joint.probability(e) / mass;
    }
    if (t > 0) r.explanation = plan_marginals(g, frames, joint, t, mass);
    r.prediction = plan_marginals(g, frames, joint, t + 1, mass);
    out.push_back(std::move(r));
    previous_mass = mass;
  }
  return out;
}

double Deviation::max() const {
  return std::max({evidence, log_evidence, state, explanation, prediction});
}

Deviation compare_reports(const StepReport& actual, const StepReport& expected) {
  Deviation d;
  d.evidence = std::abs(actual.evidence - expected.evidence);
  d.log_evidence = std::abs(std::expm1(actual.log_evidence - expected.log_evidence));
  if (actual.time != expected.time || actual.support != expected.support ||
      actual.state_posterior.size() != expected.state_posterior.size()) {
    d.state = 1.0;
  } else {
    for (std::size_t i = 0; i < actual.state_posterior.size(); ++i) {
      d.state = std::max(d.state, std::abs(actual.state_posterior[i] - expected.state_posterior[i]));
    }
  }
  if (actual.explanation.has_value() != expected.explanation.has_value()) {
    d.explanation = 1.0;
  } else if (actual.explanation) {
    d.explanation = max_abs(*actual.explanation, *expected.explanation);
  }
  d.prediction = max_abs(actual.prediction, expected.prediction);
  return d;
}

}  // namespace psdg
