#include "psdg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "psdg/error.hpp"
#include "psdg/kernels.hpp"

namespace psdg {

FrameCatalog::FrameCatalog(const Psdg& g) {
  offset_.reserve(g.productions().size());
  for (const auto& p : g.productions()) {
    offset_.push_back(production_.size());
    for (std::size_t b = 1; b <= p.length(); ++b) {
      production_.push_back(p.id);
      cursor_.push_back(b);
    }
  }
}

// ---------------------------------------------------------------------------
// Stack catalog

std::size_t StackCatalog::KeyHash::operator()(const std::vector<FrameKey>& frames) const {
  std::size_t h = 0xcbf29ce484222325ull;
  for (const auto& f : frames) {
    h ^= (static_cast<std::size_t>(f.production) << 8) ^ f.cursor;
    h *= 0x100000001b3ull;
  }
  return h;
}

StackCatalog::StackCatalog(const Psdg& g) : g_(g) {
  stacks_.emplace_back();  // completed pseudo-stack
  stacks_.front().successors_ready = true;
  stacks_.front().root_terminates = true;

  // Fresh paths per nonterminal, children before parents (the first-child
  // relation is acyclic because X -> X is rejected).
  const auto& nts = g.nonterminals();
  paths_by_symbol_.assign(nts.size(), {});
  std::vector<int> state(nts.size(), 0);
  auto build = [&](auto&& self, SymbolId x) -> void {
    const auto ord = g.symbol(x).ordinal;
    if (state[ord] == 2) return;
    state[ord] = 2;
    for (auto a : g.productions_of(x)) {
      const auto child = g.production(a).rhs.front();
      if (g.is_terminal(child)) {
        paths_by_symbol_[ord].push_back(static_cast<int>(paths_.size()));
        paths_.push_back({x, {a}});
        continue;
      }
      self(self, child);
      for (int sub : paths_by_symbol_[g.symbol(child).ordinal]) {
        Path p{x, {a}};
        const auto& tail = paths_[static_cast<std::size_t>(sub)].productions;
        p.productions.insert(p.productions.end(), tail.begin(), tail.end());
        paths_by_symbol_[ord].push_back(static_cast<int>(paths_.size()));
        paths_.push_back(std::move(p));
      }
    }
  };
  for (auto x : nts) build(build, x);
}

std::span<const int> StackCatalog::paths_of(SymbolId symbol) const {
  return paths_by_symbol_[g_.symbol(symbol).ordinal];
}

StackId StackCatalog::intern(std::vector<FrameKey> frames) {
  if (auto it = index_.find(frames); it != index_.end()) return it->second;
  Stack s;
  s.frames = frames;
  const auto& last = g_.production(frames.back().production);
  s.leaf = last.rhs[frames.back().cursor - 1];
  s.terminates.assign(frames.size(), false);
  bool below = true;
  for (std::size_t k = frames.size(); k-- > 0;) {
    below = below && frames[k].cursor == g_.production(frames[k].production).length();
    s.terminates[k] = below;
  }
  s.root_terminates = s.terminates.front();
  const auto id = static_cast<StackId>(stacks_.size());
  stacks_.push_back(std::move(s));
  index_.emplace(std::move(frames), id);
  return id;
}

std::vector<StackCatalog::Successor> StackCatalog::initial() {
  std::vector<Successor> out;
  for (int p : paths_of(g_.start())) {
    std::vector<FrameKey> frames;
    for (auto a : paths_[static_cast<std::size_t>(p)].productions) frames.push_back({a, 1});
    out.push_back({intern(std::move(frames)), p});
  }
  return out;
}

const std::vector<StackCatalog::Successor>& StackCatalog::successors(StackId id) {
  if (stacks_[id].successors_ready) return stacks_[id].successors;
  const auto frames = stacks_[id].frames;
  std::vector<Successor> out;
  if (!stacks_[id].root_terminates) {
    std::size_t open = frames.size();
    while (stacks_[id].terminates[open - 1]) --open;
    std::vector<FrameKey> prefix(frames.begin(), frames.begin() + static_cast<std::ptrdiff_t>(open - 1));
    const auto& frame = frames[open - 1];
    const auto& production = g_.production(frame.production);
    const auto cursor = frame.cursor + 1;
    auto extend = [&](std::vector<FrameKey> base, SymbolId symbol) {
      for (int p : paths_of(symbol)) {
        auto next = base;
        for (auto a : paths_[static_cast<std::size_t>(p)].productions) next.push_back({a, 1});
        out.push_back({intern(std::move(next)), p});
      }
    };
    if (production.tail_recursive && cursor == production.length()) {
      extend(prefix, production.lhs);
    } else {
      prefix.push_back({frame.production, cursor});
      const auto symbol = production.rhs[cursor - 1];
      if (g_.is_terminal(symbol)) {
        out.push_back({intern(std::move(prefix)), -1});
      } else {
        extend(std::move(prefix), symbol);
      }
    }
  }
  auto& s = stacks_[id];
  s.successors = std::move(out);
  s.successors_ready = true;
  return s.successors;
}

std::size_t StackCatalog::stored_frames() const {
  std::size_t n = 0;
  for (const auto& s : stacks_) n += s.frames.size();
  return n;
}

// ---------------------------------------------------------------------------
// Belief state

BeliefState::Size BeliefState::entry_count() const {
  Size s;
  s.joint = joint_.size();
  s.tables = state_.size() + symbols_.size() + frames_.size() + terminals_.size() +
             completed_.size() + terminates_.size() + terminates_given_symbol_.size();
  return s;
}

std::vector<std::string> BeliefState::check_invariants(double tolerance) const {
  std::vector<std::string> out;
  const auto n = support_size_;
  const double total = std::accumulate(state_.begin(), state_.end(), 0.0);
  if (std::abs(total - 1.0) > tolerance) out.push_back("B_Q sums to " + std::to_string(total));

  auto in_unit = [&](const std::vector<double>& table, const char* name) {
    for (double v : table) {
      if (!(v >= 0.0 && v <= 1.0 + tolerance)) {
        out.push_back(std::string(name) + " entry outside [0,1]: " + std::to_string(v));
        return;
      }
    }
  };
  in_unit(state_, "B_Q");
  in_unit(symbols_, "B_N");
  in_unit(frames_, "B_P");
  in_unit(terminals_, "B_S");
  in_unit(completed_, "completed");
  in_unit(terminates_, "B_T");
  in_unit(terminates_given_symbol_, "B_TN");

  for (std::size_t q = 0; q < n; ++q) {
    if (state_[q] == 0.0) continue;
    for (std::size_t l = 1; l <= depth_; ++l) {
      double sn = 0.0, sp = 0.0;
      for (std::size_t x = 0; x < n_nonterminals_; ++x) sn += symbol(l, x, q);
      for (std::size_t f = 0; f < n_frames_; ++f) sp += frame(l, f, q);
      if (std::abs(sn - sp) > tolerance || sn > 1.0 + tolerance) {
        out.push_back("level " + std::to_string(l) + " state " + std::to_string(q) +
                      ": symbol mass " + std::to_string(sn) + ", production mass " +
                      std::to_string(sp));
      }
    }
    double st = completed_[q];
    for (std::size_t x = 0; x < n_terminals_; ++x) st += terminal(x, q);
    if (std::abs(st - 1.0) > tolerance) {
      out.push_back("state " + std::to_string(q) + ": terminal plus completed mass " +
                    std::to_string(st));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recognizer

namespace {

// Per-step production and path probabilities over one state list.
class PathWeights {
 public:
  PathWeights(const Psdg& g, const StackCatalog& stacks, const std::vector<StatePoint>& states)
      : g_(g), stacks_(stacks), states_(states), n_(states.size()) {}

  std::span<const double> path(int id) {
    const auto pid = static_cast<std::size_t>(id);
    if (pid >= paths_.size()) paths_.resize(stacks_.path_count());
    auto& v = paths_[pid];
    if (v.empty()) {
      v.assign(n_, 1.0);
      for (auto a : stacks_.path(id).productions) {
        const auto& p = production(a);
        for (std::size_t i = 0; i < n_; ++i) v[i] = v[i] * p[i];
      }
    }
    return v;
  }

 private:
  const std::vector<double>& production(ProductionId a) {
    if (productions_.empty()) productions_.resize(g_.productions().size());
    auto& v = productions_[a];
    if (v.empty()) {
      v.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) v[i] = g_.production_probability(a, states_[i]);
    }
    return v;
  }

  const Psdg& g_;
  const StackCatalog& stacks_;
  const std::vector<StatePoint>& states_;
  std::size_t n_;
  std::vector<std::vector<double>> productions_;
  std::vector<std::vector<double>> paths_;
};

// Row i: pi1(from[i], terminal, to[j]) for every member j of `to`, built as a
// Kronecker product of per-feature factors in member order.
std::vector<double> transition_matrix(const Psdg& g, const std::vector<StatePoint>& from,
                                      SymbolId terminal, const StateSet& to) {
  const auto m = static_cast<std::size_t>(to.size());
  std::vector<double> out(from.size() * m);
  std::vector<double> cur, next, factor;
  for (std::size_t i = 0; i < from.size(); ++i) {
    cur.assign(1, 1.0);
    for (std::size_t f = 0; f < g.features().size(); ++f) {
      const auto dist = g.feature_transition(f, from[i].values, terminal);
      const auto& allowed = to.allowed(f);
      factor.resize(allowed.size());
      for (std::size_t k = 0; k < allowed.size(); ++k) factor[k] = dist[allowed[k]];
      next.resize(cur.size() * factor.size());
      for (std::size_t j = 0; j < cur.size(); ++j) {
        kernels::scale(cur[j], factor, std::span<double>(next.data() + j * factor.size(), factor.size()));
      }
      cur.swap(next);
    }
    std::copy(cur.begin(), cur.end(), out.begin() + static_cast<std::ptrdiff_t>(i * m));
  }
  return out;
}

}  // namespace

Recognizer::Recognizer(const Psdg& g, InferenceOptions options)
    : g_(g), options_(options), frames_(g), stacks_(std::make_unique<StackCatalog>(g)) {}

void Recognizer::check_support(const StateSet& set) const {
  if (set.feature_count() != g_.features().size()) {
    throw std::invalid_argument("observation does not constrain every declared feature");
  }
  if (set.size() > options_.support_bound) {
    throw SupportTooLarge("support of " + std::to_string(set.size()) +
                          " states exceeds the bound " + std::to_string(options_.support_bound));
  }
}

BeliefState Recognizer::empty_belief(std::size_t time, const StateSet& support) const {
  BeliefState b;
  b.time_ = time;
  b.support_ = support;
  b.states_ = enumerate_states(support, options_.support_bound);
  b.support_size_ = b.states_.size();
  b.depth_ = g_.max_depth();
  b.n_nonterminals_ = g_.nonterminals().size();
  b.n_frames_ = frames_.size();
  b.n_terminals_ = g_.terminals().size();
  return b;
}

PlanDistribution Recognizer::marginals(std::size_t time, std::span<const StackId> rows,
                                       std::span<const double> mass) const {
  PlanDistribution out;
  out.time = time;
  const auto d = g_.max_depth();
  out.symbols.assign(d, std::vector<double>(g_.nonterminals().size(), 0.0));
  out.frames.assign(d, std::vector<double>(frames_.size(), 0.0));
  out.terminals.assign(g_.terminals().size(), 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double m = mass[r];
    if (rows[r] == StackCatalog::kCompleted) {
      out.completed += m;
      continue;
    }
    const auto& s = stacks_->stack(rows[r]);
    for (std::size_t k = 0; k < s.frames.size(); ++k) {
      const auto& p = g_.production(s.frames[k].production);
      out.symbols[k][g_.symbol(p.lhs).ordinal] += m;
      out.frames[k][frames_.index(p.id, s.frames[k].cursor)] += m;
    }
    out.terminals[g_.symbol(s.leaf).ordinal] += m;
  }
  return out;
}

PlanDistribution Recognizer::prediction_of(const BeliefState& belief) const {
  std::vector<double> mass(belief.rows_.size());
  for (std::size_t r = 0; r < mass.size(); ++r) mass[r] = kernels::sum(belief.row(r));
  return marginals(belief.time_, belief.rows_, mass);
}

void Recognizer::build_tables(BeliefState& b) const {
  const auto n = b.support_size_;
  const auto d = b.depth_;
  const auto nn = b.n_nonterminals_;
  b.state_.assign(n, 0.0);
  b.symbols_.assign(d * nn * n, 0.0);
  b.frames_.assign(d * b.n_frames_ * n, 0.0);
  b.terminals_.assign(b.n_terminals_ * n, 0.0);
  b.completed_.assign(n, 0.0);
  b.terminates_.assign(d * n, 0.0);
  b.terminates_given_symbol_.assign(d * nn * n, 0.0);

  auto block = [n](std::vector<double>& table, std::size_t i) {
    return std::span<double>(table.data() + i * n, n);
  };
  for (std::size_t r = 0; r < b.rows_.size(); ++r) {
    const auto row = b.row(r);
    kernels::axpy(1.0, row, b.state_);
    if (b.rows_[r] == StackCatalog::kCompleted) {
      kernels::axpy(1.0, row, b.completed_);
      continue;
    }
    const auto& s = stacks_->stack(b.rows_[r]);
    for (std::size_t k = 0; k < s.frames.size(); ++k) {
      const auto& p = g_.production(s.frames[k].production);
      const auto x = g_.symbol(p.lhs).ordinal;
      kernels::axpy(1.0, row, block(b.symbols_, k * nn + x));
      kernels::axpy(1.0, row, block(b.frames_, k * b.n_frames_ + frames_.index(p.id, s.frames[k].cursor)));
      if (s.terminates[k]) {
        kernels::axpy(1.0, row, block(b.terminates_, k));
        kernels::axpy(1.0, row, block(b.terminates_given_symbol_, k * nn + x));
      }
    }
    kernels::axpy(1.0, row, block(b.terminals_, g_.symbol(s.leaf).ordinal));
  }

  // B_TN divides by the unnormalized symbol mass, everything else by B_Q.
  for (std::size_t i = 0; i < d * nn; ++i) {
    auto num = block(b.terminates_given_symbol_, i);
    auto den = block(b.symbols_, i);
    for (std::size_t q = 0; q < n; ++q) num[q] = den[q] > 0.0 ? num[q] / den[q] : 0.0;
  }
  auto normalize = [&](std::vector<double>& table) {
    for (std::size_t i = 0; i < table.size(); ++i) {
      const double w = b.state_[i % n];
      table[i] = w > 0.0 ? table[i] / w : 0.0;
    }
  };
  normalize(b.symbols_);
  normalize(b.frames_);
  normalize(b.terminals_);
  normalize(b.completed_);
  normalize(b.terminates_);
}

BeliefState Recognizer::init_belief(const std::optional<StateSet>& initial, double* evidence_out,
                                    std::size_t start_time) {
  const auto support = initial ? *initial : StateSet::full(g_.state_space());
  check_support(support);
  auto b = empty_belief(start_time, support);
  const auto n = b.support_size_;

  std::vector<double> prior(n);
  for (std::size_t i = 0; i < n; ++i) prior[i] = g_.prior_probability(b.states_[i]);
  const double z = kernels::sum(prior);
  if (evidence_out) *evidence_out = z;
  if (!(z > 0.0)) throw ZeroEvidence("initial observation has zero prior probability");
  kernels::scale(1.0 / z, prior, prior);

  PathWeights weights(g_, *stacks_, b.states_);
  auto starts = stacks_->initial();
  std::sort(starts.begin(), starts.end(), [](const auto& a, const auto& c) { return a.next < c.next; });
  b.rows_.reserve(starts.size());
  b.joint_.assign(starts.size() * n, 0.0);
  for (std::size_t r = 0; r < starts.size(); ++r) {
    b.rows_.push_back(starts[r].next);
    kernels::mul_add(weights.path(starts[r].path), prior,
                     std::span<double>(b.joint_.data() + r * n, n));
  }
  build_tables(b);
  return b;
}

Explanation Recognizer::explain(const BeliefState& belief, const StateSet& observed) {
  check_support(observed);
  Explanation e;
  e.time = belief.time_;
  e.observed = observed;
  const auto n = belief.support_size_;
  const auto m = static_cast<std::size_t>(observed.size());

  std::vector<std::vector<double>> transitions(g_.symbols().size());
  std::vector<std::size_t> frozen(n);  // completed stack: Q stays put
  for (std::size_t i = 0; i < n; ++i) frozen[i] = observed.position(belief.states_[i]);

  const auto rows = belief.rows_.size();
  e.pushed.assign(rows * m, 0.0);
  e.row_mass.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto j = belief.row(r);
    std::span<double> out(e.pushed.data() + r * m, m);
    if (belief.rows_[r] == StackCatalog::kCompleted) {
      for (std::size_t i = 0; i < n; ++i) {
        if (frozen[i] != StateSet::npos) out[frozen[i]] += j[i];
      }
    } else {
      const auto leaf = stacks_->stack(belief.rows_[r]).leaf;
      auto& t = transitions[leaf];
      if (t.empty()) t = transition_matrix(g_, belief.states_, leaf, observed);
      for (std::size_t i = 0; i < n; ++i) {
        if (j[i] == 0.0) continue;
        kernels::axpy(j[i], std::span<const double>(t.data() + i * m, m), out);
      }
    }
    e.row_mass[r] = kernels::sum(out);
  }

  double z = 0.0;
  for (double v : e.row_mass) z += v;
  e.evidence = z;
  if (!(z > 0.0)) {
    throw ZeroEvidence("observation at t=" + std::to_string(belief.time_) +
                       " has zero probability under the current belief");
  }
  const double inv = 1.0 / z;
  e.state_posterior.assign(m, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    kernels::axpy(1.0, std::span<const double>(e.pushed.data() + r * m, m), e.state_posterior);
  }
  kernels::scale(inv, e.state_posterior, e.state_posterior);
  for (auto& v : e.row_mass) v *= inv;
  e.plans = marginals(e.time, belief.rows_, e.row_mass);
  return e;
}

Prediction Recognizer::predict(const BeliefState& belief, const Explanation& e) {
  Prediction p;
  p.time = belief.time_ + 1;
  const auto m = static_cast<std::size_t>(e.observed.size());
  const auto states = enumerate_states(e.observed, options_.support_bound);
  PathWeights weights(g_, *stacks_, states);

  std::unordered_map<StackId, std::size_t> slot;
  std::vector<StackId> ids;
  std::vector<std::vector<double>> acc;
  auto target = [&](StackId id) -> std::span<double> {
    auto [it, fresh] = slot.emplace(id, acc.size());
    if (fresh) {
      ids.push_back(id);
      acc.emplace_back(m, 0.0);
    }
    return acc[it->second];
  };

  for (std::size_t r = 0; r < belief.rows_.size(); ++r) {
    const std::span<const double> pushed(e.pushed.data() + r * m, m);
    if (e.row_mass[r] == 0.0) continue;
    const auto id = belief.rows_[r];
    if (id == StackCatalog::kCompleted || stacks_->stack(id).root_terminates) {
      kernels::axpy(1.0, pushed, target(StackCatalog::kCompleted));
      continue;
    }
    for (const auto& next : stacks_->successors(id)) {
      auto out = target(next.next);
      if (next.path < 0) {
        kernels::axpy(1.0, pushed, out);
      } else {
        kernels::mul_add(weights.path(next.path), pushed, out);
      }
    }
  }

  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ids[a] < ids[b]; });
  const double inv = 1.0 / e.evidence;
  p.rows.reserve(ids.size());
  p.joint.assign(ids.size() * m, 0.0);
  std::vector<double> mass(ids.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    p.rows.push_back(ids[order[k]]);
    std::span<double> row(p.joint.data() + k * m, m);
    kernels::scale(inv, acc[order[k]], row);
  }
  if (options_.debug_perturbation != 0.0) {
    for (std::size_t k = 0; k < p.rows.size(); ++k) {
      if (p.rows[k] == StackCatalog::kCompleted) continue;
      p.joint[k * m] += options_.debug_perturbation;
      break;
    }
  }
  for (std::size_t k = 0; k < p.rows.size(); ++k) {
    mass[k] = kernels::sum(std::span<const double>(p.joint.data() + k * m, m));
  }
  p.plans = marginals(p.time, p.rows, mass);
  return p;
}

BeliefState Recognizer::update(const BeliefState& belief, const Explanation& e, Prediction p) {
  auto b = empty_belief(belief.time_ + 1, e.observed);
  b.rows_ = std::move(p.rows);
  b.joint_ = std::move(p.joint);
  build_tables(b);
  return b;
}

Recognizer::StepResult Recognizer::step(const BeliefState& belief, const StateSet& observed) {
  auto e = explain(belief, observed);
  auto p = predict(belief, e);
  StepReport report;
  report.time = e.time;
  report.evidence = e.evidence;
  report.log_evidence = std::log(e.evidence);
  report.support = observed;
  report.state_posterior = e.state_posterior;
  report.explanation = e.plans;
  report.prediction = p.plans;
  auto next = update(belief, e, std::move(p));
  return {std::move(report), std::move(next)};
}

double Recognizer::symbol_transition(const BeliefState& belief, std::size_t level, SymbolId symbol,
                                     std::size_t prev, const StateSet& next_set,
                                     std::size_t next) const {
  const auto target = next_set.member(next);
  const auto& from = belief.states_[prev];
  double num = 0.0, den = 0.0;
  for (std::size_t r = 0; r < belief.rows_.size(); ++r) {
    if (belief.rows_[r] == StackCatalog::kCompleted) continue;
    const auto& s = stacks_->stack(belief.rows_[r]);
    if (s.frames.size() < level) continue;
    if (g_.production(s.frames[level - 1].production).lhs != symbol) continue;
    const double w = belief.row(r)[prev];
    if (w == 0.0) continue;
    den += w;
    num += w * g_.transition_probability(from, s.leaf, target);
  }
  return den > 0.0 ? num / den : 0.0;
}

double Recognizer::conditional_production_given_symbol(const BeliefState& belief, std::size_t level,
                                                       std::size_t frame_index, SymbolId symbol,
                                                       std::size_t q) const {
  const double bn = belief.symbol(level, g_.symbol(symbol).ordinal, q);
  if (!(bn > 0.0)) {
    throw UndefinedConditional("B_N(" + std::to_string(level) + ", " + g_.name(symbol) +
                               ") is zero for this state");
  }
  if (g_.production(frames_.production(frame_index)).lhs != symbol) return 0.0;
  return std::min(1.0, belief.frame(level, frame_index, q) / bn);
}

// ---------------------------------------------------------------------------
// Streaming driver

OnlineRecognizer::OnlineRecognizer(const Psdg& g, InferenceOptions options, ZeroEvidencePolicy policy)
    : recognizer_(g, options), policy_(policy) {}

void OnlineRecognizer::ensure_started() {
  if (!belief_) belief_ = recognizer_.init_belief();
}

const BeliefState& OnlineRecognizer::belief() {
  ensure_started();
  return *belief_;
}

StepReport OnlineRecognizer::observe(const Observation& obs) {
  if (last_time_ && obs.time <= *last_time_) {
    throw std::invalid_argument("observation times must be strictly increasing (got t=" +
                                std::to_string(obs.time) + " after t=" +
                                std::to_string(*last_time_) + ")");
  }
  last_time_ = obs.time;

  auto restart = [&](std::size_t start_time, double* ev) {
    belief_ = recognizer_.init_belief(obs.states, ev, start_time);
    StepReport r;
    r.time = obs.time;
    r.support = obs.states;
    const auto w = belief_->state_weights();
    r.state_posterior.assign(w.begin(), w.end());
    r.prediction = recognizer_.prediction_of(*belief_);
    return r;
  };

  if (obs.time == 0) {
    double ev = 0.0;
    auto r = restart(1, &ev);
    r.evidence = ev;
    log_evidence_ += std::log(ev);
    r.log_evidence = log_evidence_;
    return r;
  }

  ensure_started();
  const auto full = StateSet::full(recognizer_.grammar().state_space());
  while (belief_->time() < obs.time) {
    auto res = recognizer_.step(*belief_, full);
    log_evidence_ += res.report.log_evidence;
    belief_ = std::move(res.belief);
  }
  try {
    auto res = recognizer_.step(*belief_, obs.states);
    log_evidence_ += res.report.log_evidence;
    res.report.log_evidence = log_evidence_;
    belief_ = std::move(res.belief);
    return std::move(res.report);
  } catch (const ZeroEvidence&) {
    if (policy_ == ZeroEvidencePolicy::Error) throw;
  }
  auto r = restart(obs.time + 1, nullptr);
  r.evidence = 0.0;
  r.reinitialized = true;
  r.log_evidence = log_evidence_;
  return r;
}

}  // namespace psdg
