#include "psdg/pcfg.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "psdg/error.hpp"

namespace psdg {

using Matrix = Eigen::MatrixXd;

std::string Pcfg::key(Kind kind, SymbolId base, StateIndex from, StateIndex to) {
  return std::to_string(static_cast<int>(kind)) + ':' + std::to_string(base) + ':' +
         std::to_string(from) + ':' + std::to_string(to);
}

std::uint32_t Pcfg::add_symbol(Symbol s) {
  const auto k = key(s.kind, s.base, s.from, s.to);
  if (auto it = symbol_index_.find(k); it != symbol_index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(symbols_.size());
  symbols_.push_back(std::move(s));
  symbol_index_.emplace(k, id);
  return id;
}

std::uint32_t Pcfg::find(Kind kind, SymbolId base, StateIndex from, StateIndex to) const {
  if (kind == Kind::Terminal) from = to = 0;
  auto it = symbol_index_.find(key(kind, base, from, to));
  return it == symbol_index_.end() ? npos : it->second;
}

namespace {

std::string production_key(std::uint32_t lhs, const std::vector<std::uint32_t>& rhs) {
  std::string k = std::to_string(lhs);
  for (auto r : rhs) {
    k += ' ';
    k += std::to_string(r);
  }
  return k;
}

}  // namespace

std::uint32_t Pcfg::find_production(std::uint32_t lhs, const std::vector<std::uint32_t>& rhs) const {
  auto it = production_index_.find(production_key(lhs, rhs));
  return it == production_index_.end() ? npos : it->second;
}

std::uint32_t Pcfg::add_production(std::uint32_t lhs, std::vector<std::uint32_t> rhs, double probability) {
  const auto key = production_key(lhs, rhs);
  if (auto it = production_index_.find(key); it != production_index_.end()) {
    // PSDG productions with equal right-hand sides collapse into one rule.
    productions_[it->second].probability += probability;
    return it->second;
  }
  const auto id = static_cast<std::uint32_t>(productions_.size());
  production_index_.emplace(key, id);
  productions_.push_back({lhs, std::move(rhs), probability});
  return id;
}

std::size_t Pcfg::count(Kind kind) const {
  std::size_t n = 0;
  for (const auto& s : symbols_) n += s.kind == kind;
  return n;
}

std::size_t Pcfg::tuple_production_count() const {
  std::size_t n = 0;
  for (const auto& p : productions_) n += symbols_[p.lhs].kind == Kind::Tuple;
  return n;
}

std::string Pcfg::to_text(const Psdg& g) const {
  std::string out = "# PCFG over state-annotated symbols <from,X,to>\n";
  const auto n = g.state_space().size();
  for (StateIndex q = 0; q < n; ++q) {
    out += "# state " + std::to_string(q) + " = " + g.state_label(g.state_space().decode(q)) + '\n';
  }
  char buf[64];
  for (const auto& p : productions_) {
    out += symbols_[p.lhs].name;
    out += " ->";
    for (auto r : p.rhs) {
      out += ' ';
      out += symbols_[r].name;
    }
    std::snprintf(buf, sizeof buf, " # %.17g\n", p.probability);
    out += buf;
  }
  return out;
}

Pcfg to_pcfg(const Psdg& g, std::uint64_t production_bound) {
  const auto nq = g.state_space().size();
  if (nq > 4096) throw ExplosionBound("state space too large for the PCFG construction");
  const auto n = static_cast<Eigen::Index>(nq);
  std::vector<StatePoint> states;
  for (StateIndex q = 0; q < nq; ++q) states.push_back(g.state_space().decode(q));

  // beta[X](qi, qf): total weight of complete expansions of X from qi ending in
  // qf. Terminals: pi1. Nonterminals are solved children first; a trailing
  // self symbol makes the equation linear: beta = C + D beta.
  std::vector<Matrix> beta(g.symbols().size());
  for (auto x : g.terminals()) {
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        m(i, j) = g.transition_probability(states[static_cast<std::size_t>(i)], x,
                                           states[static_cast<std::size_t>(j)]);
      }
    }
    beta[x] = std::move(m);
  }
  std::vector<Eigen::VectorXd> weight(g.productions().size());
  for (const auto& p : g.productions()) {
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = g.production_probability(p.id, states[static_cast<std::size_t>(i)]);
    weight[p.id] = std::move(w);
  }
  std::vector<int> mark(g.symbols().size(), 0);
  auto solve = [&](auto&& self, SymbolId x) -> void {
    if (mark[x]) return;
    mark[x] = 1;
    Matrix c = Matrix::Zero(n, n);
    Matrix d = Matrix::Zero(n, n);
    for (auto a : g.productions_of(x)) {
      const auto& p = g.production(a);
      const auto k = p.tail_recursive ? p.length() - 1 : p.length();
      Matrix w = weight[a].asDiagonal();
      for (std::size_t j = 0; j < k; ++j) {
        if (!g.is_terminal(p.rhs[j])) self(self, p.rhs[j]);
        w = w * beta[p.rhs[j]];
      }
      (p.tail_recursive ? d : c) += w;
    }
    Matrix id = Matrix::Identity(n, n);
    beta[x] = (id - d).fullPivLu().solve(c);
    for (Eigen::Index i = 0; i < beta[x].size(); ++i) {
      double& v = beta[x].data()[i];
      if (std::abs(v) < 1e-300) v = 0.0;
    }
  };
  for (auto x : g.nonterminals()) solve(solve, x);

  Pcfg out;
  out.add_symbol({Pcfg::Kind::Start, "START", 0, 0, 0});
  auto tuple_name = [&](SymbolId x, StateIndex from, StateIndex to) {
    return '<' + std::to_string(from) + ',' + g.name(x) + ',' + std::to_string(to) + '>';
  };
  std::deque<std::uint32_t> queue;
  auto reach = [&](Pcfg::Kind kind, SymbolId x, StateIndex from, StateIndex to) {
    const auto before = out.symbols().size();
    const auto id = out.add_symbol({kind, tuple_name(x, from, to), x, from, to});
    if (out.symbols().size() != before) queue.push_back(id);
    return id;
  };
  auto emit = [&](std::uint32_t lhs, std::vector<std::uint32_t> rhs, double p) {
    if (out.productions().size() >= production_bound) {
      throw ExplosionBound("PCFG construction exceeds " + std::to_string(production_bound) +
                           " productions");
    }
    out.add_production(lhs, std::move(rhs), p);
  };
  auto b = [&](SymbolId x, StateIndex from, StateIndex to) {
    return beta[x](static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to));
  };

  const auto s = g.start();
  for (StateIndex q0 = 0; q0 < nq; ++q0) {
    const double prior = g.prior_probability(states[q0]);
    if (prior <= 0.0) continue;
    for (StateIndex qf = 0; qf < nq; ++qf) {
      const double bs = b(s, q0, qf);
      if (bs <= 0.0) continue;
      emit(0, {reach(Pcfg::Kind::Tuple, s, q0, qf)}, prior * bs);
    }
  }

  std::vector<std::uint32_t> rhs;
  std::vector<StateIndex> cut;
  while (!queue.empty()) {
    const auto id = queue.front();
    queue.pop_front();
    const auto sym = out.symbols()[id];
    if (sym.kind == Pcfg::Kind::Preterminal) {
      const auto leaf = out.add_symbol({Pcfg::Kind::Terminal, g.name(sym.base), sym.base, 0, 0});
      emit(id, {leaf}, 1.0);
      continue;
    }
    const double total = b(sym.base, sym.from, sym.to);
    for (auto a : g.productions_of(sym.base)) {
      const auto& p = g.production(a);
      const double pa = g.production_probability(a, states[sym.from]);
      if (pa <= 0.0) continue;
      const auto k = p.length();
      // Enumerate intermediate states cut[1..k-1]; cut[0] = from, cut[k] = to.
      cut.assign(k + 1, 0);
      cut[0] = sym.from;
      cut[k] = sym.to;
      auto rec = [&](auto&& self, std::size_t j, double w) -> void {
        if (j == k - 1) {
          const double last = b(p.rhs[j], cut[j], cut[k]);
          if (last <= 0.0) return;
          rhs.clear();
          for (std::size_t c = 0; c < k; ++c) {
            const auto kind = g.is_terminal(p.rhs[c]) ? Pcfg::Kind::Preterminal : Pcfg::Kind::Tuple;
            rhs.push_back(reach(kind, p.rhs[c], cut[c], cut[c + 1]));
          }
          emit(id, rhs, pa * w * last / total);
          return;
        }
        for (StateIndex q = 0; q < nq; ++q) {
          const double v = b(p.rhs[j], cut[j], q);
          if (v <= 0.0) continue;
          cut[j + 1] = q;
          self(self, j + 1, w * v);
        }
      };
      rec(rec, 0, 1.0);
    }
  }
  return out;
}

namespace {

struct TreeBuilder {
  const Psdg& g;
  const Pcfg& pcfg;
  const Trajectory& tr;

  StateIndex state(std::size_t t) const {
    return g.state_space().encode(t == 0 ? tr.initial : tr.steps[t - 1].state);
  }

  std::uint32_t lookup(Pcfg::Kind kind, SymbolId x, StateIndex from = 0, StateIndex to = 0) const {
    const auto id = pcfg.find(kind, x, from, to);
    if (id == Pcfg::npos) {
      throw UnknownProduction("symbol <" + std::to_string(from) + ',' + g.name(x) + ',' +
                              std::to_string(to) + "> is not in the PCFG");
    }
    return id;
  }

  // Expansion of the frame at stack position k starting at step t (1-based).
  // Returns the subtree and the last step it covers.
  std::pair<PcfgTree, std::size_t> expand(std::size_t k, std::size_t t) const {
    if (t > tr.steps.size()) throw InvalidTrajectory("trajectory ends inside an expansion");
    const auto& frames = tr.steps[t - 1].stack.frames;
    if (k >= frames.size() || frames[k].cursor != 1) {
      throw InvalidTrajectory("step " + std::to_string(t) + ": expected a fresh expansion");
    }
    const auto a = frames[k].production;
    const auto& p = g.production(a);
    PcfgTree node{0, {}};
    std::size_t cur = t;
    for (std::size_t j = 1; j <= p.length(); ++j) {
      const auto y = p.rhs[j - 1];
      const bool tail = p.tail_recursive && j == p.length();
      if (!tail) {
        const auto& fs = tr.steps[cur - 1].stack.frames;
        if (k >= fs.size() || fs[k].production != a || fs[k].cursor != j) {
          throw InvalidTrajectory("step " + std::to_string(cur) + ": frame does not follow production " +
                                  std::to_string(p.label));
        }
      }
      if (g.is_terminal(y)) {
        if (tr.steps[cur - 1].stack.leaf != y || tr.steps[cur - 1].stack.frames.size() != k + 1) {
          throw InvalidTrajectory("step " + std::to_string(cur) + ": leaf mismatch");
        }
        const auto pre = lookup(Pcfg::Kind::Preterminal, y, state(cur - 1), state(cur));
        const auto leaf = lookup(Pcfg::Kind::Terminal, y);
        PcfgTree pre_node{pre, {}};
        pre_node.children.push_back(PcfgTree{leaf, {}});
        node.children.push_back(std::move(pre_node));
        ++cur;
      } else {
        auto [child, end] = expand(tail ? k : k + 1, cur);
        node.children.push_back(std::move(child));
        cur = end + 1;
      }
    }
    node.symbol = lookup(Pcfg::Kind::Tuple, p.lhs, state(t - 1), state(cur - 1));
    return {std::move(node), cur - 1};
  }
};

}  // namespace

PcfgTree trajectory_to_tree(const Psdg& g, const Pcfg& pcfg, const Trajectory& trajectory) {
  if (!trajectory.completed) throw InvalidTrajectory("only completed trajectories have parse trees");
  TreeBuilder b{g, pcfg, trajectory};
  auto [root, end] = b.expand(0, 1);
  if (end != trajectory.steps.size()) throw InvalidTrajectory("steps remain after the root completes");
  return PcfgTree{pcfg.start(), {std::move(root)}};
}

double pcfg_tree_probability(const Pcfg& pcfg, const PcfgTree& tree) {
  if (tree.children.empty()) {
    if (pcfg.symbols()[tree.symbol].kind != Pcfg::Kind::Terminal) {
      throw UnknownProduction("leaf " + pcfg.symbols()[tree.symbol].name + " is not a terminal");
    }
    return 0.0;
  }
  std::vector<std::uint32_t> rhs;
  for (const auto& c : tree.children) rhs.push_back(c.symbol);
  const auto id = pcfg.find_production(tree.symbol, rhs);
  if (id == Pcfg::npos) {
    std::string text = pcfg.symbols()[tree.symbol].name + " ->";
    for (auto r : rhs) text += ' ' + pcfg.symbols()[r].name;
    throw UnknownProduction("no production " + text);
  }
  const double p = pcfg.productions()[id].probability;
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  double total = std::log(p);
  for (const auto& c : tree.children) total += pcfg_tree_probability(pcfg, c);
  return total;
}

}  // namespace psdg
