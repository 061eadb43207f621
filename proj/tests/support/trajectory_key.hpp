#pragma once

#include <string>

#include "psdg/generation.hpp"
#include "psdg/pcfg.hpp"

namespace psdg::testing {

// Canonical string for comparing trajectories across sampler and enumerator.
inline std::string trajectory_key(const Psdg& g, const Trajectory& tr) {
  std::string key = std::to_string(g.state_space().encode(tr.initial));
  for (const auto& s : tr.steps) {
    key += '|';
    for (const auto& f : s.stack.frames) key += std::to_string(f.production) + ':' + std::to_string(f.cursor) + ',';
    key += std::to_string(s.stack.leaf) + '>' + std::to_string(g.state_space().encode(s.state));
  }
  if (tr.completed) key += "|done";
  return key;
}

inline std::string tree_key(const PcfgTree& tree) {
  std::string key = std::to_string(tree.symbol);
  if (tree.children.empty()) return key;
  key += '(';
  for (const auto& c : tree.children) key += tree_key(c) + ' ';
  return key + ')';
}

}  // namespace psdg::testing
