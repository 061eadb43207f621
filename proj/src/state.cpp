#include "psdg/state.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "psdg/error.hpp"

namespace psdg {

namespace {

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return a * b;
}

}  // namespace

StateSpace::StateSpace(std::vector<std::size_t> radices) : radices_(std::move(radices)) {
  for (auto r : radices_) {
    if (r == 0) throw std::invalid_argument("feature with empty domain");
    size_ = saturating_mul(size_, r);
  }
}

StateIndex StateSpace::encode(const StatePoint& point) const {
  StateIndex index = 0;
  for (std::size_t f = 0; f < radices_.size(); ++f) {
    index = index * radices_[f] + point.values[f];
  }
  return index;
}

StatePoint StateSpace::decode(StateIndex index) const {
  StatePoint point;
  point.values.resize(radices_.size());
  for (std::size_t f = radices_.size(); f-- > 0;) {
    point.values[f] = static_cast<FeatureValue>(index % radices_[f]);
    index /= radices_[f];
  }
  return point;
}

bool StateSpace::well_formed(const StatePoint& point) const {
  if (point.values.size() != radices_.size()) return false;
  for (std::size_t f = 0; f < radices_.size(); ++f) {
    if (point.values[f] >= radices_[f]) return false;
  }
  return true;
}

StateSet StateSet::full(const StateSpace& space) {
  std::vector<std::vector<FeatureValue>> allowed(space.feature_count());
  for (std::size_t f = 0; f < space.feature_count(); ++f) {
    allowed[f].resize(space.radix(f));
    for (std::size_t v = 0; v < space.radix(f); ++v) allowed[f][v] = static_cast<FeatureValue>(v);
  }
  return StateSet(std::move(allowed));
}

StateSet StateSet::singleton(const StatePoint& point) {
  std::vector<std::vector<FeatureValue>> allowed;
  allowed.reserve(point.values.size());
  for (auto v : point.values) allowed.push_back({v});
  return StateSet(std::move(allowed));
}

StateSet::StateSet(std::vector<std::vector<FeatureValue>> allowed) : allowed_(std::move(allowed)) {
  for (auto& values : allowed_) {
    if (values.empty()) throw std::invalid_argument("state set with an empty feature restriction");
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
  }
}

std::uint64_t StateSet::size() const {
  std::uint64_t n = 1;
  for (const auto& values : allowed_) n = saturating_mul(n, values.size());
  return n;
}

bool StateSet::contains(const StatePoint& point) const {
  if (point.values.size() != allowed_.size()) return false;
  for (std::size_t f = 0; f < allowed_.size(); ++f) {
    if (!std::binary_search(allowed_[f].begin(), allowed_[f].end(), point.values[f])) return false;
  }
  return true;
}

std::size_t StateSet::position(const StatePoint& point) const {
  if (point.values.size() != allowed_.size()) return npos;
  std::size_t rank = 0;
  for (std::size_t f = 0; f < allowed_.size(); ++f) {
    const auto& values = allowed_[f];
    auto it = std::lower_bound(values.begin(), values.end(), point.values[f]);
    if (it == values.end() || *it != point.values[f]) return npos;
    rank = rank * values.size() + static_cast<std::size_t>(it - values.begin());
  }
  return rank;
}

StatePoint StateSet::member(std::size_t position) const {
  StatePoint point;
  point.values.resize(allowed_.size());
  for (std::size_t f = allowed_.size(); f-- > 0;) {
    const auto& values = allowed_[f];
    point.values[f] = values[position % values.size()];
    position /= values.size();
  }
  return point;
}

StateSet StateSet::intersect(const StateSet& other) const {
  std::vector<std::vector<FeatureValue>> allowed(allowed_.size());
  for (std::size_t f = 0; f < allowed_.size(); ++f) {
    std::set_intersection(allowed_[f].begin(), allowed_[f].end(), other.allowed_[f].begin(),
                          other.allowed_[f].end(), std::back_inserter(allowed[f]));
  }
  return StateSet(std::move(allowed));
}

bool StateSet::is_full(const StateSpace& space) const {
  for (std::size_t f = 0; f < allowed_.size(); ++f) {
    if (allowed_[f].size() != space.radix(f)) return false;
  }
  return true;
}

std::vector<StatePoint> enumerate_states(const StateSet& set, std::uint64_t bound) {
  const auto n = set.size();
  if (n > bound) {
    throw SetTooLarge("state set has " + std::to_string(n) + " members, bound is " +
                      std::to_string(bound));
  }
  std::vector<StatePoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(set.member(i));
  return out;
}

}  // namespace psdg
