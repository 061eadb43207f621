#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace psdg {

using StateIndex = std::uint64_t;
using FeatureValue = std::uint16_t;

/// One assignment of every declared feature, in declaration order.
struct StatePoint {
  std::vector<FeatureValue> values;

  friend bool operator==(const StatePoint&, const StatePoint&) = default;
};

/// Mixed-radix layout of the factored state space. The first feature is the
/// most significant digit, so index order is lexicographic over domains.
class StateSpace {
 public:
  StateSpace() = default;
  explicit StateSpace(std::vector<std::size_t> radices);

  std::size_t feature_count() const { return radices_.size(); }
  std::size_t radix(std::size_t feature) const { return radices_[feature]; }
  const std::vector<std::size_t>& radices() const { return radices_; }

  /// Total number of joint states, saturating at UINT64_MAX.
  std::uint64_t size() const { return size_; }

  StateIndex encode(const StatePoint& point) const;
  StatePoint decode(StateIndex index) const;
  bool well_formed(const StatePoint& point) const;

 private:
  std::vector<std::size_t> radices_;
  std::uint64_t size_ = 1;
};

/// Product-form subset of the state space: one nonempty allowed-value list per
/// feature. Members are ordered lexicographically.
class StateSet {
 public:
  StateSet() = default;

  static StateSet full(const StateSpace& space);
  static StateSet singleton(const StatePoint& point);

  /// `allowed[f]` lists the permitted values of feature f; it is sorted and
  /// deduplicated here. Throws std::invalid_argument on an empty list.
  explicit StateSet(std::vector<std::vector<FeatureValue>> allowed);

  std::size_t feature_count() const { return allowed_.size(); }
  const std::vector<FeatureValue>& allowed(std::size_t feature) const { return allowed_[feature]; }

  std::uint64_t size() const;
  bool contains(const StatePoint& point) const;

  /// Rank of `point` inside this set, or npos when it is not a member.
  std::size_t position(const StatePoint& point) const;
  StatePoint member(std::size_t position) const;

  StateSet intersect(const StateSet& other) const;
  bool is_full(const StateSpace& space) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend bool operator==(const StateSet&, const StateSet&) = default;

 private:
  std::vector<std::vector<FeatureValue>> allowed_;
};

/// Every member of `set` in lexicographic order. Throws SetTooLarge when the
/// set has more than `bound` members.
std::vector<StatePoint> enumerate_states(const StateSet& set, std::uint64_t bound = 1'000'000);

}  // namespace psdg
