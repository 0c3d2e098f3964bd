#pragma once

// Parameter vectors attached to states (zeta) and actions (eta).
//
// Every state carries a block of `state_dim` reals and every action a block of
// `action_dim` reals (either may be zero). The states/actions are partitioned
// into prescribed (S1, A1) and manipulable (S2, A2) sets. The flat coordinate
// order is fixed:
//
//   [ zeta_s for s in S1 ascending | eta_a for a in A1 ascending |
//     zeta_s for s in S2 ascending | eta_a for a in A2 ascending ]
//
// so the first `n_prescribed()` coordinates are prescribed and the remaining
// `n_manipulable()` are manipulable.

#include <parasdm/types.hpp>

#include <algorithm>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace parasdm {

enum class BlockKind { state, action };

/// Identifies the owner of one flat coordinate.
struct Coordinate {
  BlockKind kind;
  Index owner;          // state or action index
  std::size_t component;
  bool manipulable;
};

class ParameterLayout {
 public:
  ParameterLayout(std::size_t n_states, std::size_t n_actions, std::size_t state_dim,
                  std::size_t action_dim, const std::vector<Index>& manipulable_states,
                  const std::vector<Index>& manipulable_actions)
      : n_states_(n_states),
        n_actions_(n_actions),
        state_dim_(state_dim),
        action_dim_(action_dim),
        state_manip_(n_states, 0),
        action_manip_(n_actions, 0),
        state_offset_(n_states, 0),
        action_offset_(n_actions, 0) {
    for (Index s : manipulable_states) {
      if (s >= n_states) throw LayoutError("manipulable state index out of range");
      if (state_manip_[s]) throw LayoutError("duplicate manipulable state index");
      state_manip_[s] = 1;
    }
    for (Index a : manipulable_actions) {
      if (a >= n_actions) throw LayoutError("manipulable action index out of range");
      if (action_manip_[a]) throw LayoutError("duplicate manipulable action index");
      action_manip_[a] = 1;
    }

    std::size_t offset = 0;
    auto place = [&](bool manipulable) {
      for (Index s = 0; s < n_states_; ++s) {
        if (static_cast<bool>(state_manip_[s]) == manipulable) {
          state_offset_[s] = offset;
          offset += state_dim_;
        }
      }
      for (Index a = 0; a < n_actions_; ++a) {
        if (static_cast<bool>(action_manip_[a]) == manipulable) {
          action_offset_[a] = offset;
          offset += action_dim_;
        }
      }
    };
    place(false);
    n_prescribed_ = offset;
    place(true);
    size_ = offset;
  }

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }

  std::size_t size() const { return size_; }
  std::size_t n_prescribed() const { return n_prescribed_; }
  std::size_t n_manipulable() const { return size_ - n_prescribed_; }

  bool state_manipulable(Index s) const { return state_manip_.at(s) != 0; }
  bool action_manipulable(Index a) const { return action_manip_.at(a) != 0; }

  std::size_t state_offset(Index s) const { return state_offset_.at(s); }
  std::size_t action_offset(Index a) const { return action_offset_.at(a); }

  std::vector<Index> manipulable_states() const { return collect(state_manip_, true); }
  std::vector<Index> manipulable_actions() const { return collect(action_manip_, true); }
  std::vector<Index> prescribed_states() const { return collect(state_manip_, false); }
  std::vector<Index> prescribed_actions() const { return collect(action_manip_, false); }

  Coordinate describe(std::size_t flat) const {
    if (flat >= size_) throw LayoutError("coordinate index out of range");
    for (Index s = 0; s < n_states_; ++s) {
      if (state_dim_ > 0 && flat >= state_offset_[s] && flat < state_offset_[s] + state_dim_) {
        return {BlockKind::state, s, flat - state_offset_[s], state_manip_[s] != 0};
      }
    }
    for (Index a = 0; a < n_actions_; ++a) {
      if (action_dim_ > 0 && flat >= action_offset_[a] && flat < action_offset_[a] + action_dim_) {
        return {BlockKind::action, a, flat - action_offset_[a], action_manip_[a] != 0};
      }
    }
    throw LayoutError("coordinate not owned by any block");
  }

  friend bool operator==(const ParameterLayout& x, const ParameterLayout& y) {
    return x.n_states_ == y.n_states_ && x.n_actions_ == y.n_actions_ &&
           x.state_dim_ == y.state_dim_ && x.action_dim_ == y.action_dim_ &&
           x.state_manip_ == y.state_manip_ && x.action_manip_ == y.action_manip_;
  }

 private:
  static std::vector<Index> collect(const std::vector<unsigned char>& flags, bool value) {
    std::vector<Index> out;
    for (Index i = 0; i < flags.size(); ++i) {
      if (static_cast<bool>(flags[i]) == value) out.push_back(i);
    }
    return out;
  }

  std::size_t n_states_;
  std::size_t n_actions_;
  std::size_t state_dim_;
  std::size_t action_dim_;
  std::vector<unsigned char> state_manip_;
  std::vector<unsigned char> action_manip_;
  std::vector<std::size_t> state_offset_;
  std::vector<std::size_t> action_offset_;
  std::size_t n_prescribed_ = 0;
  std::size_t size_ = 0;
};

/// Parameter vector Upsilon. Values are stored in the flat layout order.
class ParameterVector {
 public:
  ParameterVector() = default;

  explicit ParameterVector(std::shared_ptr<const ParameterLayout> layout)
      : layout_(std::move(layout)), values_(layout_->size(), 0.0) {}

  ParameterVector(std::shared_ptr<const ParameterLayout> layout, std::vector<double> values)
      : layout_(std::move(layout)), values_(std::move(values)) {
    if (values_.size() != layout_->size()) {
      throw LayoutError("flat vector has length " + std::to_string(values_.size()) +
                        ", layout expects " + std::to_string(layout_->size()));
    }
  }

  const ParameterLayout& layout() const { return *layout_; }
  const std::shared_ptr<const ParameterLayout>& layout_ptr() const { return layout_; }

  std::span<const double> zeta(Index s) const {
    return {values_.data() + layout_->state_offset(s), layout_->state_dim()};
  }
  std::span<double> zeta(Index s) {
    return {values_.data() + layout_->state_offset(s), layout_->state_dim()};
  }
  std::span<const double> eta(Index a) const {
    return {values_.data() + layout_->action_offset(a), layout_->action_dim()};
  }
  std::span<double> eta(Index a) {
    return {values_.data() + layout_->action_offset(a), layout_->action_dim()};
  }

  std::span<const double> flat() const { return values_; }
  std::span<double> flat() { return values_; }

  std::span<const double> prescribed() const {
    return std::span<const double>(values_).first(layout_->n_prescribed());
  }
  std::span<double> prescribed() { return std::span<double>(values_).first(layout_->n_prescribed()); }
  std::span<const double> manipulable() const {
    return std::span<const double>(values_).subspan(layout_->n_prescribed());
  }
  std::span<double> manipulable() { return std::span<double>(values_).subspan(layout_->n_prescribed()); }

  std::size_t size() const { return values_.size(); }

  friend bool operator==(const ParameterVector& x, const ParameterVector& y) {
    return x.values_ == y.values_ && (x.layout_ == y.layout_ || *x.layout_ == *y.layout_);
  }

 private:
  std::shared_ptr<const ParameterLayout> layout_;
  std::vector<double> values_;
};

inline std::vector<double> flatten(const ParameterVector& params) {
  return {params.flat().begin(), params.flat().end()};
}

inline ParameterVector unflatten(std::span<const double> values,
                                 std::shared_ptr<const ParameterLayout> layout) {
  return ParameterVector(std::move(layout), std::vector<double>(values.begin(), values.end()));
}

}  // namespace parasdm
