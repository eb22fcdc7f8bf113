#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mrnet/errors.hpp"

namespace mrnet {

namespace detail {
inline std::atomic<bool>& finite_checks_flag() {
  static std::atomic<bool> enabled{false};
  return enabled;
}
}  // namespace detail

/// When enabled, Grid construction from data rejects NaN/Inf entries.
inline void set_finite_checks(bool enabled) { detail::finite_checks_flag() = enabled; }
inline bool finite_checks_enabled() { return detail::finite_checks_flag(); }

/// A length x channels block of real samples, row-major (channel fastest).
/// The unit every signal op works on: one epoch, one feature map, one
/// parameter tensor (kernels and matrices adopt documented row layouts).
template <typename T>
class Grid {
 public:
  Grid() : length_(1), channels_(1), data_(1, T{}) {}

  Grid(std::size_t length, std::size_t channels, T fill = T{})
      : length_(length), channels_(channels), data_(length * channels, fill) {
    check_shape();
    if (finite_checks_enabled() && !std::isfinite(static_cast<double>(fill))) {
      throw NumericError("Grid: non-finite fill value");
    }
  }

  Grid(std::size_t length, std::size_t channels, std::vector<T> data)
      : length_(length), channels_(channels), data_(std::move(data)) {
    check_shape();
    if (data_.size() != length_ * channels_) {
      throw ShapeError("Grid: data size " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(length_) + "x" +
                       std::to_string(channels_));
    }
    if (finite_checks_enabled()) {
      for (const T& v : data_) {
        if (!std::isfinite(static_cast<double>(v))) {
          throw NumericError("Grid: non-finite entry at construction");
        }
      }
    }
  }

  /// Column vector of length n (single channel).
  static Grid vector(std::vector<T> data) {
    const std::size_t n = data.size();
    return Grid(n, 1, std::move(data));
  }

  /// Single row over n channels.
  static Grid row(std::vector<T> data) {
    const std::size_t n = data.size();
    return Grid(1, n, std::move(data));
  }

  std::size_t length() const { return length_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t l, std::size_t c) { return data_[l * channels_ + c]; }
  const T& operator()(std::size_t l, std::size_t c) const { return data_[l * channels_ + c]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& raw() { return data_; }
  const std::vector<T>& raw() const { return data_; }

  bool same_shape(const Grid& other) const {
    return length_ == other.length_ && channels_ == other.channels_;
  }

  Grid zeros_like() const { return Grid(length_, channels_); }

  void fill(T v) { data_.assign(data_.size(), v); }

  bool all_finite() const {
    for (const T& v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  std::string shape_str() const {
    return std::to_string(length_) + "x" + std::to_string(channels_);
  }

  template <typename U>
  Grid<U> cast() const {
    std::vector<U> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return Grid<U>(length_, channels_, std::move(out));
  }

  bool operator==(const Grid& other) const {
    return length_ == other.length_ && channels_ == other.channels_ && data_ == other.data_;
  }

 private:
  void check_shape() const {
    if (length_ < 1 || channels_ < 1) {
      throw ShapeError("Grid: dimensions must be >= 1, got " + std::to_string(length_) +
                       "x" + std::to_string(channels_));
    }
  }

  std::size_t length_;
  std::size_t channels_;
  std::vector<T> data_;
};

template <typename T>
void require_same_shape(const Grid<T>& a, const Grid<T>& b, const char* where) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(where) + ": shape mismatch, expected " + a.shape_str() +
                     ", got " + b.shape_str());
  }
}

}  // namespace mrnet
