#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "streamatt/error.hpp"

namespace streamatt {

inline constexpr double kRowSumTolerance = 1e-4;

// Cross-attention scores: one row per decoded token, one column per frame.
class AttentionMatrix {
 public:
  AttentionMatrix() = default;
  AttentionMatrix(std::size_t rows, std::size_t cols, int layer_index = 4,
                  std::string head_reduction = "mean")
      : rows_(rows), cols_(cols), layer_index_(layer_index),
        head_reduction_(std::move(head_reduction)), scores_(rows * cols, 0.0f) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }
  int layer_index() const { return layer_index_; }
  const std::string& head_reduction() const { return head_reduction_; }

  float& at(std::size_t r, std::size_t c) { return scores_[r * cols_ + c]; }
  float at(std::size_t r, std::size_t c) const { return scores_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) { return {scores_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {scores_.data() + r * cols_, cols_}; }

  void append_row(std::span<const float> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw InputError("attention row width mismatch");
    scores_.insert(scores_.end(), values.begin(), values.end());
    ++rows_;
  }

  // Every entry non-negative and every row sums to 1 within tolerance.
  bool rows_normalized(double tol = kRowSumTolerance) const {
    for (std::size_t r = 0; r < rows_; ++r) {
      double sum = 0.0;
      for (float v : row(r)) {
        if (!(v >= 0.0f)) return false;
        sum += v;
      }
      if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
  }

  friend bool operator==(const AttentionMatrix&, const AttentionMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  int layer_index_ = 4;
  std::string head_reduction_ = "mean";
  std::vector<float> scores_;
};

}  // namespace streamatt
