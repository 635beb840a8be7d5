#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "streamatt/error.hpp"

namespace streamatt {

inline constexpr double kDefaultFrameMs = 40.0;

// Encoder-side audio representation: fixed-width frames on the stream clock.
// Frame k covers [origin_offset_ms + k*frame_ms, origin_offset_ms + (k+1)*frame_ms).
class FeatureSequence {
 public:
  FeatureSequence() = default;
  FeatureSequence(std::size_t width, double frame_ms, double origin_offset_ms = 0.0)
      : width_(width), frame_ms_(frame_ms), origin_ms_(origin_offset_ms) {
    if (!(frame_ms > 0.0)) throw InputError("frame duration must be positive");
    if (origin_offset_ms < 0.0) throw InputError("origin offset must be non-negative");
  }

  std::size_t width() const { return width_; }
  std::size_t size() const { return width_ == 0 ? 0 : data_.size() / width_; }
  bool empty() const { return data_.empty(); }
  double frame_ms() const { return frame_ms_; }
  double origin_offset_ms() const { return origin_ms_; }
  double duration_ms() const { return static_cast<double>(size()) * frame_ms_; }
  double end_ms() const { return origin_ms_ + duration_ms(); }

  std::span<const float> frame(std::size_t i) const {
    return {data_.data() + i * width_, width_};
  }
  std::span<const float> data() const { return data_; }

  void push_back(std::span<const float> values) {
    if (width_ == 0 && data_.empty()) width_ = values.size();
    if (values.size() != width_ || width_ == 0)
      throw InputError("feature width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
  }

  // Frames [first, first+count) as a new sequence with the origin advanced.
  FeatureSequence slice(std::size_t first, std::size_t count) const {
    if (first + count > size()) throw InternalError("feature slice out of range");
    FeatureSequence out(width_, frame_ms_, origin_ms_ + static_cast<double>(first) * frame_ms_);
    out.data_.assign(data_.begin() + static_cast<std::ptrdiff_t>(first * width_),
                     data_.begin() + static_cast<std::ptrdiff_t>((first + count) * width_));
    return out;
  }
  FeatureSequence suffix(std::size_t first) const { return slice(first, size() - first); }

  // Empty sequence positioned at the end of this one.
  FeatureSequence cleared() const { return FeatureSequence(width_, frame_ms_, end_ms()); }

  // this ++ next; next must start where this ends (or this must be empty).
  FeatureSequence concat(const FeatureSequence& next) const {
    if (empty()) return next;
    if (next.empty()) return *this;
    if (next.width_ != width_) throw InputError("feature width mismatch");
    if (next.frame_ms_ != frame_ms_) throw InputError("frame duration mismatch");
    const double gap = next.origin_ms_ - end_ms();
    if (gap > 1e-6 || gap < -1e-6) throw InternalError("non-contiguous audio concatenation");
    FeatureSequence out = *this;
    out.data_.insert(out.data_.end(), next.data_.begin(), next.data_.end());
    return out;
  }

  friend bool operator==(const FeatureSequence&, const FeatureSequence&) = default;

 private:
  std::size_t width_ = 0;
  double frame_ms_ = kDefaultFrameMs;
  double origin_ms_ = 0.0;
  std::vector<float> data_;
};

}  // namespace streamatt
