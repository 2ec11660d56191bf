#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pushframe {

// Dense rows x cols x channels image of doubles, channel index fastest.
class Image {
 public:
  Image() = default;
  Image(std::size_t rows, std::size_t cols, std::size_t channels, double fill = 0.0)
      : rows_(rows), cols_(cols), channels_(channels), data_(rows * cols * channels, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(std::size_t r, std::size_t c, std::size_t ch = 0) {
    return data_[(r * cols_ + c) * channels_ + ch];
  }
  double at(std::size_t r, std::size_t c, std::size_t ch = 0) const {
    return data_[(r * cols_ + c) * channels_ + ch];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Image& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_ && channels_ == o.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

}  // namespace pushframe
