#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace fuseforge {

/// Row-major 2-D grid of values.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(size_t(width) * size_t(height), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }

    T& at(int x, int y) { return data_[size_t(y) * size_t(width_) + size_t(x)]; }
    const T& at(int x, int y) const { return data_[size_t(y) * size_t(width_) + size_t(x)]; }

    bool in_bounds(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

struct Rgb8 {
    uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb8&) const = default;
};

/// Depth in meters; 0 marks an invalid measurement.
using DepthImage = Image<float>;
/// Grayscale intensity in [0, 1].
using IntensityImage = Image<float>;
using ColorImage = Image<Rgb8>;

/// Per-pixel unit normal; the zero vector marks an invalid pixel.
using NormalMap = Image<Eigen::Vector3f>;

inline bool normal_valid(const Eigen::Vector3f& n) { return n.squaredNorm() > 0.25f; }

}  // namespace fuseforge
