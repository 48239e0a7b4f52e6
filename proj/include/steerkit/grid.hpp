#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "steerkit/error.hpp"

namespace steerkit {

struct Dims {
    int rows = 0;
    int cols = 0;

    std::size_t area() const noexcept { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
    bool contains(int row, int col) const noexcept { return row >= 0 && col >= 0 && row < rows && col < cols; }
    friend bool operator==(const Dims&, const Dims&) = default;
};

inline std::string to_string(Dims d) { return std::to_string(d.rows) + "x" + std::to_string(d.cols); }

// Dense row-major 2D grid.
template <class T>
class Grid {
public:
    Grid() = default;
    Grid(int rows, int cols, T fill = T{}) : dims_{rows, cols} {
        require(rows >= 0 && cols >= 0, ErrorCode::dimension, "negative grid dimensions");
        data_.assign(dims_.area(), fill);
    }
    explicit Grid(Dims dims, T fill = T{}) : Grid(dims.rows, dims.cols, fill) {}

    int rows() const noexcept { return dims_.rows; }
    int cols() const noexcept { return dims_.cols; }
    Dims dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
    const T& operator()(int row, int col) const noexcept { return data_[index(row, col)]; }

    T& at(int row, int col) {
        require(dims_.contains(row, col), ErrorCode::out_of_bounds,
                "grid index (" + std::to_string(row) + "," + std::to_string(col) + ") outside " + to_string(dims_));
        return data_[index(row, col)];
    }
    const T& at(int row, int col) const { return const_cast<Grid&>(*this).at(row, col); }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(dims_.cols) + static_cast<std::size_t>(col);
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    Dims dims_{};
    std::vector<T> data_;
};

using Mask = Grid<std::uint8_t>;

inline std::size_t count(const Mask& mask) {
    return static_cast<std::size_t>(std::count_if(mask.values().begin(), mask.values().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

// Dense depth. Relative maps are only defined up to an affine transform; metric
// maps are in meters. Zero marks an invalid pixel in metric maps read from disk.
class DepthMap : public Grid<double> {
public:
    DepthMap() = default;
    DepthMap(int rows, int cols, double fill = 0.0, bool metric = false)
        : Grid<double>(rows, cols, fill), metric_(metric) {}
    explicit DepthMap(Dims dims, double fill = 0.0, bool metric = false)
        : DepthMap(dims.rows, dims.cols, fill, metric) {}
    DepthMap(Grid<double> values, bool metric) : Grid<double>(std::move(values)), metric_(metric) {}

    bool metric() const noexcept { return metric_; }
    void set_metric(bool metric) noexcept { metric_ = metric; }

    friend bool operator==(const DepthMap&, const DepthMap&) = default;

private:
    bool metric_ = false;
};

// Multi-channel planar grid: channel-major, each plane row-major.
class Planes {
public:
    Planes() = default;
    Planes(int channels, int rows, int cols, double fill = 0.0) : channels_(channels), dims_{rows, cols} {
        require(channels >= 0 && rows >= 0 && cols >= 0, ErrorCode::dimension, "negative tensor dimensions");
        data_.assign(static_cast<std::size_t>(channels) * dims_.area(), fill);
    }

    int channels() const noexcept { return channels_; }
    int rows() const noexcept { return dims_.rows; }
    int cols() const noexcept { return dims_.cols; }
    Dims dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t plane_size() const noexcept { return dims_.area(); }

    double& operator()(int channel, int row, int col) noexcept { return data_[index(channel, row, col)]; }
    double operator()(int channel, int row, int col) const noexcept { return data_[index(channel, row, col)]; }

    std::span<double> plane(int channel) noexcept { return {data_.data() + channel * plane_size(), plane_size()}; }
    std::span<const double> plane(int channel) const noexcept {
        return {data_.data() + channel * plane_size(), plane_size()};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool same_shape(const Planes& other) const noexcept {
        return channels_ == other.channels_ && dims_ == other.dims_;
    }

    std::size_t index(int channel, int row, int col) const noexcept {
        return (static_cast<std::size_t>(channel) * static_cast<std::size_t>(dims_.rows) +
                static_cast<std::size_t>(row)) * static_cast<std::size_t>(dims_.cols) +
               static_cast<std::size_t>(col);
    }

    friend bool operator==(const Planes&, const Planes&) = default;

private:
    int channels_ = 0;
    Dims dims_{};
    std::vector<double> data_;
};

inline std::string shape_string(const Planes& p) {
    return std::to_string(p.channels()) + "x" + std::to_string(p.rows()) + "x" + std::to_string(p.cols());
}

inline void require_same_shape(const Planes& a, const Planes& b, const char* what) {
    require(a.same_shape(b), ErrorCode::dimension,
            std::string(what) + ": shape " + shape_string(a) + " vs " + shape_string(b));
}

inline bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

// RGB image with intensities normalized to [0, 1].
using RgbImage = Planes;

}  // namespace steerkit
