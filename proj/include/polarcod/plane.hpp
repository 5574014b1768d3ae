#pragma once

#include <cstddef>
#include <vector>

#include "polarcod/tensor.hpp"

namespace polarcod {

// Single-channel row-major image of doubles.
struct Plane {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    Plane() = default;
    Plane(int h, int w, double fill = 0.0)
        : height(h), width(w), values(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return values.size(); }
    bool same_shape(const Plane& o) const { return height == o.height && width == o.width; }
};

// (N, 1, H, W) tensor from N equally sized planes.
Tensor stack_planes(const std::vector<const Plane*>& planes);
// Plane (n, c) of a tensor.
Plane plane_of(const Tensor& t, int n, int c);

}  // namespace polarcod
