#include "polarcod/plane.hpp"

#include <algorithm>

#include "polarcod/error.hpp"

namespace polarcod {

Tensor stack_planes(const std::vector<const Plane*>& planes) {
    if (planes.empty()) throw DimensionError("stack_planes: no planes");
    const int h = planes[0]->height;
    const int w = planes[0]->width;
    std::vector<double> v;
    v.reserve(planes.size() * planes[0]->size());
    for (const Plane* p : planes) {
        if (p->height != h || p->width != w) throw DimensionError("stack_planes: planes differ in size");
        v.insert(v.end(), p->values.begin(), p->values.end());
    }
    return Tensor::from({static_cast<int>(planes.size()), 1, h, w}, std::move(v));
}

Plane plane_of(const Tensor& t, int n, int c) {
    const Shape& s = t.shape();
    Plane p(s.h, s.w);
    const auto d = t.data();
    std::copy_n(d.begin() + ((static_cast<std::size_t>(n) * s.c + c) * s.plane()), s.plane(), p.values.begin());
    return p;
}

}  // namespace polarcod
