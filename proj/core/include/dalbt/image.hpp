#pragma once

#include <cstddef>
#include <vector>

namespace dalbt {

// Dense H x W x C image, channel-interleaved, values in [0, 1].
struct Image {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<double> v;

    Image() = default;
    Image(int h_, int w_, int c_, double fill = 0.0)
        : h(h_), w(w_), c(c_), v(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

    double at(int y, int x, int ch) const {
        return v[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
    double& at(int y, int x, int ch) {
        return v[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }

    std::size_t size() const { return v.size(); }
    bool same_shape(const Image& o) const { return h == o.h && w == o.w && c == o.c; }
};

} // namespace dalbt
