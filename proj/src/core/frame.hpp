#pragma once

#include <vector>

#include "core/camera.hpp"

namespace svr {

// Row-major interleaved float image. Continuous pixel coordinates address
// sample centers at integer positions; bilinear sampling clamps to the
// border.
struct ImageF32 {
    int width = 0, height = 0, channels = 1;
    std::vector<float> data;

    ImageF32() = default;
    ImageF32(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    bool empty() const { return data.empty(); }

    float& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    double sample(double px, double py, int c = 0) const {
        double dx, dy;
        return sample_with_grad(px, py, c, dx, dy);
    }

    // Bilinear value plus its pixel-space derivative (piecewise constant per
    // cell, zero outside the clamped range).
    double sample_with_grad(double px, double py, int c, double& dpx, double& dpy) const {
        const double x = std::clamp(px, 0.0, static_cast<double>(width - 1));
        const double y = std::clamp(py, 0.0, static_cast<double>(height - 1));
        const int x0 = std::min(static_cast<int>(x), width - 2 >= 0 ? width - 2 : 0);
        const int y0 = std::min(static_cast<int>(y), height - 2 >= 0 ? height - 2 : 0);
        const int x1 = std::min(x0 + 1, width - 1);
        const int y1 = std::min(y0 + 1, height - 1);
        const double fx = x - x0, fy = y - y0;
        const double v00 = at(x0, y0, c), v10 = at(x1, y0, c);
        const double v01 = at(x0, y1, c), v11 = at(x1, y1, c);
        const double top = v00 + fx * (v10 - v00);
        const double bot = v01 + fx * (v11 - v01);
        dpx = (1.0 - fy) * (v10 - v00) + fy * (v11 - v01);
        dpy = bot - top;
        if (px < 0.0 || px > width - 1) dpx = 0.0;
        if (py < 0.0 || py > height - 1) dpy = 0.0;
        return top + fy * (bot - top);
    }
};

// One input image with pose, intrinsics and its prior maps. `depth` is the
// unscaled monocular prior; `normal` is camera-frame unit normals; `semantic`
// holds per-pixel label logits.
struct Frame {
    int id = 0;
    Camera camera;
    ImageF32 color;     // 3ch rgb in [0,1]
    ImageF32 depth;     // 1ch meters, <=0 marks invalid pixels
    ImageF32 normal;    // 3ch
    ImageF32 semantic;  // label_channels
    ImageF32 gray;      // 1ch luma cache, built on load

    void build_gray() {
        if (color.empty()) return;
        gray = ImageF32(color.width, color.height, 1);
        for (int y = 0; y < color.height; ++y)
            for (int x = 0; x < color.width; ++x)
                gray.at(x, y) = 0.299f * color.at(x, y, 0) + 0.587f * color.at(x, y, 1) +
                                0.114f * color.at(x, y, 2);
    }

    bool depth_valid(int x, int y) const {
        return !depth.empty() && depth.at(x, y) > 0.0f;
    }
};

}  // namespace svr
