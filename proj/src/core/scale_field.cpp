#include "core/scale_field.hpp"

#include <algorithm>
#include <numeric>

#include "core/errors.hpp"

namespace svr {

ScaleField::ScaleField(int rows, int cols, int image_width, int image_height, double init)
    : rows_(rows),
      cols_(cols),
      image_width_(image_width),
      image_height_(image_height),
      grid_(static_cast<std::size_t>(rows) * cols, init) {
    if (rows < 2 || cols < 2) throw ConfigError("scale field needs at least a 2x2 grid");
    if (image_width < 2 || image_height < 2)
        throw ConfigError("scale field image size too small");
}

ScaleField::Bilinear ScaleField::lookup(double px, double py) const {
    const double sx = static_cast<double>(cols_ - 1) / (image_width_ - 1);
    const double sy = static_cast<double>(rows_ - 1) / (image_height_ - 1);
    double gx = std::clamp(px * sx, 0.0, static_cast<double>(cols_ - 1));
    double gy = std::clamp(py * sy, 0.0, static_cast<double>(rows_ - 1));
    const int c0 = std::min(static_cast<int>(gx), cols_ - 2);
    const int r0 = std::min(static_cast<int>(gy), rows_ - 2);
    const double fx = gx - c0, fy = gy - r0;

    Bilinear b;
    const int base = r0 * cols_ + c0;
    b.idx[0] = base;
    b.idx[1] = base + 1;
    b.idx[2] = base + cols_;
    b.idx[3] = base + cols_ + 1;
    b.w[0] = (1 - fx) * (1 - fy);
    b.w[1] = fx * (1 - fy);
    b.w[2] = (1 - fx) * fy;
    b.w[3] = fx * fy;
    const bool in_x = px > 0.0 && px < image_width_ - 1;
    const bool in_y = py > 0.0 && py < image_height_ - 1;
    const double dx = in_x ? sx : 0.0;
    const double dy = in_y ? sy : 0.0;
    b.dpx[0] = -(1 - fy) * dx;
    b.dpx[1] = (1 - fy) * dx;
    b.dpx[2] = -fy * dx;
    b.dpx[3] = fy * dx;
    b.dpy[0] = -(1 - fx) * dy;
    b.dpy[1] = -fx * dy;
    b.dpy[2] = (1 - fx) * dy;
    b.dpy[3] = fx * dy;
    return b;
}

double ScaleField::value(double px, double py) const {
    const Bilinear b = lookup(px, py);
    double v = 0.0;
    for (int i = 0; i < 4; ++i) v += b.w[i] * grid_[b.idx[i]];
    return v;
}

double ScaleField::value_with_pixel_grad(double px, double py, double& dpx,
                                         double& dpy) const {
    const Bilinear b = lookup(px, py);
    double v = 0.0;
    dpx = 0.0;
    dpy = 0.0;
    for (int i = 0; i < 4; ++i) {
        v += b.w[i] * grid_[b.idx[i]];
        dpx += b.dpx[i] * grid_[b.idx[i]];
        dpy += b.dpy[i] * grid_[b.idx[i]];
    }
    return v;
}

double ScaleField::mean() const {
    return std::accumulate(grid_.begin(), grid_.end(), 0.0) / grid_.size();
}

void ScaleField::clamp(double lo, double hi) {
    for (double& v : grid_) v = std::clamp(v, lo, hi);
}

}  // namespace svr
