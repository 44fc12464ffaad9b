#pragma once

#include <vector>

namespace svr {

// Per-frame grid of multiplicative depth scales with bilinear lookup over the
// image it maps onto. Control point (r, c) sits at pixel
// (c * (W-1)/(cols-1), r * (H-1)/(rows-1)).
class ScaleField {
public:
    ScaleField() = default;
    ScaleField(int rows, int cols, int image_width, int image_height, double init = 1.0);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int image_width() const { return image_width_; }
    int image_height() const { return image_height_; }

    double& at(int r, int c) { return grid_[static_cast<std::size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return grid_[static_cast<std::size_t>(r) * cols_ + c]; }
    const std::vector<double>& values() const { return grid_; }
    std::vector<double>& values() { return grid_; }

    // The 4 enclosing control points (row-major linear indices) and their
    // bilinear weights for a pixel.
    struct Bilinear {
        int idx[4];
        double w[4];
        double dpx[4], dpy[4];  // d(weight)/d(pixel)
    };
    Bilinear lookup(double px, double py) const;

    double value(double px, double py) const;
    double value_with_pixel_grad(double px, double py, double& dpx, double& dpy) const;

    double mean() const;
    void clamp(double lo, double hi);

private:
    int rows_ = 0, cols_ = 0;
    int image_width_ = 0, image_height_ = 0;
    std::vector<double> grid_;
};

}  // namespace svr
