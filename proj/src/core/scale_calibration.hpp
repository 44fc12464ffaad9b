#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/dataio.hpp"
#include "core/frame.hpp"
#include "core/scale_field.hpp"

namespace svr {

struct CalibrationConfig {
    double lambda = 1e-3;  // unary (reprojection) term weight
    double lr = 1e-2;
    int steps = 500;
    int grid_rows = 24, grid_cols = 32;
    int pair_pixel_budget = 512;
    int min_covisibility = 20;
    double rms_decay = 0.99, rms_eps = 1e-8;
    double clamp_lo = 1e-3, clamp_hi = 1e3;
    // Huber widths for the pairwise residuals. Sampled correspondences can
    // land on occluders in frame j; quadratic loss lets those few pixels
    // dominate. geometric width is relative to the reprojected depth,
    // photometric is absolute in gray units. <=0 disables (plain L2).
    double huber_geo = 0.1;
    double huber_photo = 0.2;
    // Grid-neighbor smoothness weight. Control points whose cells receive no
    // correspondences have no data gradient at all; this ties them to their
    // neighborhood without fighting well-constrained points.
    double smoothness = 0.1;
    // Visibility gate: a correspondence whose reprojected depth exceeds the
    // depth observed in frame j by more than this fraction is occluded there
    // and contributes nothing. <=0 disables.
    double occlusion_gate = 0.3;
    // Seed each field with the median landmark depth ratio instead of 1.0.
    bool landmark_init = true;
    std::uint64_t seed = 0;
};

// One SfM landmark seen by a frame: its observed pixel and the depth the
// landmark projects to under the frame's pose.
struct ScaleObservation {
    Eigen::Vector2d pixel;
    double depth = 0.0;
};

struct UnaryLossResult {
    double loss = 0.0;
    std::size_t used = 0;
};

// g(phi_i) = sum_k (d_k - D_i(p_k) * phi_i(p_k))^2. The gradient distributes
// through the bilinear weights onto the 4 enclosing control points per
// observation; `grad` (rows*cols, may be null) is accumulated into.
UnaryLossResult unary_loss(const Frame& frame, const ScaleField& scale,
                           std::span<const ScaleObservation> observations,
                           std::vector<double>* grad);

struct BinaryLossResult {
    double geometric = 0.0;
    double photometric = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0;
    double total() const { return geometric + photometric; }
};

// h(phi_i, phi_j) over a set of source pixels: unproject with scaled depth,
// transform by the relative pose, re-project into frame j, and penalize the
// scaled-depth difference plus the grayscale intensity difference (Huber
// weighted, see CalibrationConfig). Pixels leaving frame j (or behind it, or
// without valid depth) are skipped. Gradients flow to both fields: through
// the unprojection onto phi_i and through the sampled target onto phi_j.
BinaryLossResult binary_loss(const Frame& frame_i, const Frame& frame_j,
                             const ScaleField& scale_i, const ScaleField& scale_j,
                             std::span<const Eigen::Vector2d> pixels,
                             std::vector<double>* grad_i, std::vector<double>* grad_j,
                             double huber_geo = 0.1, double huber_photo = 0.2,
                             double occlusion_gate = 0.3);

struct CalibrationResult {
    std::vector<ScaleField> fields;  // one per frame
    std::vector<double> loss_trace;  // per step
};

// Minimizes sum_{(i,j)} h + lambda * sum_i g over all per-frame scale grids
// with RMSProp. Throws DivergedError on non-finite loss.
CalibrationResult optimize_scales(const Dataset& dataset, const CalibrationConfig& cfg);

// Landmark observations of one frame, depths from Eq.-style projection.
std::vector<ScaleObservation> observations_for_frame(const Dataset& dataset,
                                                     int frame_id);

// scales.bin: u32 frame_count, u32 rows, u32 cols, then per frame f32 grid
// row-major.
void save_scale_fields(const std::vector<ScaleField>& fields, const std::string& path);
std::vector<ScaleField> load_scale_fields(const std::string& path, int image_width,
                                          int image_height);

}  // namespace svr
