#include "core/scale_calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <unordered_map>

#include "core/errors.hpp"
#include "core/parallel.hpp"

namespace svr {

UnaryLossResult unary_loss(const Frame& frame, const ScaleField& scale,
                           std::span<const ScaleObservation> observations,
                           std::vector<double>* grad) {
    UnaryLossResult out;
    for (const ScaleObservation& obs : observations) {
        const double D = frame.depth.sample(obs.pixel.x(), obs.pixel.y());
        if (!(D > 0.0)) continue;
        const ScaleField::Bilinear b = scale.lookup(obs.pixel.x(), obs.pixel.y());
        double phi = 0.0;
        for (int k = 0; k < 4; ++k) phi += b.w[k] * scale.values()[b.idx[k]];
        const double r = obs.depth - D * phi;
        out.loss += r * r;
        ++out.used;
        if (grad)
            for (int k = 0; k < 4; ++k) (*grad)[b.idx[k]] += -2.0 * r * D * b.w[k];
    }
    return out;
}

namespace {

// value + derivative of the Huber penalty; width <= 0 degrades to r^2.
inline void huber(double r, double width, double& value, double& deriv) {
    if (width <= 0.0 || std::abs(r) <= width) {
        value = r * r;
        deriv = 2.0 * r;
    } else {
        value = 2.0 * width * std::abs(r) - width * width;
        deriv = 2.0 * width * (r > 0.0 ? 1.0 : -1.0);
    }
}

}  // namespace

BinaryLossResult binary_loss(const Frame& frame_i, const Frame& frame_j,
                             const ScaleField& scale_i, const ScaleField& scale_j,
                             std::span<const Eigen::Vector2d> pixels,
                             std::vector<double>* grad_i, std::vector<double>* grad_j,
                             double huber_geo, double huber_photo,
                             double occlusion_gate) {
    BinaryLossResult out;
    const Camera& ci = frame_i.camera;
    const Camera& cj = frame_j.camera;
    // Relative pose: x_cam_j = R_ij * x_cam_i + t_ij.
    const Eigen::Matrix3d R_ij = cj.rotation.transpose() * ci.rotation;
    const Eigen::Vector3d t_ij = cj.rotation.transpose() * (ci.translation - cj.translation);

    for (const Eigen::Vector2d& p : pixels) {
        const double D_i = frame_i.depth.sample(p.x(), p.y());
        if (!(D_i > 0.0)) {
            ++out.skipped;
            continue;
        }
        const ScaleField::Bilinear bi = scale_i.lookup(p.x(), p.y());
        double phi_i = 0.0;
        for (int k = 0; k < 4; ++k) phi_i += bi.w[k] * scale_i.values()[bi.idx[k]];

        const double z = D_i * phi_i;  // scaled depth, Eq.-5 unprojection
        const Eigen::Vector3d dir{(p.x() - ci.cx) / ci.fx, (p.y() - ci.cy) / ci.fy, 1.0};
        const Eigen::Vector3d xc_j = R_ij * (dir * z) + t_ij;
        if (xc_j.z() <= Camera::kMinDepth) {
            ++out.skipped;
            continue;
        }
        const double d_ij = xc_j.z();
        const Eigen::Vector2d pj{cj.fx * xc_j.x() / d_ij + cj.cx,
                                 cj.fy * xc_j.y() / d_ij + cj.cy};
        if (!cj.pixel_in_frame(pj, 1.0)) {
            ++out.skipped;
            continue;
        }

        double dDdx, dDdy, dIdx, dIdy;
        const double D_j = frame_j.depth.sample_with_grad(pj.x(), pj.y(), 0, dDdx, dDdy);
        if (!(D_j > 0.0)) {
            ++out.skipped;
            continue;
        }
        double dphij_dx, dphij_dy;
        const ScaleField::Bilinear bj = scale_j.lookup(pj.x(), pj.y());
        const double phi_j = scale_j.value_with_pixel_grad(pj.x(), pj.y(), dphij_dx, dphij_dy);
        const double I_i = frame_i.gray.sample(p.x(), p.y());
        const double I_j = frame_j.gray.sample_with_grad(pj.x(), pj.y(), 0, dIdx, dIdy);

        const double r_g = d_ij - D_j * phi_j;
        if (occlusion_gate > 0.0 && r_g > occlusion_gate * d_ij) {
            ++out.skipped;  // frame j sees a closer surface: occluded there
            continue;
        }
        const double r_ph = I_i - I_j;
        const double geo_width = huber_geo * d_ij;  // relative width, moves with z
        const bool geo_linear = huber_geo > 0.0 && std::abs(r_g) > geo_width;
        double geo_val, geo_deriv;
        huber(r_g, geo_width, geo_val, geo_deriv);
        double ph_val, ph_deriv;
        huber(r_ph, huber_photo, ph_val, ph_deriv);
        out.geometric += geo_val;
        out.photometric += ph_val;
        ++out.used;

        if (grad_j)
            for (int k = 0; k < 4; ++k)
                (*grad_j)[bj.idx[k]] += geo_deriv * (-D_j * bj.w[k]);

        if (grad_i) {
            // Chain through z = D_i * phi_i: camera-j point moves along v.
            const Eigen::Vector3d v = R_ij * dir;
            const double dz_d = v.z();
            const double dpx_dz = cj.fx * (v.x() * d_ij - xc_j.x() * v.z()) / (d_ij * d_ij);
            const double dpy_dz = cj.fy * (v.y() * d_ij - xc_j.y() * v.z()) / (d_ij * d_ij);
            const double dDj_dz = dDdx * dpx_dz + dDdy * dpy_dz;
            const double dphij_dz = dphij_dx * dpx_dz + dphij_dy * dpy_dz;
            const double drg_dz = dz_d - dDj_dz * phi_j - D_j * dphij_dz;
            const double drph_dz = -(dIdx * dpx_dz + dIdy * dpy_dz);
            double dgeo_dz = geo_deriv * drg_dz;
            if (geo_linear) {
                // linear branch of 2*w*|r| - w^2 with w = huber_geo * d_ij
                const double dw_dz = huber_geo * dz_d;
                dgeo_dz += 2.0 * dw_dz * (std::abs(r_g) - geo_width);
            }
            const double dl_dz = dgeo_dz + ph_deriv * drph_dz;
            for (int k = 0; k < 4; ++k)
                (*grad_i)[bi.idx[k]] += dl_dz * D_i * bi.w[k];
        }
    }
    return out;
}

std::vector<ScaleObservation> observations_for_frame(const Dataset& dataset,
                                                     int frame_id) {
    std::vector<ScaleObservation> obs;
    const Camera& cam = dataset.frames[frame_id].camera;
    for (const Landmark& lm : dataset.landmarks) {
        for (const auto& o : lm.observations) {
            if (o.frame != frame_id) continue;
            const Eigen::Vector3d xc = cam.world_to_camera(lm.position);
            if (xc.z() > Camera::kMinDepth) obs.push_back({o.pixel, xc.z()});
        }
    }
    return obs;
}

namespace {

struct OrderedPair {
    int i, j;
    std::vector<Eigen::Vector2d> pixels;
};

std::vector<OrderedPair> build_pairs(const Dataset& ds, const CalibrationConfig& cfg) {
    // Shared-landmark pixels per ordered pair.
    std::unordered_map<std::int64_t, std::vector<Eigen::Vector2d>> shared;
    for (const Landmark& lm : ds.landmarks)
        for (const auto& a : lm.observations)
            for (const auto& b : lm.observations)
                if (a.frame != b.frame)
                    shared[(static_cast<std::int64_t>(a.frame) << 32) | b.frame]
                        .push_back(a.pixel);

    std::vector<OrderedPair> pairs;
    for (const CovisPair& cp : ds.covis) {
        if (cp.count < cfg.min_covisibility) continue;
        for (const auto [src, dst] : {std::pair{cp.i, cp.j}, std::pair{cp.j, cp.i}}) {
            OrderedPair op;
            op.i = src;
            op.j = dst;
            const auto it =
                shared.find((static_cast<std::int64_t>(src) << 32) | dst);
            if (it != shared.end()) op.pixels = it->second;

            const Frame& f = ds.frames[src];
            std::mt19937_64 rng(cfg.seed ^
                                (0x9E3779B97F4A7C15ull * (src * 1315423911u + dst)));
            std::uniform_int_distribution<int> ux(0, f.depth.width - 1);
            std::uniform_int_distribution<int> uy(0, f.depth.height - 1);
            int budget = cfg.pair_pixel_budget, attempts = 8 * cfg.pair_pixel_budget;
            while (budget > 0 && attempts-- > 0) {
                const int x = ux(rng), y = uy(rng);
                if (!f.depth_valid(x, y)) continue;
                op.pixels.push_back(
                    {static_cast<double>(x), static_cast<double>(y)});
                --budget;
            }
            pairs.push_back(std::move(op));
        }
    }
    return pairs;
}

}  // namespace

CalibrationResult optimize_scales(const Dataset& ds, const CalibrationConfig& cfg) {
    if (ds.landmarks.empty()) throw DataError("optimize_scales: empty landmark set");
    const int n_frames = static_cast<int>(ds.frames.size());
    const int n_cp = cfg.grid_rows * cfg.grid_cols;

    std::vector<std::vector<ScaleObservation>> observations(n_frames);
    for (int f = 0; f < n_frames; ++f) observations[f] = observations_for_frame(ds, f);
    const std::vector<OrderedPair> pairs = build_pairs(ds, cfg);

    CalibrationResult result;
    result.fields.reserve(n_frames);
    for (int f = 0; f < n_frames; ++f) {
        // Seed each field with the median landmark depth ratio; the joint
        // optimization then only has to recover the spatial variation.
        double init = 1.0;
        std::vector<double> ratios;
        if (cfg.landmark_init)
            for (const ScaleObservation& o : observations[f]) {
                const double D = ds.frames[f].depth.sample(o.pixel.x(), o.pixel.y());
                if (D > 0.0 && o.depth > 0.0) ratios.push_back(o.depth / D);
            }
        if (!ratios.empty()) {
            std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2,
                             ratios.end());
            init = std::clamp(ratios[ratios.size() / 2], cfg.clamp_lo, cfg.clamp_hi);
        }
        result.fields.emplace_back(cfg.grid_rows, cfg.grid_cols,
                                   ds.frames[f].camera.width,
                                   ds.frames[f].camera.height, init);
    }

    std::vector<std::vector<double>> grad(n_frames, std::vector<double>(n_cp, 0.0));
    std::vector<std::vector<double>> rms(n_frames, std::vector<double>(n_cp, 0.0));
    const int workers = worker_count();

    for (int step = 0; step < cfg.steps; ++step) {
        for (auto& g : grad) std::fill(g.begin(), g.end(), 0.0);

        // Unary terms: one frame per task, frame-owned gradient buffers.
        std::vector<double> unary_losses(n_frames, 0.0);
        parallel_for(n_frames, [&](std::size_t f) {
            unary_losses[f] =
                unary_loss(ds.frames[f], result.fields[f], observations[f], &grad[f])
                    .loss;
        });
        double loss = 0.0;
        for (double l : unary_losses) loss += cfg.lambda * l;
        for (auto& g : grad)
            for (double& v : g) v *= cfg.lambda;

        // Binary terms: per-worker buffers, merged in worker order so the
        // result does not depend on scheduling.
        std::vector<std::unordered_map<int, std::vector<double>>> worker_grads(workers);
        std::vector<double> worker_loss(workers, 0.0);
        parallel_chunks(pairs.size(), [&](std::size_t begin, std::size_t end, int w) {
            auto& local = worker_grads[w];
            for (std::size_t k = begin; k < end; ++k) {
                const OrderedPair& op = pairs[k];
                // element references survive rehashing, iterators do not
                auto& gi = local.try_emplace(op.i, std::vector<double>(n_cp, 0.0))
                               .first->second;
                auto& gj = local.try_emplace(op.j, std::vector<double>(n_cp, 0.0))
                               .first->second;
                worker_loss[w] += binary_loss(ds.frames[op.i], ds.frames[op.j],
                                              result.fields[op.i], result.fields[op.j],
                                              op.pixels, &gi, &gj, cfg.huber_geo,
                                              cfg.huber_photo, cfg.occlusion_gate)
                                      .total();
            }
        });
        for (int w = 0; w < workers; ++w) {
            loss += worker_loss[w];
            for (const auto& [f, g] : worker_grads[w])
                for (int k = 0; k < n_cp; ++k) grad[f][k] += g[k];
        }

        if (cfg.smoothness > 0.0) {
            for (int f = 0; f < n_frames; ++f) {
                const auto& field = result.fields[f].values();
                for (int row = 0; row < cfg.grid_rows; ++row) {
                    for (int col = 0; col < cfg.grid_cols; ++col) {
                        const int k = row * cfg.grid_cols + col;
                        if (col + 1 < cfg.grid_cols) {
                            const double d = field[k] - field[k + 1];
                            loss += cfg.smoothness * d * d;
                            grad[f][k] += 2.0 * cfg.smoothness * d;
                            grad[f][k + 1] -= 2.0 * cfg.smoothness * d;
                        }
                        if (row + 1 < cfg.grid_rows) {
                            const double d = field[k] - field[k + cfg.grid_cols];
                            loss += cfg.smoothness * d * d;
                            grad[f][k] += 2.0 * cfg.smoothness * d;
                            grad[f][k + cfg.grid_cols] -= 2.0 * cfg.smoothness * d;
                        }
                    }
                }
            }
        }

        if (!std::isfinite(loss))
            throw DivergedError("optimize_scales: non-finite loss at step " +
                                std::to_string(step));
        result.loss_trace.push_back(loss);

        const double bias = 1.0 - std::pow(cfg.rms_decay, step + 1);
        for (int f = 0; f < n_frames; ++f) {
            auto& field = result.fields[f].values();
            for (int k = 0; k < n_cp; ++k) {
                const double g = grad[f][k];
                rms[f][k] = cfg.rms_decay * rms[f][k] + (1.0 - cfg.rms_decay) * g * g;
                field[k] -= cfg.lr * g / (std::sqrt(rms[f][k] / bias) + cfg.rms_eps);
            }
            result.fields[f].clamp(cfg.clamp_lo, cfg.clamp_hi);
        }
    }
    return result;
}

void save_scale_fields(const std::vector<ScaleField>& fields, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("save_scale_fields: cannot open " + path);
    const std::uint32_t header[3] = {
        static_cast<std::uint32_t>(fields.size()),
        static_cast<std::uint32_t>(fields.empty() ? 0 : fields[0].rows()),
        static_cast<std::uint32_t>(fields.empty() ? 0 : fields[0].cols())};
    os.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (const ScaleField& f : fields)
        for (double v : f.values()) {
            const float fv = static_cast<float>(v);
            os.write(reinterpret_cast<const char*>(&fv), sizeof(float));
        }
    if (!os) throw DataError("save_scale_fields: write failed for " + path);
}

std::vector<ScaleField> load_scale_fields(const std::string& path, int image_width,
                                          int image_height) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("load_scale_fields: missing file " + path);
    std::uint32_t header[3];
    is.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!is) throw DataError("load_scale_fields: truncated header in " + path);
    std::vector<ScaleField> fields;
    fields.reserve(header[0]);
    for (std::uint32_t f = 0; f < header[0]; ++f) {
        ScaleField field(static_cast<int>(header[1]), static_cast<int>(header[2]),
                         image_width, image_height);
        for (double& v : field.values()) {
            float fv;
            is.read(reinterpret_cast<char*>(&fv), sizeof(float));
            v = fv;
        }
        if (!is) throw DataError("load_scale_fields: truncated data in " + path);
        fields.push_back(std::move(field));
    }
    return fields;
}

}  // namespace svr
