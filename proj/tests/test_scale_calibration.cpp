#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "core/errors.hpp"
#include "core/scale_calibration.hpp"
#include "core/synthetic.hpp"
#include "support/generators.hpp"

using namespace svr;

namespace {

Frame constant_frame(double depth_value, double gray_value, int w = 64, int h = 48) {
    Frame f;
    f.camera = test::identity_camera(60, 60, (w - 1) / 2.0, (h - 1) / 2.0, w, h);
    f.depth = ImageF32(w, h, 1, static_cast<float>(depth_value));
    f.color = ImageF32(w, h, 3, static_cast<float>(gray_value));
    f.normal = ImageF32(w, h, 3);
    f.build_gray();
    return f;
}

Frame smooth_frame(std::uint64_t seed, int w = 64, int h = 48) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 2 * M_PI);
    const double p1 = u(rng), p2 = u(rng), p3 = u(rng);
    Frame f;
    f.camera = test::identity_camera(60, 60, (w - 1) / 2.0, (h - 1) / 2.0, w, h);
    f.depth = ImageF32(w, h, 1);
    f.color = ImageF32(w, h, 3);
    f.normal = ImageF32(w, h, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            f.depth.at(x, y) = static_cast<float>(
                2.0 + 0.4 * std::sin(x / 9.0 + p1) * std::cos(y / 7.0 + p2));
            const float g = static_cast<float>(
                0.5 + 0.3 * std::sin(x / 11.0 + p3) * std::sin(y / 5.0 + p1));
            for (int c = 0; c < 3; ++c) f.color.at(x, y, c) = g;
        }
    }
    f.build_gray();
    return f;
}

}  // namespace

TEST_CASE("unary loss: zero at the consistent fixed point") {
    Frame f = constant_frame(2.0, 0.5);
    ScaleField scale(6, 8, f.camera.width, f.camera.height, 1.0);
    std::vector<ScaleObservation> obs = {{{10.5, 20.5}, 2.0}, {{40.0, 12.0}, 2.0}};
    std::vector<double> grad(48, 0.0);
    const auto r = unary_loss(f, scale, obs, &grad);
    CHECK(r.loss == doctest::Approx(0.0));
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("unary loss: hand-differentiated single landmark") {
    Frame f = constant_frame(2.0, 0.5);
    ScaleField scale(6, 8, f.camera.width, f.camera.height, 1.0);
    const Eigen::Vector2d p{23.4, 17.8};
    std::vector<ScaleObservation> obs = {{p, 3.0}};
    std::vector<double> grad(48, 0.0);
    const auto r = unary_loss(f, scale, obs, &grad);
    CHECK(r.loss == doctest::Approx(1.0));  // (3 - 2*1)^2

    const ScaleField::Bilinear b = scale.lookup(p.x(), p.y());
    double picked = 0.0;
    for (int k = 0; k < 4; ++k) {
        CHECK(grad[b.idx[k]] == doctest::Approx(-4.0 * b.w[k]));
        picked += std::abs(grad[b.idx[k]]);
    }
    double total = 0.0;
    for (double g : grad) total += std::abs(g);
    CHECK(total == doctest::Approx(picked));  // only the 4 enclosing points move
}

TEST_CASE("unary loss: gradient matches finite differences") {
    Frame f = smooth_frame(101);
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> us(0.7, 1.4), up(2.0, 60.0), uq(2.0, 44.0),
        ud(1.0, 4.0);
    ScaleField scale(6, 8, f.camera.width, f.camera.height, 1.0);
    for (double& v : scale.values()) v = us(rng);
    std::vector<ScaleObservation> obs;
    for (int i = 0; i < 30; ++i) obs.push_back({{up(rng), uq(rng)}, ud(rng)});

    std::vector<double> grad(48, 0.0);
    unary_loss(f, scale, obs, &grad);

    const double h = 1e-5;
    for (int k = 0; k < 48; ++k) {
        ScaleField plus = scale, minus = scale;
        plus.values()[k] += h;
        minus.values()[k] -= h;
        const double fd = (unary_loss(f, plus, obs, nullptr).loss -
                           unary_loss(f, minus, obs, nullptr).loss) /
                          (2 * h);
        CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("binary loss: identical frames cost nothing") {
    Frame f = smooth_frame(7);
    ScaleField scale(6, 8, f.camera.width, f.camera.height, 1.0);
    std::vector<Eigen::Vector2d> pixels;
    for (int i = 5; i < 60; i += 7) pixels.push_back({static_cast<double>(i), 20.0});
    const auto r = binary_loss(f, f, scale, scale, pixels, nullptr, nullptr);
    CHECK(r.used == pixels.size());
    CHECK(r.geometric == doctest::Approx(0.0));
    CHECK(r.photometric == doctest::Approx(0.0));
}

TEST_CASE("binary loss: fronto-parallel plane scene") {
    // Both cameras look down +z at the plane z=2; depth maps are constant so
    // bilinear resampling is exact.
    Frame fi = constant_frame(2.0, 0.5);
    Frame fj = constant_frame(2.0, 0.5);
    fj.camera.translation = {0.08, 0.04, 0.0};
    ScaleField si(6, 8, fi.camera.width, fi.camera.height, 1.0);
    ScaleField sj = si;

    std::vector<Eigen::Vector2d> pixels;
    for (int y = 8; y < 40; y += 5)
        for (int x = 8; x < 56; x += 5)
            pixels.push_back({static_cast<double>(x), static_cast<double>(y)});

    auto r = binary_loss(fi, fj, si, sj, pixels, nullptr, nullptr);
    REQUIRE(r.used > 20);
    CHECK(r.geometric < 1e-8);
    CHECK(r.photometric < 1e-12);

    // +10% on phi_j: residual becomes -0.1 * D_j exactly.
    for (double& v : sj.values()) v = 1.1;
    r = binary_loss(fi, fj, si, sj, pixels, nullptr, nullptr);
    const double expected = static_cast<double>(r.used) * (0.1 * 2.0) * (0.1 * 2.0);
    CHECK(r.geometric == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("binary loss: gradients to both fields match finite differences") {
    Frame fi = smooth_frame(31);
    Frame fj = smooth_frame(32);
    std::mt19937_64 rng(9);
    fj.camera.rotation = Eigen::AngleAxisd(0.05, Eigen::Vector3d(0.2, 1.0, 0.1).normalized())
                             .toRotationMatrix();
    fj.camera.translation = {0.06, -0.03, 0.02};

    std::uniform_real_distribution<double> us(0.8, 1.3), up(3.0, 60.0), uq(3.0, 44.0);
    ScaleField si(5, 6, fi.camera.width, fi.camera.height, 1.0);
    ScaleField sj = si;
    for (double& v : si.values()) v = us(rng);
    for (double& v : sj.values()) v = us(rng);
    std::vector<Eigen::Vector2d> pixels;
    for (int i = 0; i < 40; ++i) pixels.push_back({up(rng), uq(rng)});

    const int n = 30;
    std::vector<double> gi(n, 0.0), gj(n, 0.0);
    binary_loss(fi, fj, si, sj, pixels, &gi, &gj);

    const double h = 1e-5;
    double max_g = 1e-9;
    for (int k = 0; k < n; ++k)
        max_g = std::max({max_g, std::abs(gi[k]), std::abs(gj[k])});
    for (int k = 0; k < n; ++k) {
        ScaleField p = si, m = si;
        p.values()[k] += h;
        m.values()[k] -= h;
        const double fd = (binary_loss(fi, fj, p, sj, pixels, nullptr, nullptr).total() -
                           binary_loss(fi, fj, m, sj, pixels, nullptr, nullptr).total()) /
                          (2 * h);
        CHECK(std::abs(gi[k] - fd) <= 1e-4 * (std::abs(fd) + 1e-3 * max_g));
    }
    for (int k = 0; k < n; ++k) {
        ScaleField p = sj, m = sj;
        p.values()[k] += h;
        m.values()[k] -= h;
        const double fd = (binary_loss(fi, fj, si, p, pixels, nullptr, nullptr).total() -
                           binary_loss(fi, fj, si, m, pixels, nullptr, nullptr).total()) /
                          (2 * h);
        CHECK(std::abs(gj[k] - fd) <= 1e-4 * (std::abs(fd) + 1e-3 * max_g));
    }
}

TEST_CASE("optimize_scales: ground-truth depth is a fixed point") {
    const char* root = "/tmp/svrecon_scale_fixed";
    std::filesystem::remove_all(root);
    SceneSpec spec;
    spec.n_frames = 6;
    spec.width = 128;
    spec.height = 96;
    spec.n_landmarks = 150;
    spec.seed = 3;
    generate_synthetic(spec, root);
    const Dataset ds = load_dataset(root);

    CalibrationConfig cfg;
    cfg.steps = 120;
    cfg.grid_rows = 12;
    cfg.grid_cols = 16;
    cfg.pair_pixel_budget = 128;
    cfg.min_covisibility = 10;
    const auto result = optimize_scales(ds, cfg);
    REQUIRE(result.fields.size() == ds.frames.size());
    for (const ScaleField& f : result.fields) {
        double err = 0.0;
        for (double v : f.values()) err += std::abs(v - 1.0);
        CHECK(err / f.values().size() < 0.01);
    }
    CHECK(result.loss_trace.back() <= result.loss_trace.front() + 1e-9);
}

TEST_CASE("optimize_scales: recovers per-frame constant scales") {
    const char* root = "/tmp/svrecon_scale_recovery";
    std::filesystem::remove_all(root);
    SceneSpec spec;
    spec.n_frames = 8;
    spec.width = 160;
    spec.height = 120;
    spec.n_landmarks = 250;
    spec.scale_min = 0.5;
    spec.scale_max = 2.0;
    spec.seed = 11;
    generate_synthetic(spec, root);
    const Dataset ds = load_dataset(root);
    REQUIRE(ds.gt_scales.size() == 8);

    CalibrationConfig cfg;
    cfg.steps = 500;
    cfg.grid_rows = 12;
    cfg.grid_cols = 16;
    cfg.pair_pixel_budget = 256;
    cfg.min_covisibility = 10;
    const auto result = optimize_scales(ds, cfg);
    for (std::size_t f = 0; f < ds.frames.size(); ++f) {
        const double recovered = result.fields[f].mean();
        CHECK(std::abs(recovered - ds.gt_scales[f]) < 0.02 * ds.gt_scales[f]);
    }
}

TEST_CASE("optimize_scales: loss invariant under covisibility order") {
    const char* root = "/tmp/svrecon_scale_fixed";  // reuse
    const Dataset ds = load_dataset(root);
    Dataset shuffled = ds;
    std::reverse(shuffled.covis.begin(), shuffled.covis.end());

    CalibrationConfig cfg;
    cfg.steps = 1;
    cfg.grid_rows = 8;
    cfg.grid_cols = 10;
    cfg.pair_pixel_budget = 64;
    cfg.min_covisibility = 10;
    const double a = optimize_scales(ds, cfg).loss_trace[0];
    const double b = optimize_scales(shuffled, cfg).loss_trace[0];
    CHECK(a == doctest::Approx(b).epsilon(1e-10));
}

TEST_CASE("optimize_scales: dominant unary pins the per-observation scale") {
    // Single frame, single landmark, no covisibility: the unary term alone
    // drives phi(p) -> d / D.
    Dataset ds;
    ds.frames.push_back(constant_frame(2.0, 0.5));
    ds.frames[0].id = 0;
    Landmark lm;
    lm.id = 0;
    lm.position = ds.frames[0].camera.unproject({30.0, 20.0}, 3.0);
    lm.observations.push_back({0, {30.0, 20.0}});
    ds.landmarks.push_back(lm);

    CalibrationConfig cfg;
    cfg.lambda = 1e6;
    cfg.steps = 400;
    cfg.grid_rows = 6;
    cfg.grid_cols = 8;
    const auto result = optimize_scales(ds, cfg);
    const double fitted = result.fields[0].value(30.0, 20.0);
    CHECK(fitted == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("scale fields: save/load round trip") {
    std::vector<ScaleField> fields;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> u(0.5f, 2.0f);
    for (int f = 0; f < 3; ++f) {
        ScaleField s(4, 5, 64, 48, 1.0);
        for (double& v : s.values()) v = u(rng);
        fields.push_back(s);
    }
    const std::string path = "/tmp/svrecon_scales.bin";
    save_scale_fields(fields, path);
    const auto back = load_scale_fields(path, 64, 48);
    REQUIRE(back.size() == 3);
    for (int f = 0; f < 3; ++f)
        for (std::size_t k = 0; k < fields[f].values().size(); ++k)
            CHECK(back[f].values()[k] ==
                  doctest::Approx(fields[f].values()[k]).epsilon(1e-7));
}
