#include <doctest.h>

#include <random>

#include "core/errors.hpp"
#include "core/evaluation.hpp"
#include "support/generators.hpp"

using namespace svr;

namespace {

std::vector<Eigen::Vector3d> random_points(std::mt19937_64& rng, std::size_t n,
                                           double extent = 1.0) {
    std::uniform_real_distribution<double> u(-extent, extent);
    std::vector<Eigen::Vector3d> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({u(rng), u(rng), u(rng)});
    return pts;
}

// O(n^2) oracle for all five metrics.
EvalMetrics brute_force_metrics(const std::vector<Eigen::Vector3d>& pred,
                                const std::vector<Eigen::Vector3d>& gt, double T) {
    auto nn = [](const Eigen::Vector3d& q, const std::vector<Eigen::Vector3d>& set) {
        double best = std::numeric_limits<double>::max();
        for (const auto& p : set) best = std::min(best, (p - q).norm());
        return best;
    };
    EvalMetrics m;
    m.threshold = T;
    m.n_pred = pred.size();
    m.n_gt = gt.size();
    std::size_t hit = 0;
    for (const auto& p : pred) {
        const double d = nn(p, gt);
        m.accuracy += d;
        if (d < T) ++hit;
    }
    m.accuracy /= pred.size();
    m.precision = static_cast<double>(hit) / pred.size();
    hit = 0;
    for (const auto& g : gt) {
        const double d = nn(g, pred);
        m.completeness += d;
        if (d < T) ++hit;
    }
    m.completeness /= gt.size();
    m.recall = static_cast<double>(hit) / gt.size();
    m.fscore = (m.precision + m.recall) > 0
                   ? 2 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
    return m;
}

}  // namespace

TEST_CASE("evaluate: identical sets") {
    std::mt19937_64 rng(1);
    const auto pts = random_points(rng, 500);
    const auto m = evaluate_point_sets(pts, pts, 0.05);
    CHECK(m.accuracy == 0.0);
    CHECK(m.completeness == 0.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.fscore == 1.0);
}

TEST_CASE("evaluate: rigid 4cm offset under a 5cm threshold") {
    // Lattice spacing 0.2 keeps every point's nearest neighbor its own twin.
    std::vector<Eigen::Vector3d> gt;
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y)
            for (int z = 0; z < 8; ++z) gt.push_back({0.2 * x, 0.2 * y, 0.2 * z});
    std::vector<Eigen::Vector3d> pred;
    const Eigen::Vector3d offset(0.04, 0.0, 0.0);
    for (const auto& p : gt) pred.push_back(p + offset);
    const auto m = evaluate_point_sets(pred, gt, 0.05);
    // Points are far apart relative to 4cm, so the nearest neighbor is the
    // shifted twin.
    CHECK(m.accuracy == doctest::Approx(0.04).epsilon(1e-6));
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.fscore == 1.0);
}

TEST_CASE("evaluate: exact match with the brute-force oracle") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const auto pred = random_points(rng, 700 + 300 * trial);
        const auto gt = random_points(rng, 900);
        const auto fast = evaluate_point_sets(pred, gt, 0.05);
        const auto slow = brute_force_metrics(pred, gt, 0.05);
        CHECK(fast.accuracy == doctest::Approx(slow.accuracy).epsilon(1e-12));
        CHECK(fast.completeness == doctest::Approx(slow.completeness).epsilon(1e-12));
        CHECK(fast.precision == slow.precision);
        CHECK(fast.recall == slow.recall);
        CHECK(fast.fscore == doctest::Approx(slow.fscore).epsilon(1e-12));
    }
}

TEST_CASE("evaluate: symmetry and f-score bound") {
    std::mt19937_64 rng(4);
    const auto a = random_points(rng, 800);
    const auto b = random_points(rng, 600);
    const auto ab = evaluate_point_sets(a, b, 0.05);
    const auto ba = evaluate_point_sets(b, a, 0.05);
    CHECK(ab.accuracy == doctest::Approx(ba.completeness).epsilon(1e-12));
    CHECK(ab.completeness == doctest::Approx(ba.accuracy).epsilon(1e-12));
    CHECK(ab.fscore <= 2.0 * std::min(ab.precision, ab.recall) + 1e-12);
}

TEST_CASE("evaluate: rigid invariance") {
    std::mt19937_64 rng(5);
    const auto pred = random_points(rng, 500);
    const auto gt = random_points(rng, 500);
    const Eigen::Matrix3d R = test::random_rotation(rng);
    const Eigen::Vector3d t(0.3, -1.2, 0.7);
    std::vector<Eigen::Vector3d> pred_t, gt_t;
    for (const auto& p : pred) pred_t.push_back(R * p + t);
    for (const auto& p : gt) gt_t.push_back(R * p + t);
    const auto m0 = evaluate_point_sets(pred, gt, 0.05);
    const auto m1 = evaluate_point_sets(pred_t, gt_t, 0.05);
    CHECK(std::abs(m0.accuracy - m1.accuracy) < 1e-9);
    CHECK(std::abs(m0.completeness - m1.completeness) < 1e-9);
    CHECK(m0.precision == doctest::Approx(m1.precision).epsilon(1e-9));
    CHECK(m0.recall == doctest::Approx(m1.recall).epsilon(1e-9));
}

TEST_CASE("evaluate: empty sets are rejected") {
    std::vector<Eigen::Vector3d> empty, one{{0, 0, 0}};
    CHECK_THROWS_AS(evaluate_point_sets(empty, one), DataError);
    CHECK_THROWS_AS(evaluate_point_sets(one, empty), DataError);
}

TEST_CASE("metrics json round trip") {
    EvalMetrics m;
    m.accuracy = 0.012;
    m.completeness = 0.034;
    m.precision = 0.9;
    m.recall = 0.8;
    m.fscore = 0.847;
    m.threshold = 0.05;
    m.n_pred = 1000;
    m.n_gt = 1200;
    const auto back = metrics_from_json(metrics_to_json(m));
    CHECK(back.accuracy == m.accuracy);
    CHECK(back.fscore == m.fscore);
    CHECK(back.n_gt == m.n_gt);
}

TEST_CASE("sample_mesh_points: unit square at density 100") {
    Mesh square;
    square.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    square.triangles = {{0, 1, 2}, {0, 2, 3}};
    const auto pts = sample_mesh_points(square, 100.0, 11);
    CHECK(pts.size() >= 90);
    CHECK(pts.size() <= 110);
    for (const auto& p : pts) {
        CHECK(p.x() >= -1e-12);
        CHECK(p.x() <= 1.0 + 1e-12);
        CHECK(p.y() >= -1e-12);
        CHECK(p.y() <= 1.0 + 1e-12);
        CHECK(std::abs(p.z()) < 1e-12);
    }
    CHECK(sample_mesh_points(square, 100.0, 11) == pts);  // deterministic
}

TEST_CASE("sample_mesh_points: zero-area mesh") {
    Mesh degenerate;
    degenerate.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    degenerate.triangles = {{0, 1, 2}};
    CHECK(sample_mesh_points(degenerate, 1000.0, 1).empty());
    CHECK(sample_mesh_points(Mesh{}, 1000.0, 1).empty());
}

TEST_CASE("sample_mesh_points: per-triangle counts proportional to area") {
    // Two triangles with area ratio 1:4 in disjoint x ranges.
    Mesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0},
                     {10, 0, 0}, {14, 0, 0}, {10, 2, 0}};
    mesh.triangles = {{0, 1, 2}, {3, 4, 5}};
    const double total_area = mesh.area();
    CHECK(total_area == doctest::Approx(0.5 + 4.0));
    const std::size_t n = 45000;
    const auto pts = sample_mesh_points(mesh, n / total_area, 3);
    std::size_t small = 0;
    for (const auto& p : pts)
        if (p.x() < 5.0) ++small;
    const double expected = pts.size() * (0.5 / 4.5);
    const double sigma = std::sqrt(pts.size() * (0.5 / 4.5) * (4.0 / 4.5));
    CHECK(std::abs(static_cast<double>(small) - expected) < 3.0 * sigma);
}
