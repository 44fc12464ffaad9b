#include "core/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "core/errors.hpp"
#include "core/parallel.hpp"

namespace svr {

namespace {
constexpr std::uint32_t kLeafSize = 16;
}

KdTree3::KdTree3(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
    if (points_.empty()) throw DataError("KdTree3: empty point set");
    nodes_.reserve(2 * points_.size() / kLeafSize + 8);
    build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree3::build(std::uint32_t begin, std::uint32_t end) {
    const std::int32_t id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }
    Eigen::Vector3d lo = points_[begin], hi = points_[begin];
    for (std::uint32_t i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_[i]);
        hi = hi.cwiseMax(points_[i]);
    }
    int axis;
    (hi - lo).maxCoeff(&axis);
    const std::uint32_t mid = (begin + end) / 2;
    std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                     [axis](const auto& a, const auto& b) { return a[axis] < b[axis]; });
    const double split = points_[mid][axis];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree3::search(std::int32_t node, const Eigen::Vector3d& q, double& best) const {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
        for (std::uint32_t i = n.begin; i < n.end; ++i)
            best = std::min(best, (points_[i] - q).squaredNorm());
        return;
    }
    const double d = q[n.axis] - n.split;
    const std::int32_t near = d < 0.0 ? n.left : n.right;
    const std::int32_t far = d < 0.0 ? n.right : n.left;
    search(near, q, best);
    if (d * d < best) search(far, q, best);
}

double KdTree3::nearest_distance(const Eigen::Vector3d& q) const {
    double best = std::numeric_limits<double>::max();
    search(0, q, best);
    return std::sqrt(best);
}

EvalMetrics evaluate_point_sets(const std::vector<Eigen::Vector3d>& pred,
                                const std::vector<Eigen::Vector3d>& gt,
                                double threshold) {
    if (pred.empty() || gt.empty())
        throw DataError("evaluate: point sets must be non-empty");
    const KdTree3 gt_tree(gt);
    const KdTree3 pred_tree(pred);

    std::vector<double> d_pred(pred.size()), d_gt(gt.size());
    parallel_for(pred.size(),
                 [&](std::size_t i) { d_pred[i] = gt_tree.nearest_distance(pred[i]); });
    parallel_for(gt.size(),
                 [&](std::size_t i) { d_gt[i] = pred_tree.nearest_distance(gt[i]); });

    EvalMetrics m;
    m.threshold = threshold;
    m.n_pred = pred.size();
    m.n_gt = gt.size();
    m.accuracy = std::accumulate(d_pred.begin(), d_pred.end(), 0.0) / pred.size();
    m.completeness = std::accumulate(d_gt.begin(), d_gt.end(), 0.0) / gt.size();
    m.precision = static_cast<double>(std::count_if(
                      d_pred.begin(), d_pred.end(),
                      [threshold](double d) { return d < threshold; })) /
                  pred.size();
    m.recall = static_cast<double>(std::count_if(d_gt.begin(), d_gt.end(),
                                                 [threshold](double d) {
                                                     return d < threshold;
                                                 })) /
               gt.size();
    m.fscore = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
    return m;
}

std::string metrics_to_json(const EvalMetrics& m) {
    nlohmann::json j;
    j["acc"] = m.accuracy;
    j["comp"] = m.completeness;
    j["prec"] = m.precision;
    j["recall"] = m.recall;
    j["fscore"] = m.fscore;
    j["T"] = m.threshold;
    j["n_pred"] = m.n_pred;
    j["n_gt"] = m.n_gt;
    return j.dump(2);
}

EvalMetrics metrics_from_json(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    EvalMetrics m;
    m.accuracy = j.at("acc").get<double>();
    m.completeness = j.at("comp").get<double>();
    m.precision = j.at("prec").get<double>();
    m.recall = j.at("recall").get<double>();
    m.fscore = j.at("fscore").get<double>();
    m.threshold = j.at("T").get<double>();
    m.n_pred = j.at("n_pred").get<std::size_t>();
    m.n_gt = j.at("n_gt").get<std::size_t>();
    return m;
}

std::vector<Eigen::Vector3d> sample_mesh_points(const Mesh& mesh, double density,
                                                std::uint64_t seed) {
    std::vector<double> cumulative;
    cumulative.reserve(mesh.triangles.size());
    double total = 0.0;
    for (const auto& t : mesh.triangles) {
        const Eigen::Vector3d e1 = mesh.vertices[t.y()] - mesh.vertices[t.x()];
        const Eigen::Vector3d e2 = mesh.vertices[t.z()] - mesh.vertices[t.x()];
        total += 0.5 * e1.cross(e2).norm();
        cumulative.push_back(total);
    }
    std::vector<Eigen::Vector3d> points;
    if (total <= 0.0) return points;

    const std::size_t n = static_cast<std::size_t>(std::llround(total * density));
    points.reserve(n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pick(0.0, total);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), pick(rng));
        const std::size_t ti = static_cast<std::size_t>(it - cumulative.begin());
        const auto& t = mesh.triangles[std::min(ti, mesh.triangles.size() - 1)];
        // sqrt trick for uniform barycentric coordinates
        const double su = std::sqrt(unit(rng));
        const double v = unit(rng);
        const double a = 1.0 - su, b = su * (1.0 - v), c = su * v;
        points.push_back(a * mesh.vertices[t.x()] + b * mesh.vertices[t.y()] +
                         c * mesh.vertices[t.z()]);
    }
    return points;
}

}  // namespace svr
