#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "core/meshing.hpp"

namespace svr {

// Exact nearest-neighbor index over a fixed point set.
class KdTree3 {
public:
    explicit KdTree3(std::vector<Eigen::Vector3d> points);

    std::size_t size() const { return points_.size(); }
    // Distance from q to its nearest point in the set.
    double nearest_distance(const Eigen::Vector3d& q) const;

private:
    struct Node {
        int axis = -1;  // -1 marks a leaf
        double split = 0.0;
        std::uint32_t begin = 0, end = 0;  // leaf range
        std::int32_t left = -1, right = -1;
    };
    std::vector<Eigen::Vector3d> points_;
    std::vector<Node> nodes_;

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const Eigen::Vector3d& q, double& best) const;
};

struct EvalMetrics {
    double accuracy = 0.0;      // mean pred->gt distance
    double completeness = 0.0;  // mean gt->pred distance
    double precision = 0.0;
    double recall = 0.0;
    double fscore = 0.0;
    double threshold = 0.0;
    std::size_t n_pred = 0;
    std::size_t n_gt = 0;
};

// Point-set reconstruction metrics under distance threshold T (meters).
// Throws DataError when either set is empty.
EvalMetrics evaluate_point_sets(const std::vector<Eigen::Vector3d>& pred,
                                const std::vector<Eigen::Vector3d>& gt,
                                double threshold = 0.05);

std::string metrics_to_json(const EvalMetrics& m);
EvalMetrics metrics_from_json(const std::string& json_text);

// Area-weighted uniform sampling: round(area * density) points, triangle
// chosen by area per point, uniform within the triangle. Deterministic
// under seed.
std::vector<Eigen::Vector3d> sample_mesh_points(const Mesh& mesh, double density,
                                                std::uint64_t seed = 0);

}  // namespace svr
