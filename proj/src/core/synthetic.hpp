#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "core/camera.hpp"
#include "core/meshing.hpp"

namespace svr {

struct SceneSpec {
    double room_w = 2.4, room_d = 2.2, room_h = 2.0;  // interior extents, meters
    int n_objects = 2;                                // spheres/boxes, alternating
    int n_frames = 24;
    int width = 320, height = 240;
    double fov_deg = 70.0;
    int label_channels = 4;
    double texture_amplitude = 0.25;  // color modulation depth
    double texture_frequency = 4.0;   // rad/m

    // Prior depth = gt_depth / (s_i * (1 + amplitude * g_i(u,v))) with g a
    // per-frame low-frequency field and s_i per-frame constant.
    double distortion_amplitude = 0.0;
    double scale_min = 1.0, scale_max = 1.0;

    int n_landmarks = 500;
    std::uint64_t seed = 1;
};

// Analytic room + object geometry. Class ids: 0 walls/ceiling, 1 floor,
// 2 spheres, 3 boxes.
class SyntheticScene {
public:
    explicit SyntheticScene(const SceneSpec& spec);

    struct Hit {
        double depth = 0.0;  // camera-frame z
        Eigen::Vector3d point{0, 0, 0};
        Eigen::Vector3d normal{0, 0, 1};  // world, toward free space
        int label = 0;
    };

    // Ray through pixel (u,v); direction has unit camera z so the ray
    // parameter equals z-depth. Always hits inside a closed room.
    bool raycast(const Camera& cam, double u, double v, Hit& hit) const;

    // Exact signed distance of the free-space region (positive inside the
    // room away from surfaces, negative beyond walls / inside objects).
    double sdf(const Eigen::Vector3d& x) const;

    Eigen::Vector3d color(const Eigen::Vector3d& x, int label) const;

    Camera camera_for_frame(int frame) const;

    Mesh ground_truth_mesh() const;

    const SceneSpec& spec() const { return spec_; }

private:
    struct Object {
        bool is_sphere = true;
        Eigen::Vector3d center{0, 0, 0};
        Eigen::Vector3d half{0.1, 0.1, 0.1};  // sphere: half.x() = radius
        int label = 2;
    };

    SceneSpec spec_;
    Eigen::Vector3d room_half_;
    std::vector<Object> objects_;
};

// Renders and writes the full dataset layout under `root` (intrinsics.txt,
// poses.txt, images/, depth/, normal/, semantic/, sfm/, gt/). Returns the
// scene used, for oracles.
SyntheticScene generate_synthetic(const SceneSpec& spec, const std::string& root);

}  // namespace svr
