#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace svr {

struct Projection {
    Eigen::Vector2d pixel{0.0, 0.0};
    double depth = 0.0;   // camera-frame z, meters
    bool behind = false;  // z <= kMinDepth, pixel/depth unusable
    bool in_frame = false;
};

// Pinhole camera with camera-to-world pose: x_world = R * x_cam + t.
struct Camera {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static constexpr double kMinDepth = 1e-6;

    Eigen::Vector3d world_to_camera(const Eigen::Vector3d& x_world) const {
        return rotation.transpose() * (x_world - translation);
    }
    Eigen::Vector3d camera_to_world(const Eigen::Vector3d& x_cam) const {
        return rotation * x_cam + translation;
    }

    Projection project(const Eigen::Vector3d& x_world) const;

    // Pixel + camera-frame depth -> world point. Throws DataError on
    // non-positive depth.
    Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth) const;

    // Unit-norm world-space direction of the ray through `pixel`.
    Eigen::Vector3d ray_direction(const Eigen::Vector2d& pixel) const;

    bool pixel_in_frame(const Eigen::Vector2d& p, double margin = 0.0) const {
        return p.x() >= margin && p.x() <= width - 1 - margin && p.y() >= margin &&
               p.y() <= height - 1 - margin;
    }

    // ||R^T R - I|| drift check; rows are re-orthonormalized in dataio when
    // drift exceeds 1e-6.
    double orthonormality_drift() const {
        return (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff();
    }
};

}  // namespace svr
