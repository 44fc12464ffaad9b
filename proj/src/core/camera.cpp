#include "core/camera.hpp"

#include "core/errors.hpp"

namespace svr {

Projection Camera::project(const Eigen::Vector3d& x_world) const {
    Projection out;
    const Eigen::Vector3d xc = world_to_camera(x_world);
    if (xc.z() <= kMinDepth) {
        out.behind = true;
        return out;
    }
    out.depth = xc.z();
    out.pixel = {fx * xc.x() / xc.z() + cx, fy * xc.y() / xc.z() + cy};
    out.in_frame = pixel_in_frame(out.pixel);
    return out;
}

Eigen::Vector3d Camera::unproject(const Eigen::Vector2d& pixel, double depth) const {
    if (!(depth > 0.0)) throw DataError("unproject: non-positive depth");
    const Eigen::Vector3d xc{(pixel.x() - cx) / fx * depth, (pixel.y() - cy) / fy * depth,
                             depth};
    return camera_to_world(xc);
}

Eigen::Vector3d Camera::ray_direction(const Eigen::Vector2d& pixel) const {
    const Eigen::Vector3d dir_cam{(pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0};
    return (rotation * dir_cam).normalized();
}

}  // namespace svr
