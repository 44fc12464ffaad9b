#include "core/dataio.hpp"

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"
#include "core/image_io.hpp"
#include "core/parallel.hpp"

namespace svr {

namespace fs = std::filesystem;

namespace {

std::string frame_name(int id) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", id);
    return buf;
}

void check_shape(const ImageF32& img, int w, int h, const std::string& path) {
    if (img.width != w || img.height != h)
        throw DataError("load_dataset: shape mismatch in " + path);
}

Camera parse_intrinsics(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("load_dataset: missing file " + path);
    Camera cam;
    if (!(is >> cam.fx >> cam.fy >> cam.cx >> cam.cy >> cam.width >> cam.height))
        throw DataError("load_dataset: malformed intrinsics in " + path);
    if (cam.fx <= 0 || cam.fy <= 0 || cam.width <= 0 || cam.height <= 0)
        throw DataError("load_dataset: invalid intrinsics in " + path);
    return cam;
}

std::vector<Camera> parse_poses(const std::string& path, const Camera& base) {
    std::ifstream is(path);
    if (!is) throw DataError("load_dataset: missing file " + path);
    std::vector<Camera> cams;
    std::string line;
    int id = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        double m[12];
        for (double& v : m)
            if (!(ss >> v))
                throw DataError("load_dataset: malformed pose for frame " +
                                std::to_string(id) + " in " + path);
        Camera cam = base;
        cam.rotation << m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10];
        cam.translation = {m[3], m[7], m[11]};
        if (cam.rotation.determinant() < 0.0)
            throw DataError("load_dataset: bad pose (determinant -1) for frame " +
                            std::to_string(id));
        if (cam.orthonormality_drift() > 1e-6) {
            Eigen::JacobiSVD<Eigen::Matrix3d> svd(
                cam.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
            cam.rotation = svd.matrixU() * svd.matrixV().transpose();
            if (cam.rotation.determinant() < 0.0)
                throw DataError("load_dataset: bad pose (reflection) for frame " +
                                std::to_string(id));
        }
        cams.push_back(cam);
        ++id;
    }
    if (cams.empty()) throw DataError("load_dataset: no poses in " + path);
    return cams;
}

}  // namespace

Dataset load_dataset(const std::string& root) {
    Dataset ds;
    ds.root = root;
    const Camera base = parse_intrinsics((fs::path(root) / "intrinsics.txt").string());
    const auto cameras = parse_poses((fs::path(root) / "poses.txt").string(), base);

    ds.frames.resize(cameras.size());
    const int w = base.width, h = base.height;
    parallel_for(cameras.size(), [&](std::size_t i) {
        Frame& f = ds.frames[i];
        f.id = static_cast<int>(i);
        f.camera = cameras[i];
        const std::string name = frame_name(f.id);

        const std::string img_bin = (fs::path(root) / "images" / (name + ".bin")).string();
        const std::string img_png = (fs::path(root) / "images" / (name + ".png")).string();
        if (file_exists(img_bin))
            f.color = read_f32_map(img_bin, w, h, 3);
        else if (file_exists(img_png))
            f.color = read_png_rgb(img_png);
        else
            throw DataError("load_dataset: missing image for frame " + name);
        check_shape(f.color, w, h, img_bin);

        const std::string dep_f32 = (fs::path(root) / "depth" / (name + ".f32")).string();
        const std::string dep_png = (fs::path(root) / "depth" / (name + ".png")).string();
        if (file_exists(dep_f32))
            f.depth = read_f32_map(dep_f32, w, h, 1);
        else if (file_exists(dep_png))
            f.depth = read_png_depth_mm(dep_png);
        else
            throw DataError("load_dataset: missing depth for frame " + name);
        check_shape(f.depth, w, h, dep_f32);

        const std::string nrm = (fs::path(root) / "normal" / (name + ".f32")).string();
        f.normal = read_f32_map(nrm, w, h, 3);

        const std::string sem = (fs::path(root) / "semantic" / (name + ".f32")).string();
        f.semantic = read_f32_map(sem, w, h, -1);

        f.build_gray();
    });

    ds.landmarks = load_landmarks((fs::path(root) / "sfm" / "points.json").string());
    ds.covis = load_covisibility((fs::path(root) / "sfm" / "covis.json").string());

    const std::string gt_mesh = (fs::path(root) / "gt" / "mesh.ply").string();
    if (file_exists(gt_mesh)) ds.gt_mesh_path = gt_mesh;
    const std::string gt_scales = (fs::path(root) / "gt" / "scales.txt").string();
    if (file_exists(gt_scales)) {
        std::ifstream is(gt_scales);
        double s;
        while (is >> s) ds.gt_scales.push_back(s);
    }
    return ds;
}

}  // namespace svr
