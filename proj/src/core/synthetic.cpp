#include "core/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>

#include "core/errors.hpp"
#include "core/image_io.hpp"
#include "core/mesh_io.hpp"
#include "core/parallel.hpp"
#include "core/sfm.hpp"

namespace svr {

namespace {

constexpr int kLabelWall = 0;
constexpr int kLabelFloor = 1;
constexpr int kLabelSphere = 2;
constexpr int kLabelBox = 3;

const Eigen::Vector3d kBaseColor[4] = {
    {0.72, 0.70, 0.62},  // walls, ceiling
    {0.48, 0.36, 0.26},  // floor
    {0.20, 0.45, 0.72},  // spheres
    {0.72, 0.30, 0.24},  // boxes
};

double box_sdf(const Eigen::Vector3d& p, const Eigen::Vector3d& half) {
    const Eigen::Vector3d q = p.cwiseAbs() - half;
    const Eigen::Vector3d outside = q.cwiseMax(0.0);
    const double inside = std::min(q.maxCoeff(), 0.0);
    return outside.norm() + inside;
}

}  // namespace

SyntheticScene::SyntheticScene(const SceneSpec& spec) : spec_(spec) {
    if (spec.label_channels < 4)
        throw ConfigError("synthetic: label_channels must be >= 4");
    if (spec.n_frames < 2 || spec.width < 16 || spec.height < 16 ||
        spec.room_w < 0.5 || spec.room_d < 0.5 || spec.room_h < 0.5 ||
        spec.n_objects < 0 || spec.n_objects > 4 ||
        spec.distortion_amplitude < 0.0 || spec.distortion_amplitude >= 1.0 ||
        spec.scale_min <= 0.0 || spec.scale_max < spec.scale_min)
        throw ConfigError("synthetic: invalid scene spec");
    room_half_ = {spec.room_w / 2, spec.room_d / 2, spec.room_h / 2};

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < spec.n_objects; ++i) {
        Object obj;
        obj.is_sphere = (i % 2 == 0);
        obj.label = obj.is_sphere ? kLabelSphere : kLabelBox;
        const double size = 0.16 + 0.10 * u(rng);
        // Keep objects inside the inner half so the camera ring stays clear.
        const double ang = 2 * M_PI * u(rng);
        const double rad = 0.22 * std::min(room_half_.x(), room_half_.y()) * u(rng);
        obj.center = {rad * std::cos(ang), rad * std::sin(ang),
                      -room_half_.z() + size + 0.05};
        obj.half = obj.is_sphere ? Eigen::Vector3d::Constant(size)
                                 : Eigen::Vector3d(size, 0.8 * size, 1.2 * size);
        objects_.push_back(obj);
    }
}

double SyntheticScene::sdf(const Eigen::Vector3d& x) const {
    // Distance to the wall planes, positive inside the room.
    double d = (room_half_ - x.cwiseAbs()).minCoeff();
    for (const Object& o : objects_) {
        const double od = o.is_sphere ? (x - o.center).norm() - o.half.x()
                                      : box_sdf(x - o.center, o.half);
        d = std::min(d, od);
    }
    return d;
}

Eigen::Vector3d SyntheticScene::color(const Eigen::Vector3d& x, int label) const {
    const double f = spec_.texture_frequency;
    const double m = 1.0 + spec_.texture_amplitude * std::sin(f * x.x() + 1.3) *
                               std::sin(f * x.y() + 2.1) * std::sin(f * x.z() + 0.7);
    return (kBaseColor[label] * m).cwiseMax(0.0).cwiseMin(1.0);
}

bool SyntheticScene::raycast(const Camera& cam, double u, double v, Hit& hit) const {
    // Unit camera-z direction: the ray parameter is z-depth directly.
    const Eigen::Vector3d dir_cam{(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
    const Eigen::Vector3d d = cam.rotation * dir_cam;
    const Eigen::Vector3d o = cam.translation;

    double best_t = std::numeric_limits<double>::max();
    Eigen::Vector3d best_n = Eigen::Vector3d::UnitZ();
    int best_label = -1;

    // Room exit: nearest positive crossing of the 6 wall planes.
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) continue;
        const double plane = d[a] > 0.0 ? room_half_[a] : -room_half_[a];
        const double t = (plane - o[a]) / d[a];
        if (t > 1e-9 && t < best_t) {
            best_t = t;
            best_n = Eigen::Vector3d::Zero();
            best_n[a] = d[a] > 0.0 ? -1.0 : 1.0;
            best_label = (a == 2 && d[a] < 0.0) ? kLabelFloor : kLabelWall;
        }
    }

    for (const Object& obj : objects_) {
        if (obj.is_sphere) {
            const Eigen::Vector3d oc = o - obj.center;
            const double A = d.squaredNorm();
            const double B = 2.0 * d.dot(oc);
            const double C = oc.squaredNorm() - obj.half.x() * obj.half.x();
            const double disc = B * B - 4 * A * C;
            if (disc < 0.0) continue;
            const double t = (-B - std::sqrt(disc)) / (2 * A);
            if (t > 1e-9 && t < best_t) {
                best_t = t;
                best_n = (o + t * d - obj.center).normalized();
                best_label = obj.label;
            }
        } else {
            double t0 = -std::numeric_limits<double>::max();
            double t1 = std::numeric_limits<double>::max();
            int enter_axis = -1;
            bool ok = true;
            for (int a = 0; a < 3 && ok; ++a) {
                const double lo = obj.center[a] - obj.half[a];
                const double hi = obj.center[a] + obj.half[a];
                if (d[a] == 0.0) {
                    ok = o[a] > lo && o[a] < hi;
                    continue;
                }
                double ta = (lo - o[a]) / d[a];
                double tb = (hi - o[a]) / d[a];
                if (ta > tb) std::swap(ta, tb);
                if (ta > t0) {
                    t0 = ta;
                    enter_axis = a;
                }
                t1 = std::min(t1, tb);
            }
            if (ok && t0 < t1 && t0 > 1e-9 && t0 < best_t && enter_axis >= 0) {
                best_t = t0;
                best_n = Eigen::Vector3d::Zero();
                best_n[enter_axis] = d[enter_axis] > 0.0 ? -1.0 : 1.0;
                best_label = obj.label;
            }
        }
    }

    if (best_label < 0) return false;
    hit.depth = best_t;
    hit.point = o + best_t * d;
    hit.normal = best_n;
    hit.label = best_label;
    return true;
}

Camera SyntheticScene::camera_for_frame(int frame) const {
    Camera cam;
    cam.width = spec_.width;
    cam.height = spec_.height;
    cam.fx = (spec_.width / 2.0) / std::tan(spec_.fov_deg * M_PI / 360.0);
    cam.fy = cam.fx;
    cam.cx = (spec_.width - 1) / 2.0;
    cam.cy = (spec_.height - 1) / 2.0;

    const double theta = 2 * M_PI * frame / spec_.n_frames;
    // Wide ring: baselines comparable to scene depth keep the absolute scale
    // well observed by the pairwise constraints.
    const double ring = 0.72 * std::min(room_half_.x(), room_half_.y());
    const Eigen::Vector3d eye(ring * std::cos(theta), ring * std::sin(theta),
                              0.35 * room_half_.z() * std::sin(2 * theta) + 0.05);
    // Pitch sweeps up and down so floor and ceiling both get coverage.
    const Eigen::Vector3d target(0.25 * ring * std::cos(theta + 2.2),
                                 0.25 * ring * std::sin(theta + 2.2),
                                 0.5 * room_half_.z() * std::sin(3 * theta + 0.8));
    const Eigen::Vector3d forward = (target - eye).normalized();
    const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
    const Eigen::Vector3d right = forward.cross(up).normalized();
    const Eigen::Vector3d down = forward.cross(right);
    cam.rotation.col(0) = right;
    cam.rotation.col(1) = down;
    cam.rotation.col(2) = forward;
    cam.translation = eye;
    return cam;
}

namespace {

void append_box(Mesh& mesh, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                bool inward) {
    const int base = static_cast<int>(mesh.vertices.size());
    for (int c = 0; c < 8; ++c)
        mesh.vertices.push_back({c & 1 ? hi.x() : lo.x(), c & 2 ? hi.y() : lo.y(),
                                 c & 4 ? hi.z() : lo.z()});
    // Outward-wound faces; flipped when the box is viewed from inside.
    const int faces[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
                             {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
    for (const auto& f : faces) {
        if (inward) {
            mesh.triangles.push_back({base + f[0], base + f[2], base + f[1]});
            mesh.triangles.push_back({base + f[0], base + f[3], base + f[2]});
        } else {
            mesh.triangles.push_back({base + f[0], base + f[1], base + f[2]});
            mesh.triangles.push_back({base + f[0], base + f[2], base + f[3]});
        }
    }
}

void append_icosphere(Mesh& mesh, const Eigen::Vector3d& center, double r,
                      int subdivisions) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> verts = {
        {-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
    std::vector<Eigen::Vector3i> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (auto& v : verts) v.normalize();
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(verts.size());
            verts.push_back((verts[a] + verts[b]).normalized());
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<Eigen::Vector3i> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f.x(), f.y()), bc = mid(f.y(), f.z()),
                      ca = mid(f.z(), f.x());
            next.push_back({f.x(), ab, ca});
            next.push_back({f.y(), bc, ab});
            next.push_back({f.z(), ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces.swap(next);
    }
    const int base = static_cast<int>(mesh.vertices.size());
    for (const auto& v : verts) mesh.vertices.push_back(center + r * v);
    for (const auto& f : faces)
        mesh.triangles.push_back({base + f.x(), base + f.y(), base + f.z()});
}

}  // namespace

Mesh SyntheticScene::ground_truth_mesh() const {
    Mesh mesh;
    append_box(mesh, -room_half_, room_half_, /*inward=*/true);
    for (const Object& o : objects_) {
        if (o.is_sphere)
            append_icosphere(mesh, o.center, o.half.x(), 3);
        else
            append_box(mesh, o.center - o.half, o.center + o.half, false);
    }
    return mesh;
}

SyntheticScene generate_synthetic(const SceneSpec& spec, const std::string& root) {
    namespace fs = std::filesystem;
    const SyntheticScene scene(spec);
    for (const char* sub : {"", "images", "depth", "normal", "semantic", "sfm", "gt"})
        fs::create_directories(fs::path(root) / sub);

    std::vector<Camera> cameras(spec.n_frames);
    for (int f = 0; f < spec.n_frames; ++f) cameras[f] = scene.camera_for_frame(f);

    {
        std::ofstream os(fs::path(root) / "intrinsics.txt");
        os << std::setprecision(17) << cameras[0].fx << " " << cameras[0].fy << " "
           << cameras[0].cx << " " << cameras[0].cy << " " << spec.width << " "
           << spec.height << "\n";
        std::ofstream ps(fs::path(root) / "poses.txt");
        ps << std::setprecision(17);
        for (const Camera& cam : cameras) {
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) ps << cam.rotation(r, c) << " ";
                ps << cam.translation[r] << (r == 2 ? "" : " ");
            }
            ps << "\n";
        }
    }

    // Per-frame scale + smooth distortion parameters.
    std::mt19937_64 rng(spec.seed ^ 0x5bd1e995u);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    struct Distortion {
        double s, fu, fv, pu, pv;
    };
    std::vector<Distortion> dist(spec.n_frames);
    for (auto& d : dist) {
        d.s = spec.scale_min + (spec.scale_max - spec.scale_min) * u(rng);
        d.fu = 1.0 + std::floor(2.0 * u(rng));
        d.fv = 1.0 + std::floor(2.0 * u(rng));
        d.pu = 2 * M_PI * u(rng);
        d.pv = 2 * M_PI * u(rng);
    }
    {
        std::ofstream os(fs::path(root) / "gt" / "scales.txt");
        os << std::setprecision(17);
        for (const auto& d : dist) os << d.s << "\n";
    }

    // GT depth maps rendered first (landmark visibility checks reuse them).
    std::vector<ImageF32> gt_depth(spec.n_frames);
    char name[64];
    for (int f = 0; f < spec.n_frames; ++f) {
        const Camera& cam = cameras[f];
        ImageF32 depth(spec.width, spec.height, 1);
        ImageF32 prior_depth(spec.width, spec.height, 1);
        ImageF32 normal(spec.width, spec.height, 3);
        ImageF32 semantic(spec.width, spec.height, spec.label_channels);
        ImageF32 image(spec.width, spec.height, 3);
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
                SyntheticScene::Hit hit;
                if (!scene.raycast(cam, x, y, hit))
                    throw DataError("synthetic: ray escaped the room");
                depth.at(x, y) = static_cast<float>(hit.depth);
                const Eigen::Vector3d n_cam = cam.rotation.transpose() * hit.normal;
                for (int c = 0; c < 3; ++c)
                    normal.at(x, y, c) = static_cast<float>(n_cam[c]);
                semantic.at(x, y, hit.label) = 1.0f;
                const Eigen::Vector3d rgb = scene.color(hit.point, hit.label);
                for (int c = 0; c < 3; ++c)
                    image.at(x, y, c) = static_cast<float>(rgb[c]);

                const Distortion& d = dist[f];
                const double g =
                    std::sin(2 * M_PI * d.fu * x / (spec.width - 1) + d.pu) *
                    std::sin(2 * M_PI * d.fv * y / (spec.height - 1) + d.pv);
                const double factor = d.s * (1.0 + spec.distortion_amplitude * g);
                prior_depth.at(x, y) = static_cast<float>(hit.depth / factor);
            }
        }
        gt_depth[f] = depth;
        std::snprintf(name, sizeof(name), "%06d", f);
        write_f32_map(image, (fs::path(root) / "images" / (std::string(name) + ".bin")).string());
        write_f32_map(prior_depth,
                      (fs::path(root) / "depth" / (std::string(name) + ".f32")).string());
        write_f32_map(normal,
                      (fs::path(root) / "normal" / (std::string(name) + ".f32")).string());
        write_f32_map(semantic,
                      (fs::path(root) / "semantic" / (std::string(name) + ".f32")).string());
        write_f32_map(depth,
                      (fs::path(root) / "gt" / ("depth_" + std::string(name) + ".f32")).string());
    }

    // Landmarks: unproject GT depth at random pixels, keep points seen by at
    // least two frames; projections are stored exactly as computed.
    std::vector<Landmark> landmarks;
    std::uniform_int_distribution<int> pick_frame(0, spec.n_frames - 1);
    std::uniform_int_distribution<int> pick_x(4, spec.width - 5);
    std::uniform_int_distribution<int> pick_y(4, spec.height - 5);
    int attempts = 0;
    while (static_cast<int>(landmarks.size()) < spec.n_landmarks &&
           attempts < spec.n_landmarks * 20) {
        ++attempts;
        const int f = pick_frame(rng);
        const int x = pick_x(rng), y = pick_y(rng);
        const double depth = gt_depth[f].at(x, y);
        const Eigen::Vector3d world = cameras[f].unproject(
            {static_cast<double>(x), static_cast<double>(y)}, depth);
        Landmark lm;
        lm.position = world;
        for (int j = 0; j < spec.n_frames; ++j) {
            const Projection proj = cameras[j].project(world);
            if (proj.behind || !cameras[j].pixel_in_frame(proj.pixel, 1.0)) continue;
            const double stored = gt_depth[j].sample(proj.pixel.x(), proj.pixel.y());
            if (std::abs(proj.depth - stored) > std::max(2e-3, 5e-3 * proj.depth))
                continue;  // occluded (or a depth edge)
            lm.observations.push_back({j, proj.pixel});
        }
        if (lm.observations.size() < 2) continue;
        lm.id = static_cast<int>(landmarks.size());
        landmarks.push_back(std::move(lm));
    }

    std::map<std::pair<int, int>, int> covis_count;
    for (const auto& lm : landmarks)
        for (std::size_t a = 0; a < lm.observations.size(); ++a)
            for (std::size_t b = a + 1; b < lm.observations.size(); ++b)
                covis_count[{lm.observations[a].frame, lm.observations[b].frame}]++;
    std::vector<CovisPair> covis;
    for (const auto& [key, count] : covis_count)
        covis.push_back({key.first, key.second, count});

    save_landmarks(landmarks, (fs::path(root) / "sfm" / "points.json").string());
    save_covisibility(covis, (fs::path(root) / "sfm" / "covis.json").string());
    export_ply(scene.ground_truth_mesh(), (fs::path(root) / "gt" / "mesh.ply").string());
    return scene;
}

}  // namespace svr
