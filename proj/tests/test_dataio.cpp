#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/dataio.hpp"
#include "core/errors.hpp"
#include "core/image_io.hpp"
#include "core/synthetic.hpp"

using namespace svr;
namespace fs = std::filesystem;

namespace {

SceneSpec small_spec() {
    SceneSpec spec;
    spec.n_frames = 6;
    spec.width = 160;
    spec.height = 120;
    spec.n_landmarks = 120;
    spec.seed = 7;
    return spec;
}

const char* kRoot = "/tmp/svrecon_synth_test";

}  // namespace

TEST_CASE("synthetic: generate then load round trips") {
    fs::remove_all(kRoot);
    const SyntheticScene scene = generate_synthetic(small_spec(), kRoot);
    const Dataset ds = load_dataset(kRoot);

    REQUIRE(ds.frames.size() == 6);
    CHECK(!ds.landmarks.empty());
    CHECK(!ds.covis.empty());
    CHECK(!ds.gt_mesh_path.empty());
    REQUIRE(ds.gt_scales.size() == 6);

    for (const Frame& f : ds.frames) {
        CHECK(f.color.width == 160);
        CHECK(f.depth.channels == 1);
        CHECK(f.normal.channels == 3);
        CHECK(f.semantic.channels == scene.spec().label_channels);
        // all depths positive, normals unit, semantics a valid distribution
        for (int y = 0; y < f.depth.height; y += 7) {
            for (int x = 0; x < f.depth.width; x += 11) {
                CHECK(f.depth.at(x, y) > 0.0f);
                const Eigen::Vector3f n(f.normal.at(x, y, 0), f.normal.at(x, y, 1),
                                        f.normal.at(x, y, 2));
                CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-5));
                float sum = 0.0f;
                for (int c = 0; c < f.semantic.channels; ++c) {
                    CHECK(f.semantic.at(x, y, c) >= 0.0f);
                    sum += f.semantic.at(x, y, c);
                }
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
            }
        }
    }

    // Loading twice yields identical fields.
    const Dataset again = load_dataset(kRoot);
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        CHECK(again.frames[i].depth.data == ds.frames[i].depth.data);
        CHECK(again.frames[i].color.data == ds.frames[i].color.data);
        CHECK(again.frames[i].camera.rotation == ds.frames[i].camera.rotation);
    }
}

TEST_CASE("synthetic: generation is deterministic") {
    const char* other = "/tmp/svrecon_synth_test_b";
    fs::remove_all(other);
    generate_synthetic(small_spec(), other);
    for (const char* rel : {"depth/000003.f32", "images/000002.bin", "poses.txt",
                            "sfm/points.json", "gt/scales.txt"}) {
        std::ifstream a(fs::path(kRoot) / rel, std::ios::binary);
        std::ifstream b(fs::path(other) / rel, std::ios::binary);
        REQUIRE(a);
        REQUIRE(b);
        const std::string sa((std::istreambuf_iterator<char>(a)), {});
        const std::string sb((std::istreambuf_iterator<char>(b)), {});
        CHECK(sa == sb);
    }
}

TEST_CASE("synthetic: zero distortion means prior depth equals gt depth") {
    const char* root = "/tmp/svrecon_synth_flat";
    fs::remove_all(root);
    SceneSpec spec = small_spec();
    spec.distortion_amplitude = 0.0;
    spec.scale_min = spec.scale_max = 1.0;
    generate_synthetic(spec, root);
    const Dataset ds = load_dataset(root);
    const ImageF32 gt = read_f32_map((fs::path(root) / "gt" / "depth_000001.f32").string(),
                                     spec.width, spec.height, 1);
    CHECK(ds.frames[1].depth.data == gt.data);
}

TEST_CASE("synthetic: landmark reprojections are exact under gt poses") {
    const Dataset ds = load_dataset(kRoot);
    for (const Landmark& lm : ds.landmarks) {
        CHECK(lm.observations.size() >= 2);
        for (const auto& obs : lm.observations) {
            const Projection p = ds.frames[obs.frame].camera.project(lm.position);
            REQUIRE(!p.behind);
            CHECK((p.pixel - obs.pixel).norm() < 1e-9);
        }
    }
}

TEST_CASE("synthetic: unprojected depth lies on the scene surface") {
    const SyntheticScene scene(small_spec());
    const Dataset ds = load_dataset(kRoot);
    // distortion is 0 by default in small_spec, so prior depth is metric
    for (const Frame& f : ds.frames) {
        for (int y = 2; y < f.depth.height; y += 13) {
            for (int x = 2; x < f.depth.width; x += 17) {
                const Eigen::Vector3d p = f.camera.unproject(
                    {static_cast<double>(x), static_cast<double>(y)}, f.depth.at(x, y));
                CHECK(std::abs(scene.sdf(p)) < 1e-6);
            }
        }
    }
}

TEST_CASE("synthetic: gt normals match finite differences of gt depth") {
    const Dataset ds = load_dataset(kRoot);
    const Frame& f = ds.frames[2];
    const Camera& cam = f.camera;
    const ImageF32 depth =
        read_f32_map((fs::path(kRoot) / "gt" / "depth_000002.f32").string(), f.depth.width,
                     f.depth.height, 1);

    auto point = [&](int x, int y) {
        const double d = depth.at(x, y);
        return Eigen::Vector3d((x - cam.cx) / cam.fx * d, (y - cam.cy) / cam.fy * d, d);
    };
    int checked = 0;
    for (int y = 2; y < f.depth.height - 2; y += 3) {
        for (int x = 2; x < f.depth.width - 2; x += 3) {
            // skip depth discontinuities and orientation creases (corners,
            // object silhouettes): both break the finite-difference model
            const double d0 = depth.at(x, y);
            const Eigen::Vector3d n0(f.normal.at(x, y, 0), f.normal.at(x, y, 1),
                                     f.normal.at(x, y, 2));
            bool smooth = true;
            for (int dy = -1; dy <= 1 && smooth; ++dy) {
                for (int dx = -1; dx <= 1 && smooth; ++dx) {
                    smooth = std::abs(depth.at(x + dx, y + dy) - d0) < 0.02 * d0;
                    const Eigen::Vector3d ni(f.normal.at(x + dx, y + dy, 0),
                                             f.normal.at(x + dx, y + dy, 1),
                                             f.normal.at(x + dx, y + dy, 2));
                    smooth = smooth && ni.dot(n0) > 1.0 - 1e-6;
                }
            }
            if (!smooth) continue;

            const Eigen::Vector3d tu = point(x + 1, y) - point(x - 1, y);
            const Eigen::Vector3d tv = point(x, y + 1) - point(x, y - 1);
            Eigen::Vector3d n = tu.cross(tv).normalized();
            if (n.dot(point(x, y)) > 0.0) n = -n;  // face the camera
            const Eigen::Vector3d stored(f.normal.at(x, y, 0), f.normal.at(x, y, 1),
                                         f.normal.at(x, y, 2));
            const double angle =
                std::acos(std::clamp(n.dot(stored), -1.0, 1.0)) * 180.0 / M_PI;
            CHECK(angle < 2.0);
            ++checked;
        }
    }
    CHECK(checked > 500);
}

TEST_CASE("load_dataset: shape mismatch names the file") {
    const char* root = "/tmp/svrecon_bad_shape";
    fs::remove_all(root);
    fs::create_directories(fs::path(root));
    std::error_code ec;
    fs::copy(kRoot, root, fs::copy_options::recursive, ec);
    REQUIRE(!ec);
    // truncate one depth map
    ImageF32 wrong(80, 60, 1, 1.0f);
    write_f32_map(wrong, (fs::path(root) / "depth" / "000001.f32").string());
    try {
        load_dataset(root);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("000001") != std::string::npos);
    }
}

TEST_CASE("load_dataset: reflected pose is rejected") {
    const char* root = "/tmp/svrecon_bad_pose";
    fs::remove_all(root);
    fs::create_directories(fs::path(root));
    std::error_code ec;
    fs::copy(kRoot, root, fs::copy_options::recursive, ec);
    REQUIRE(!ec);
    {
        std::ofstream os(fs::path(root) / "poses.txt");
        // determinant -1 (mirror)
        os << "-1 0 0 0 0 1 0 0 0 0 1 0\n";
    }
    CHECK_THROWS_AS(load_dataset(root), DataError);
}

TEST_CASE("load_dataset: missing file is reported") {
    const char* root = "/tmp/svrecon_missing";
    fs::remove_all(root);
    fs::create_directories(fs::path(root));
    std::error_code ec;
    fs::copy(kRoot, root, fs::copy_options::recursive, ec);
    REQUIRE(!ec);
    fs::remove(fs::path(root) / "normal" / "000004.f32");
    try {
        load_dataset(root);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("000004") != std::string::npos);
    }
}
