#include "core/meshing.hpp"

#include <array>
#include <cmath>
#include <unordered_map>

#include "core/parallel.hpp"

namespace svr {

double Mesh::area() const {
    double acc = 0.0;
    for (const auto& t : triangles) {
        const Eigen::Vector3d e1 = vertices[t.y()] - vertices[t.x()];
        const Eigen::Vector3d e2 = vertices[t.z()] - vertices[t.x()];
        acc += 0.5 * e1.cross(e2).norm();
    }
    return acc;
}

namespace {

// Corner c sits at ((c&1), (c>>1)&1, (c>>2)&1). The 12 cell edges, each a
// corner pair differing in one bit; edge id = axis*4 + slot.
struct EdgeDef {
    int a, b, axis;
};
constexpr EdgeDef kEdges[12] = {
    {0, 1, 0}, {2, 3, 0}, {4, 5, 0}, {6, 7, 0},  // x
    {0, 2, 1}, {1, 3, 1}, {4, 6, 1}, {5, 7, 1},  // y
    {0, 4, 2}, {1, 5, 2}, {2, 6, 2}, {3, 7, 2},  // z
};

// Faces as cyclic corner quads; consecutive corners differ in one bit.
constexpr int kFaces[6][4] = {
    {0, 2, 6, 4}, {1, 3, 7, 5},  // x=0, x=1
    {0, 1, 5, 4}, {2, 3, 7, 6},  // y=0, y=1
    {0, 1, 3, 2}, {4, 5, 7, 6},  // z=0, z=1
};

int edge_between(int a, int b) {
    for (int e = 0; e < 12; ++e)
        if ((kEdges[e].a == a && kEdges[e].b == b) || (kEdges[e].a == b && kEdges[e].b == a))
            return e;
    return -1;
}

// The per-case triangle lists (edge index triples), built once. Face
// segments are paired so that segments cut off the inside corners; the rule
// depends only on the face's corner signs, so the two cells sharing a face
// always agree. Loops are fan-triangulated and oriented with the geometric
// normal pointing toward the positive (outside) corners.
struct CaseTable {
    std::array<std::vector<std::array<int, 3>>, 256> tris;
};

const CaseTable& case_table() {
    static const CaseTable table = [] {
        CaseTable t;
        for (int config = 0; config < 256; ++config) {
            const auto inside = [&](int c) { return (config >> c) & 1; };
            // partner[e] collects the paired edge per adjacent face; every
            // crossed edge lies on exactly two faces, giving two partners.
            std::array<std::array<int, 2>, 12> partner;
            std::array<int, 12> partner_count{};
            partner_count.fill(0);
            auto link = [&](int e0, int e1) {
                partner[e0][partner_count[e0]++] = e1;
                partner[e1][partner_count[e1]++] = e0;
            };
            for (const auto& q : kFaces) {
                int crossed[4], n = 0;
                for (int i = 0; i < 4; ++i) {
                    if (inside(q[i]) != inside(q[(i + 1) % 4]))
                        crossed[n++] = edge_between(q[i], q[(i + 1) % 4]);
                }
                if (n == 2) {
                    link(crossed[0], crossed[1]);
                } else if (n == 4) {
                    // Alternating signs; cut off the two inside corners.
                    const int off = inside(q[0]) ? 0 : 1;
                    link(edge_between(q[(3 + off) % 4], q[(0 + off) % 4]),
                         edge_between(q[(0 + off) % 4], q[(1 + off) % 4]));
                    link(edge_between(q[(1 + off) % 4], q[(2 + off) % 4]),
                         edge_between(q[(2 + off) % 4], q[(3 + off) % 4]));
                }
            }

            // Stitch segments into loops.
            std::array<bool, 12> used{};
            used.fill(false);
            for (int start = 0; start < 12; ++start) {
                if (partner_count[start] != 2 || used[start]) continue;
                std::vector<int> loop;
                int cur = start, prev = -1;
                do {
                    loop.push_back(cur);
                    used[cur] = true;
                    const int next = partner[cur][0] == prev ? partner[cur][1] : partner[cur][0];
                    prev = cur;
                    cur = next;
                } while (cur != start);
                if (loop.size() < 3) continue;

                // Orientation from the midpoint embedding (Newell normal vs
                // the inside-to-outside direction).
                auto corner_pos = [](int c) {
                    return Eigen::Vector3d(c & 1, (c >> 1) & 1, (c >> 2) & 1);
                };
                auto edge_mid = [&](int e) {
                    return 0.5 * (corner_pos(kEdges[e].a) + corner_pos(kEdges[e].b));
                };
                Eigen::Vector3d normal = Eigen::Vector3d::Zero();
                for (std::size_t i = 0; i < loop.size(); ++i) {
                    const Eigen::Vector3d a = edge_mid(loop[i]);
                    const Eigen::Vector3d b = edge_mid(loop[(i + 1) % loop.size()]);
                    normal += a.cross(b);
                }
                Eigen::Vector3d inward = Eigen::Vector3d::Zero();
                int n_in = 0, n_out = 0;
                Eigen::Vector3d mean_in = Eigen::Vector3d::Zero(),
                                mean_out = Eigen::Vector3d::Zero();
                for (int c = 0; c < 8; ++c) {
                    if (inside(c)) {
                        mean_in += corner_pos(c);
                        ++n_in;
                    } else {
                        mean_out += corner_pos(c);
                        ++n_out;
                    }
                }
                inward = mean_out / std::max(n_out, 1) - mean_in / std::max(n_in, 1);
                if (normal.dot(inward) < 0.0) std::reverse(loop.begin(), loop.end());

                for (std::size_t i = 1; i + 1 < loop.size(); ++i)
                    t.tris[config].push_back({loop[0], loop[i], loop[i + 1]});
            }
        }
        return t;
    }();
    return table;
}

struct EdgeKey {
    std::int64_t vx, vy, vz;  // voxel coord of the lower edge end
    int axis;
    bool operator==(const EdgeKey&) const = default;
};

struct EdgeKeyHash {
    std::size_t operator()(const EdgeKey& k) const {
        std::uint64_t h = static_cast<std::uint64_t>(k.vx) * 0x9E3779B185EBCA87ull;
        h ^= static_cast<std::uint64_t>(k.vy) * 0xC2B2AE3D27D4EB4Full;
        h += static_cast<std::uint64_t>(k.vz) * 0x165667B19E3779F9ull;
        h ^= static_cast<std::uint64_t>(k.axis) + (h >> 29);
        h *= 0xBF58476D1CE4E5B9ull;
        return static_cast<std::size_t>(h ^ (h >> 32));
    }
};

struct RawTriangle {
    EdgeKey e[3];
    Eigen::Vector3d p[3];
};

}  // namespace

Mesh marching_cubes(const SparseDenseGrid& grid, double iso) {
    const CaseTable& table = case_table();
    const int B = grid.block_res();

    // Corner sdf gather at lattice points; a cell is skipped unless all 8
    // corners are observed.
    auto corner_value = [&](const Eigen::Vector3i& v, double& sdf) {
        const BlockCoord bc = grid.block_of_voxel(v);
        const std::uint32_t bi = grid.find_block(bc);
        if (bi == SparseDenseGrid::kInvalidBlock) return false;
        const std::uint32_t li = grid.local_index(v, bc);
        const VoxelBlock& blk = grid.block(bi);
        if (!(blk.weight[li] > 0.0f)) return false;
        sdf = blk.sdf[li];
        return true;
    };

    // Per-block triangle soup, parallel; dedup merge is a sequential pass.
    std::vector<std::vector<RawTriangle>> per_block(grid.block_count());
    parallel_for(grid.block_count(), [&](std::size_t bi) {
        std::vector<RawTriangle>& out = per_block[bi];
        const BlockCoord bc = grid.block_coord(static_cast<std::uint32_t>(bi));
        for (int lz = 0; lz < B; ++lz) {
            for (int ly = 0; ly < B; ++ly) {
                for (int lx = 0; lx < B; ++lx) {
                    const Eigen::Vector3i anchor(bc.x * B + lx, bc.y * B + ly,
                                                 bc.z * B + lz);
                    double s[8];
                    bool ok = true;
                    for (int c = 0; c < 8 && ok; ++c) {
                        const Eigen::Vector3i v =
                            anchor + Eigen::Vector3i(c & 1, (c >> 1) & 1, (c >> 2) & 1);
                        ok = corner_value(v, s[c]);
                    }
                    if (!ok) continue;
                    int config = 0;
                    for (int c = 0; c < 8; ++c)
                        if (s[c] < iso) config |= 1 << c;
                    const auto& tris = table.tris[config];
                    if (tris.empty()) continue;

                    Eigen::Vector3d pos[12];
                    EdgeKey keys[12];
                    for (const auto& tri : tris) {
                        for (int k = 0; k < 3; ++k) {
                            const int e = tri[k];
                            const EdgeDef& ed = kEdges[e];
                            const Eigen::Vector3i va =
                                anchor + Eigen::Vector3i(ed.a & 1, (ed.a >> 1) & 1,
                                                         (ed.a >> 2) & 1);
                            const double sa = s[ed.a], sb = s[ed.b];
                            const double t = (iso - sa) / (sb - sa);
                            Eigen::Vector3d p = grid.voxel_to_world(va);
                            p[ed.axis] += t * grid.voxel_size();
                            pos[e] = p;
                            keys[e] = {va.x(), va.y(), va.z(), ed.axis};
                        }
                        RawTriangle rt;
                        for (int k = 0; k < 3; ++k) {
                            rt.e[k] = keys[tri[k]];
                            rt.p[k] = pos[tri[k]];
                        }
                        out.push_back(rt);
                    }
                }
            }
        }
    });

    Mesh mesh;
    std::unordered_map<EdgeKey, int, EdgeKeyHash> vertex_of_edge;
    const double min_area = 1e-12;
    for (const auto& tris : per_block) {
        for (const RawTriangle& rt : tris) {
            int idx[3];
            for (int k = 0; k < 3; ++k) {
                auto [it, inserted] =
                    vertex_of_edge.try_emplace(rt.e[k], static_cast<int>(mesh.vertices.size()));
                if (inserted) mesh.vertices.push_back(rt.p[k]);
                idx[k] = it->second;
            }
            if (idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2]) continue;
            const Eigen::Vector3d e1 = mesh.vertices[idx[1]] - mesh.vertices[idx[0]];
            const Eigen::Vector3d e2 = mesh.vertices[idx[2]] - mesh.vertices[idx[0]];
            if (0.5 * e1.cross(e2).norm() <= min_area) continue;
            mesh.triangles.push_back({idx[0], idx[1], idx[2]});
        }
    }

    // Vertex attributes from trilinear queries.
    mesh.normals.resize(mesh.vertices.size(), Eigen::Vector3d::UnitZ());
    mesh.colors.resize(mesh.vertices.size(), Eigen::Vector3d::Zero());
    mesh.labels.resize(mesh.vertices.size(), 0);
    std::vector<double> logits(grid.label_channels());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        CornerCacheD cache;
        if (!grid.gather_corners(mesh.vertices[i], cache)) continue;
        const Eigen::Vector3d g = grid.sdf_gradient_at(cache);
        if (g.norm() > 1e-12) mesh.normals[i] = g.normalized();
        mesh.colors[i] = grid.color_at(cache).cwiseMax(0.0).cwiseMin(1.0);
        grid.logits_at(cache, logits.data());
        mesh.labels[i] = static_cast<int>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
    }
    return mesh;
}

}  // namespace svr
