#include "core/mesh_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "core/errors.hpp"

namespace svr {

namespace {

template <typename T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void export_ply(const Mesh& mesh, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("export_ply: cannot open " + path);

    const bool normals = mesh.has_normals();
    const bool colors = mesh.has_colors();
    const bool labels = mesh.has_labels();

    os << "ply\nformat binary_little_endian 1.0\n";
    os << "element vertex " << mesh.vertices.size() << "\n";
    os << "property float x\nproperty float y\nproperty float z\n";
    if (normals) os << "property float nx\nproperty float ny\nproperty float nz\n";
    if (colors)
        os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (labels) os << "property int label\n";
    os << "element face " << mesh.triangles.size() << "\n";
    os << "property list uchar int vertex_indices\n";
    os << "end_header\n";

    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        for (int a = 0; a < 3; ++a)
            write_pod(os, static_cast<float>(mesh.vertices[i][a]));
        if (normals)
            for (int a = 0; a < 3; ++a)
                write_pod(os, static_cast<float>(mesh.normals[i][a]));
        if (colors)
            for (int a = 0; a < 3; ++a)
                write_pod(os, static_cast<std::uint8_t>(std::lround(
                                  std::clamp(mesh.colors[i][a], 0.0, 1.0) * 255.0)));
        if (labels) write_pod(os, static_cast<std::int32_t>(mesh.labels[i]));
    }
    for (const auto& t : mesh.triangles) {
        write_pod(os, static_cast<std::uint8_t>(3));
        write_pod(os, static_cast<std::int32_t>(t.x()));
        write_pod(os, static_cast<std::int32_t>(t.y()));
        write_pod(os, static_cast<std::int32_t>(t.z()));
    }
    if (!os) throw DataError("export_ply: write failed for " + path);
}

Mesh import_ply(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("import_ply: cannot open " + path);

    std::string line;
    std::getline(is, line);
    if (line != "ply") throw DataError("import_ply: not a PLY file: " + path);
    std::getline(is, line);
    if (line.find("binary_little_endian") == std::string::npos)
        throw DataError("import_ply: only binary little-endian PLY supported");

    std::size_t n_vertices = 0, n_faces = 0;
    struct Property {
        std::string type, name;
    };
    std::vector<Property> vertex_props;
    std::string element;
    while (std::getline(is, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "comment") continue;
        if (tok == "element") {
            std::size_t count;
            ss >> element >> count;
            if (element == "vertex") n_vertices = count;
            if (element == "face") n_faces = count;
        } else if (tok == "property" && element == "vertex") {
            Property p;
            ss >> p.type >> p.name;
            vertex_props.push_back(p);
        } else if (tok == "end_header") {
            break;
        }
    }

    Mesh mesh;
    mesh.vertices.resize(n_vertices);
    bool has_n = false, has_c = false, has_l = false;
    for (const auto& p : vertex_props) {
        if (p.name == "nx") has_n = true;
        if (p.name == "red") has_c = true;
        if (p.name == "label") has_l = true;
    }
    if (has_n) mesh.normals.resize(n_vertices);
    if (has_c) mesh.colors.resize(n_vertices);
    if (has_l) mesh.labels.resize(n_vertices);

    for (std::size_t i = 0; i < n_vertices; ++i) {
        for (const auto& p : vertex_props) {
            if (p.type == "float") {
                const float v = read_pod<float>(is);
                if (p.name == "x") mesh.vertices[i].x() = v;
                else if (p.name == "y") mesh.vertices[i].y() = v;
                else if (p.name == "z") mesh.vertices[i].z() = v;
                else if (p.name == "nx") mesh.normals[i].x() = v;
                else if (p.name == "ny") mesh.normals[i].y() = v;
                else if (p.name == "nz") mesh.normals[i].z() = v;
            } else if (p.type == "uchar") {
                const double v = read_pod<std::uint8_t>(is) / 255.0;
                if (p.name == "red") mesh.colors[i].x() = v;
                else if (p.name == "green") mesh.colors[i].y() = v;
                else if (p.name == "blue") mesh.colors[i].z() = v;
            } else if (p.type == "int") {
                const std::int32_t v = read_pod<std::int32_t>(is);
                if (p.name == "label") mesh.labels[i] = v;
            } else {
                throw DataError("import_ply: unsupported property type " + p.type);
            }
        }
    }
    mesh.triangles.reserve(n_faces);
    for (std::size_t i = 0; i < n_faces; ++i) {
        const int n = read_pod<std::uint8_t>(is);
        if (n != 3) throw DataError("import_ply: non-triangle face");
        Eigen::Vector3i t;
        t.x() = read_pod<std::int32_t>(is);
        t.y() = read_pod<std::int32_t>(is);
        t.z() = read_pod<std::int32_t>(is);
        mesh.triangles.push_back(t);
    }
    if (!is) throw DataError("import_ply: truncated file " + path);
    return mesh;
}

void export_obj(const Mesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("export_obj: cannot open " + path);
    os << std::setprecision(9);
    for (const auto& v : mesh.vertices)
        os << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (const auto& t : mesh.triangles)
        os << "f " << t.x() + 1 << " " << t.y() + 1 << " " << t.z() + 1 << "\n";
    if (!os) throw DataError("export_obj: write failed for " + path);
}

}  // namespace svr
