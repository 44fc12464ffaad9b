#include "core/grid_io.hpp"

#include <cstring>
#include <fstream>

#include "core/errors.hpp"

namespace svr {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'G', 'V'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_floats(std::ostream& os, const std::vector<float>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_floats(std::istream& is, std::vector<float>& v) {
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
}

}  // namespace

void save_grid(const SparseDenseGrid& grid, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("save_grid: cannot open " + path);
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod(os, grid.voxel_size());
    write_pod(os, static_cast<std::uint32_t>(grid.block_res()));
    write_pod(os, static_cast<std::uint64_t>(grid.block_count()));
    write_pod(os, static_cast<std::uint32_t>(grid.label_channels()));
    for (std::uint32_t i = 0; i < grid.block_count(); ++i) {
        const BlockCoord& c = grid.block_coord(i);
        write_pod(os, c.x);
        write_pod(os, c.y);
        write_pod(os, c.z);
        const VoxelBlock& b = grid.block(i);
        write_floats(os, b.sdf);
        write_floats(os, b.weight);
        write_floats(os, b.color);
        write_floats(os, b.logits);
    }
    if (!os) throw DataError("save_grid: write failed for " + path);
}

SparseDenseGrid load_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("load_grid: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("load_grid: bad magic in " + path);
    std::uint32_t version = 0;
    read_pod(is, version);
    if (version != kVersion) throw DataError("load_grid: unsupported version");
    double voxel_size = 0;
    std::uint32_t block_res = 0, label_channels = 0;
    std::uint64_t n_blocks = 0;
    read_pod(is, voxel_size);
    read_pod(is, block_res);
    read_pod(is, n_blocks);
    read_pod(is, label_channels);
    if (!is) throw DataError("load_grid: truncated header in " + path);

    SparseDenseGrid grid(voxel_size, static_cast<int>(block_res),
                         static_cast<int>(label_channels),
                         std::max<std::size_t>(SparseDenseGrid::kDefaultCapacity,
                                               static_cast<std::size_t>(n_blocks)));
    for (std::uint64_t i = 0; i < n_blocks; ++i) {
        BlockCoord c;
        read_pod(is, c.x);
        read_pod(is, c.y);
        read_pod(is, c.z);
        const std::uint32_t idx = grid.allocate_block(c);
        VoxelBlock& b = grid.block(idx);
        read_floats(is, b.sdf);
        read_floats(is, b.weight);
        read_floats(is, b.color);
        read_floats(is, b.logits);
        if (!is) throw DataError("load_grid: truncated block data in " + path);
    }
    return grid;
}

}  // namespace svr
