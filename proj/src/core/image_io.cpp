#include "core/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <vector>

#include "core/errors.hpp"

namespace svr {

void write_f32_map(const ImageF32& img, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("write_f32_map: cannot open " + path);
    os.write(reinterpret_cast<const char*>(img.data.data()),
             static_cast<std::streamsize>(img.data.size() * sizeof(float)));
    if (!os) throw DataError("write_f32_map: write failed for " + path);
}

ImageF32 read_f32_map(const std::string& path, int width, int height, int channels) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw DataError("read_f32_map: missing file " + path);
    const std::size_t bytes = static_cast<std::size_t>(is.tellg());
    const std::size_t pixels = static_cast<std::size_t>(width) * height;
    if (channels < 0) {
        if (pixels == 0 || bytes % (pixels * sizeof(float)) != 0)
            throw DataError("read_f32_map: size of " + path +
                            " is not a whole number of channels");
        channels = static_cast<int>(bytes / (pixels * sizeof(float)));
    }
    if (bytes != pixels * static_cast<std::size_t>(channels) * sizeof(float))
        throw DataError("read_f32_map: shape mismatch for " + path);
    ImageF32 img(width, height, channels);
    is.seekg(0);
    is.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(bytes));
    if (!is) throw DataError("read_f32_map: short read on " + path);
    return img;
}

namespace {

struct PngReader {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;

    explicit PngReader(const std::string& path) {
        fp = std::fopen(path.c_str(), "rb");
        if (!fp) throw DataError("png: missing file " + path);
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        info = png_create_info_struct(png);
        if (!png || !info || setjmp(png_jmpbuf(png))) {
            cleanup();
            throw DataError("png: failed to read " + path);
        }
        png_init_io(png, fp);
        png_read_info(png, info);
    }
    ~PngReader() { cleanup(); }
    void cleanup() {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        if (fp) std::fclose(fp);
        png = nullptr;
        fp = nullptr;
    }
};

}  // namespace

ImageF32 read_png_rgb(const std::string& path) {
    PngReader r(path);
    png_set_expand(r.png);
    png_set_strip_16(r.png);
    png_set_strip_alpha(r.png);
    png_set_gray_to_rgb(r.png);
    png_read_update_info(r.png, r.info);
    const int w = static_cast<int>(png_get_image_width(r.png, r.info));
    const int h = static_cast<int>(png_get_image_height(r.png, r.info));
    std::vector<png_byte> row(static_cast<std::size_t>(w) * 3);
    ImageF32 img(w, h, 3);
    for (int y = 0; y < h; ++y) {
        png_read_row(r.png, row.data(), nullptr);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = row[3 * x + c] / 255.0f;
    }
    return img;
}

ImageF32 read_png_depth_mm(const std::string& path) {
    PngReader r(path);
    const int depth = png_get_bit_depth(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);
    if (depth != 16 || color != PNG_COLOR_TYPE_GRAY)
        throw DataError("png depth: expected 16-bit grayscale in " + path);
    png_set_swap(r.png);  // stored big-endian per PNG spec
    png_read_update_info(r.png, r.info);
    const int w = static_cast<int>(png_get_image_width(r.png, r.info));
    const int h = static_cast<int>(png_get_image_height(r.png, r.info));
    std::vector<std::uint16_t> row(static_cast<std::size_t>(w));
    ImageF32 img(w, h, 1);
    for (int y = 0; y < h; ++y) {
        png_read_row(r.png, reinterpret_cast<png_bytep>(row.data()), nullptr);
        for (int x = 0; x < w; ++x) img.at(x, y) = row[x] / 1000.0f;
    }
    return img;
}

bool file_exists(const std::string& path) {
    std::error_code ec;
    return std::filesystem::exists(path, ec);
}

}  // namespace svr
