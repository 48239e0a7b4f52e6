#pragma once

#include <algorithm>
#include <bit>
#include <cerrno>
#include <csetjmp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "steerkit/error.hpp"
#include "steerkit/evaluation.hpp"
#include "steerkit/geometry.hpp"
#include "steerkit/grid.hpp"
#include "steerkit/scene.hpp"

namespace steerkit {

namespace fs = std::filesystem;

namespace detail {

inline std::string extension(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

inline std::vector<unsigned char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open " + path.string());
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(!in.bad(), ErrorCode::io, "read failed for " + path.string());
    return data;
}

inline void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io, "cannot create " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(static_cast<bool>(out), ErrorCode::io, "write failed for " + path.string());
}

constexpr std::size_t max_pixels = std::size_t(1) << 28;

inline void check_dims(long long rows, long long cols, const fs::path& path) {
    require(rows > 0 && cols > 0 && rows <= (1 << 20) && cols <= (1 << 20) &&
                static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) <= max_pixels,
            ErrorCode::format, "unsupported dimensions " + std::to_string(rows) + "x" + std::to_string(cols) + " in " +
                                   path.string());
}

// Netpbm header: magic, width, height, maxval, single whitespace.
struct PnmHeader {
    std::string magic;
    int width = 0, height = 0, maxval = 0;
    std::size_t offset = 0;
};

inline PnmHeader parse_pnm(const std::vector<unsigned char>& d, const fs::path& path) {
    PnmHeader h;
    std::size_t i = 0;
    auto skip = [&] {
        while (i < d.size()) {
            if (d[i] == '#') {
                while (i < d.size() && d[i] != '\n') ++i;
            } else if (std::isspace(d[i])) {
                ++i;
            } else {
                break;
            }
        }
    };
    auto number = [&]() -> long long {
        skip();
        long long v = 0;
        std::size_t start = i;
        while (i < d.size() && std::isdigit(d[i]) && i - start < 10) v = v * 10 + (d[i++] - '0');
        require(i > start, ErrorCode::format, "malformed header in " + path.string());
        return v;
    };
    require(d.size() >= 2 && d[0] == 'P', ErrorCode::format, "not a netpbm file: " + path.string());
    h.magic = std::string{char(d[0]), char(d[1])};
    i = 2;
    const long long w = number(), hh = number(), mv = number();
    check_dims(hh, w, path);
    require(mv >= 1 && mv <= 65535, ErrorCode::format, "bad maxval in " + path.string());
    require(i < d.size() && std::isspace(d[i]), ErrorCode::format, "malformed header in " + path.string());
    h.width = static_cast<int>(w);
    h.height = static_cast<int>(hh);
    h.maxval = static_cast<int>(mv);
    h.offset = i + 1;
    return h;
}

struct PngImage {
    int width = 0, height = 0, channels = 0, bit_depth = 0;
    std::vector<std::uint16_t> samples;  // row-major, interleaved
};

struct PngReadState {
    std::string message;
    jmp_buf jump;
};

inline void png_error_fn(png_structp png, png_const_charp msg) {
    auto* st = static_cast<PngReadState*>(png_get_error_ptr(png));
    st->message = msg ? msg : "libpng error";
    longjmp(st->jump, 1);
}
inline void png_warning_fn(png_structp, png_const_charp) {}

// Reads 8- or 16-bit gray/RGB(A) PNG; palette and low bit depths are expanded.
inline PngImage read_png(const fs::path& path, bool want_rgb) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    require(fp != nullptr, ErrorCode::io, "cannot open " + path.string());
    unsigned char sig[8] = {};
    const bool is_png = std::fread(sig, 1, 8, fp) == 8 && png_sig_cmp(sig, 0, 8) == 0;
    if (!is_png) {
        std::fclose(fp);
        fail(ErrorCode::format, "not a PNG file: " + path.string());
    }
    PngReadState st;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(png ? &png : nullptr, nullptr, nullptr);
        std::fclose(fp);
        fail(ErrorCode::io, "libpng initialization failed");
    }
    PngImage img;
    std::vector<png_bytep> rows;
    std::vector<unsigned char> raw;
    if (setjmp(st.jump)) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(ErrorCode::format, path.string() + ": " + st.message);
    }
    png_init_io(png, fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info), h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (want_rgb && !(color & PNG_COLOR_MASK_COLOR)) png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.channels = png_get_channels(png, info);
    img.bit_depth = png_get_bit_depth(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    if (w == 0 || h == 0 || static_cast<std::size_t>(w) * h > max_pixels) {
        st.message = "unsupported dimensions";
        longjmp(st.jump, 1);
    }
    raw.resize(rowbytes * h);
    rows.resize(h);
    for (png_uint_32 r = 0; r < h; ++r) rows[r] = raw.data() + r * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    const std::size_t n = static_cast<std::size_t>(w) * h * img.channels;
    img.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        img.samples[i] = img.bit_depth == 16 ? static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i];
    return img;
}

inline void write_png(const fs::path& path, int width, int height, int channels, int bit_depth,
                      const std::vector<std::uint16_t>& samples) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    require(fp != nullptr, ErrorCode::io, "cannot create " + path.string());
    PngReadState st;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &st, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(png ? &png : nullptr, nullptr);
        std::fclose(fp);
        fail(ErrorCode::io, "libpng initialization failed");
    }
    const int bpp = bit_depth / 8;
    std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height * channels * bpp);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (bpp == 2) {
            raw[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
            raw[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xff);
        } else {
            raw[i] = static_cast<unsigned char>(samples[i]);
        }
    }
    std::vector<png_bytep> rows(height);
    for (int r = 0; r < height; ++r) rows[r] = raw.data() + static_cast<std::size_t>(r) * width * channels * bpp;
    if (setjmp(st.jump)) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        fail(ErrorCode::io, path.string() + ": " + st.message);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, bit_depth, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    require(std::fclose(fp) == 0, ErrorCode::io, "write failed for " + path.string());
}

inline std::uint16_t to_millimeters(double meters) {
    if (!std::isfinite(meters) || meters <= 0.0) return 0;
    const double mm = std::round(meters * 1000.0);
    return static_cast<std::uint16_t>(std::clamp(mm, 1.0, 65535.0));
}

}  // namespace detail

// .png (16-bit gray) and .pgm (P5) hold millimeters, zero = invalid.
// .pfm holds 32-bit float meters.
inline DepthMap read_depth(const fs::path& path) {
    const std::string ext = detail::extension(path);
    if (ext == ".png") {
        const auto img = detail::read_png(path, false);
        require(img.channels == 1 && img.bit_depth == 16, ErrorCode::format,
                path.string() + ": depth PNG must be 16-bit grayscale");
        DepthMap out(img.height, img.width, 0.0, true);
        for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = img.samples[i] / 1000.0;
        return out;
    }
    const auto data = detail::read_file(path);
    if (ext == ".pgm") {
        const auto h = detail::parse_pnm(data, path);
        require(h.magic == "P5", ErrorCode::format, path.string() + ": only binary P5 graymaps are supported");
        const std::size_t bpp = h.maxval > 255 ? 2 : 1;
        const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
        require(data.size() >= h.offset + n * bpp, ErrorCode::format, path.string() + ": truncated raster");
        DepthMap out(h.height, h.width, 0.0, true);
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned v = bpp == 2 ? (data[h.offset + 2 * i] << 8) | data[h.offset + 2 * i + 1] : data[h.offset + i];
            out.values()[i] = v / 1000.0;
        }
        return out;
    }
    if (ext == ".pfm") {
        // "Pf\n<w> <h>\n<scale>\n", scale < 0 means little endian, rows stored bottom-up
        std::size_t i = 0;
        auto token = [&] {
            while (i < data.size() && std::isspace(data[i])) ++i;
            std::string t;
            while (i < data.size() && !std::isspace(data[i]) && t.size() < 64) t += static_cast<char>(data[i++]);
            return t;
        };
        require(token() == "Pf", ErrorCode::format, path.string() + ": expected a grayscale PFM");
        long long w = 0, h = 0;
        double scale = 0.0;
        try {
            w = std::stoll(token());
            h = std::stoll(token());
            scale = std::stod(token());
        } catch (const std::exception&) {
            fail(ErrorCode::format, path.string() + ": malformed PFM header");
        }
        detail::check_dims(h, w, path);
        require(scale != 0.0 && i < data.size(), ErrorCode::format, path.string() + ": malformed PFM header");
        ++i;
        const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
        require(data.size() >= i + 4 * n, ErrorCode::format, path.string() + ": truncated raster");
        const bool little = scale < 0.0;
        DepthMap out(static_cast<int>(h), static_cast<int>(w), 0.0, true);
        for (long long r = 0; r < h; ++r)
            for (long long c = 0; c < w; ++c) {
                const unsigned char* p = data.data() + i + 4 * static_cast<std::size_t>((h - 1 - r) * w + c);
                std::uint32_t bits = little ? (p[0] | p[1] << 8 | p[2] << 16 | std::uint32_t(p[3]) << 24)
                                            : (std::uint32_t(p[0]) << 24 | p[1] << 16 | p[2] << 8 | p[3]);
                out(static_cast<int>(r), static_cast<int>(c)) = std::bit_cast<float>(bits);
            }
        return out;
    }
    fail(ErrorCode::format, "unsupported depth format '" + ext + "' (.png, .pgm, .pfm)");
}

inline void write_depth(const Grid<double>& d, const fs::path& path) {
    const std::string ext = detail::extension(path);
    require(d.rows() > 0 && d.cols() > 0, ErrorCode::dimension, "cannot write an empty depth map");
    if (ext == ".png") {
        std::vector<std::uint16_t> s(d.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = detail::to_millimeters(d.values()[i]);
        detail::write_png(path, d.cols(), d.rows(), 1, 16, s);
        return;
    }
    std::string bytes;
    if (ext == ".pgm") {
        bytes = "P5\n" + std::to_string(d.cols()) + " " + std::to_string(d.rows()) + "\n65535\n";
        for (double v : d.values()) {
            const std::uint16_t mm = detail::to_millimeters(v);
            bytes += static_cast<char>(mm >> 8);
            bytes += static_cast<char>(mm & 0xff);
        }
    } else if (ext == ".pfm") {
        bytes = "Pf\n" + std::to_string(d.cols()) + " " + std::to_string(d.rows()) + "\n-1.0\n";
        bytes.reserve(bytes.size() + 4 * d.size());
        for (int r = d.rows() - 1; r >= 0; --r)
            for (int c = 0; c < d.cols(); ++c) {
                const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(d(r, c)));
                for (int k = 0; k < 4; ++k) bytes += static_cast<char>((bits >> (8 * k)) & 0xff);
            }
    } else {
        fail(ErrorCode::format, "unsupported depth format '" + ext + "' (.png, .pgm, .pfm)");
    }
    detail::write_file(path, bytes);
}

// .png (8/16-bit, gray or color) or binary .ppm, normalized to [0, 1].
inline RgbImage read_rgb(const fs::path& path) {
    const std::string ext = detail::extension(path);
    if (ext == ".png") {
        const auto img = detail::read_png(path, true);
        require(img.channels == 3, ErrorCode::format, path.string() + ": expected a color image");
        const double scale = img.bit_depth == 16 ? 65535.0 : 255.0;
        RgbImage out(3, img.height, img.width);
        for (int r = 0; r < img.height; ++r)
            for (int c = 0; c < img.width; ++c)
                for (int ch = 0; ch < 3; ++ch)
                    out(ch, r, c) = img.samples[(static_cast<std::size_t>(r) * img.width + c) * 3 + ch] / scale;
        return out;
    }
    if (ext == ".ppm") {
        const auto data = detail::read_file(path);
        const auto h = detail::parse_pnm(data, path);
        require(h.magic == "P6", ErrorCode::format, path.string() + ": only binary P6 pixmaps are supported");
        const std::size_t bpp = h.maxval > 255 ? 2 : 1;
        const std::size_t n = static_cast<std::size_t>(h.width) * h.height * 3;
        require(data.size() >= h.offset + n * bpp, ErrorCode::format, path.string() + ": truncated raster");
        RgbImage out(3, h.height, h.width);
        for (int r = 0; r < h.height; ++r)
            for (int c = 0; c < h.width; ++c)
                for (int ch = 0; ch < 3; ++ch) {
                    const std::size_t i = (static_cast<std::size_t>(r) * h.width + c) * 3 + ch;
                    const unsigned v =
                        bpp == 2 ? (data[h.offset + 2 * i] << 8) | data[h.offset + 2 * i + 1] : data[h.offset + i];
                    out(ch, r, c) = static_cast<double>(v) / h.maxval;
                }
        return out;
    }
    fail(ErrorCode::format, "unsupported image format '" + ext + "' (.png, .ppm)");
}

inline void write_rgb(const RgbImage& img, const fs::path& path) {
    require(img.channels() == 3, ErrorCode::dimension, "RGB image needs 3 channels");
    const std::string ext = detail::extension(path);
    std::vector<std::uint16_t> s(img.size());
    for (int r = 0; r < img.rows(); ++r)
        for (int c = 0; c < img.cols(); ++c)
            for (int ch = 0; ch < 3; ++ch)
                s[(static_cast<std::size_t>(r) * img.cols() + c) * 3 + ch] =
                    static_cast<std::uint16_t>(std::lround(std::clamp(img(ch, r, c), 0.0, 1.0) * 255.0));
    if (ext == ".png") {
        detail::write_png(path, img.cols(), img.rows(), 3, 8, s);
    } else if (ext == ".ppm") {
        std::string bytes = "P6\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n255\n";
        for (auto v : s) bytes += static_cast<char>(v);
        detail::write_file(path, bytes);
    } else {
        fail(ErrorCode::format, "unsupported image format '" + ext + "' (.png, .ppm)");
    }
}

// CSV with header "row,col,depth_m".
inline SparseDepth read_sparse(const fs::path& path, Dims dims) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open " + path.string());
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::format, path.string() + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == "row,col,depth_m", ErrorCode::format,
            path.string() + ": header must be 'row,col,depth_m', got '" + line + "'");
    std::vector<DepthPoint> pts;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        const auto c1 = line.find(','), c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        require(c2 != std::string::npos && line.find(',', c2 + 1) == std::string::npos, ErrorCode::format,
                where + ": expected 3 fields");
        DepthPoint p;
        try {
            std::size_t u1 = 0, u2 = 0, u3 = 0;
            const std::string f1 = line.substr(0, c1), f2 = line.substr(c1 + 1, c2 - c1 - 1), f3 = line.substr(c2 + 1);
            const long long r = std::stoll(f1, &u1), c = std::stoll(f2, &u2);
            p.depth = std::stod(f3, &u3);
            if (u1 != f1.size() || u2 != f2.size() || u3 != f3.size()) throw std::invalid_argument("trailing");
            require(r >= std::numeric_limits<int>::min() && r <= std::numeric_limits<int>::max() &&
                        c >= std::numeric_limits<int>::min() && c <= std::numeric_limits<int>::max(),
                    ErrorCode::out_of_bounds, where + ": index out of range");
            p.row = static_cast<int>(r);
            p.col = static_cast<int>(c);
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            fail(ErrorCode::format, where + ": malformed row '" + line + "'");
        }
        pts.push_back(p);
    }
    return SparseDepth(dims, std::move(pts));
}

inline void write_sparse(const SparseDepth& c, const fs::path& path) {
    std::string out = "row,col,depth_m\n";
    char buf[96];
    for (const auto& p : c.points()) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", p.row, p.col, p.depth);
        out += buf;
    }
    detail::write_file(path, out);
}

// Scenes are <id>_depth.{png,pgm,pfm} with an optional <id>_rgb.{png,ppm}.
inline std::vector<BenchmarkScene> load_dataset(const fs::path& dir) {
    require(fs::is_directory(dir), ErrorCode::io, dir.string() + " is not a directory");
    std::vector<std::pair<std::string, fs::path>> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string stem = entry.path().stem().string();
        const std::string ext = detail::extension(entry.path());
        const std::string suffix = "_depth";
        if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0 &&
            (ext == ".png" || ext == ".pgm" || ext == ".pfm"))
            found.emplace_back(stem.substr(0, stem.size() - suffix.size()), entry.path());
    }
    std::sort(found.begin(), found.end());
    std::vector<BenchmarkScene> scenes;
    for (const auto& [id, depth_path] : found) {
        BenchmarkScene s;
        s.id = id;
        s.gt = read_depth(depth_path);
        for (const char* ext : {".png", ".ppm"}) {
            const fs::path rgb = dir / (id + "_rgb" + ext);
            if (fs::exists(rgb)) {
                s.rgb = read_rgb(rgb);
                require(s.rgb.dims() == s.gt.dims(), ErrorCode::dimension, id + ": image and depth dims differ");
                break;
            }
        }
        scenes.push_back(std::move(s));
    }
    return scenes;
}

// {"rows", "cols", "camera": {"fx", "fy", "cx", "cy"}, "texture_seed",
//  "primitives": [{"plane": {"normal": [x,y,z], "offset"}, "albedo": [r,g,b]},
//                 {"sphere": {"center": [...], "radius"}}, {"box": {"lo": [...], "hi": [...]}}]}
// Camera fields default to a 518.8 px focal length at 640 columns and a centered principal point.
inline SceneSpec scene_spec_from_json(const nlohmann::json& j) {
    SceneSpec s;
    try {
        s.dims = {j.value("rows", 448), j.value("cols", 608)};
        require(s.dims.rows > 0 && s.dims.cols > 0, ErrorCode::dimension, "scene dims must be positive");
        const double f = 518.8 * s.dims.cols / 640.0;
        const auto cam = j.value("camera", nlohmann::json::object());
        s.camera.fx = cam.value("fx", f);
        s.camera.fy = cam.value("fy", f);
        s.camera.cx = cam.value("cx", s.dims.cols / 2.0);
        s.camera.cy = cam.value("cy", s.dims.rows / 2.0);
        s.texture_seed = j.value("texture_seed", std::uint64_t{0});
        auto vec3 = [](const nlohmann::json& v) {
            require(v.is_array() && v.size() == 3, ErrorCode::format, "expected a 3-vector");
            return Vec3{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
        };
        for (const auto& p : j.at("primitives")) {
            Primitive prim;
            if (p.contains("albedo")) prim.albedo = vec3(p["albedo"]);
            if (p.contains("plane")) {
                const auto& q = p["plane"];
                PlaneShape shape{vec3(q.at("normal")), q.at("offset").get<double>()};
                require(dot(shape.normal, shape.normal) > 0.0, ErrorCode::parameter, "plane normal is zero");
                prim.shape = shape;
            } else if (p.contains("sphere")) {
                const auto& q = p["sphere"];
                SphereShape shape{vec3(q.at("center")), q.at("radius").get<double>()};
                require(shape.radius > 0.0, ErrorCode::parameter, "sphere radius must be positive");
                prim.shape = shape;
            } else if (p.contains("box")) {
                const auto& q = p["box"];
                BoxShape shape{vec3(q.at("lo")), vec3(q.at("hi"))};
                for (int i = 0; i < 3; ++i)
                    require(shape.lo[i] < shape.hi[i], ErrorCode::parameter, "box lo must be below hi");
                prim.shape = shape;
            } else {
                fail(ErrorCode::format, "primitive needs one of plane, sphere, box");
            }
            s.primitives.push_back(prim);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format, std::string("scene description: ") + e.what());
    }
    return s;
}

inline SceneSpec read_scene_spec(const fs::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format, path.string() + ": " + e.what());
    }
    return scene_spec_from_json(j);
}

}  // namespace steerkit
