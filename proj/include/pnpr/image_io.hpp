#pragma once

// 8-bit image file I/O: PNG (libpng), PGM (P2/P5) and PPM (P3/P6).
// Loading divides by 255; saving clips to [0,1] and rounds half away
// from zero, so an 8-bit load/save round trip is byte identical.

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "pnpr/errors.hpp"
#include "pnpr/image.hpp"

namespace pnpr {

inline uint8_t quantize_u8(double v) {
    v = std::clamp(v, 0.0, 1.0) * 255.0;
    return static_cast<uint8_t>(std::lround(v));  // lround = half away from zero
}

namespace detail {

inline bool ends_with_ci(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    for (size_t i = 0; i < suffix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[s.size() - suffix.size() + i])) !=
            std::tolower(static_cast<unsigned char>(suffix[i])))
            return false;
    return true;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline Image from_interleaved_u8(const std::vector<uint8_t>& buf, int h, int w, int c) {
    Image img(h, w, c, 0.0, c == 3 ? ColorSpace::RGB : ColorSpace::Gray);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int ch = 0; ch < c; ++ch)
                img.at(ch, i, j) =
                    buf[(static_cast<size_t>(i) * w + j) * c + ch] / 255.0;
    return img;
}

inline std::vector<uint8_t> to_interleaved_u8(const Image& img) {
    std::vector<uint8_t> buf(static_cast<size_t>(img.height) * img.width * img.channels);
    for (int i = 0; i < img.height; ++i)
        for (int j = 0; j < img.width; ++j)
            for (int ch = 0; ch < img.channels; ++ch)
                buf[(static_cast<size_t>(i) * img.width + j) * img.channels + ch] =
                    quantize_u8(img.at(ch, i, j));
    return buf;
}

inline Image load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("load_image: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("load_image: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("load_image: PNG decode error in " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int ctype = png_get_color_type(png, info);
    if (depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("load_image: 16-bit PNG not supported: " + path);
    }
    if (ctype == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (ctype == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (ctype & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    else if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int c = png_get_channels(png, info);
    if (c != 1 && c != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("load_image: unsupported PNG channel count in " + path);
    }
    std::vector<uint8_t> buf(static_cast<size_t>(h) * w * c);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 i = 0; i < h; ++i)
        rows[i] = buf.data() + static_cast<size_t>(i) * w * c;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return from_interleaved_u8(buf, static_cast<int>(h), static_cast<int>(w), c);
}

inline void save_png(const Image& img, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("save_image: cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("save_image: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("save_image: PNG encode error for " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> buf = to_interleaved_u8(img);
    std::vector<png_bytep> rows(img.height);
    for (int i = 0; i < img.height; ++i)
        rows[i] = buf.data() + static_cast<size_t>(i) * img.width * img.channels;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Skips whitespace and '#' comment lines between PNM header tokens.
inline int pnm_next_int(std::istream& in, const std::string& path) {
    while (true) {
        const int ch = in.peek();
        if (ch == EOF) throw DataError("load_image: truncated PNM header in " + path);
        if (std::isspace(ch)) {
            in.get();
        } else if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            break;
        }
    }
    int v;
    if (!(in >> v)) throw DataError("load_image: bad PNM header token in " + path);
    return v;
}

inline Image load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_image: cannot open " + path);
    char p, kind;
    in.get(p);
    in.get(kind);
    if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6'))
        throw DataError("load_image: unsupported PNM magic in " + path);
    const int c = (kind == '3' || kind == '6') ? 3 : 1;
    const bool binary = (kind == '5' || kind == '6');
    const int w = pnm_next_int(in, path);
    const int h = pnm_next_int(in, path);
    const int maxval = pnm_next_int(in, path);
    if (maxval <= 0 || maxval > 255)
        throw DataError("load_image: unsupported PNM bit depth (maxval " +
                        std::to_string(maxval) + ") in " + path);
    std::vector<uint8_t> buf(static_cast<size_t>(h) * w * c);
    if (binary) {
        in.get();  // single whitespace after maxval
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() != static_cast<std::streamsize>(buf.size()))
            throw DataError("load_image: truncated PNM data in " + path);
    } else {
        for (auto& b : buf) {
            int v;
            if (!(in >> v)) throw DataError("load_image: truncated PNM data in " + path);
            b = static_cast<uint8_t>(std::clamp(v, 0, 255));
        }
    }
    if (maxval != 255)
        for (auto& b : buf) b = static_cast<uint8_t>(std::lround(b * 255.0 / maxval));
    return from_interleaved_u8(buf, h, w, c);
}

inline void save_pnm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_image: cannot write " + path);
    out << (img.channels == 3 ? "P6" : "P5") << "\n"
        << img.width << " " << img.height << "\n255\n";
    const std::vector<uint8_t> buf = to_interleaved_u8(img);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("save_image: write failure on " + path);
}

}  // namespace detail

inline Image load_image(const std::string& path) {
    if (detail::ends_with_ci(path, ".png")) return detail::load_png(path);
    if (detail::ends_with_ci(path, ".pgm") || detail::ends_with_ci(path, ".ppm") ||
        detail::ends_with_ci(path, ".pnm"))
        return detail::load_pnm(path);
    // Fall back on content sniffing for extensionless paths.
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw DataError("load_image: cannot open " + path);
    char magic[2] = {0, 0};
    probe.read(magic, 2);
    if (magic[0] == 'P') return detail::load_pnm(path);
    if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P')
        return detail::load_png(path);
    throw DataError("load_image: unrecognized image format: " + path);
}

inline void save_image(const Image& img, const std::string& path) {
    if (img.data.empty()) throw DataError("save_image: empty image");
    if (detail::ends_with_ci(path, ".png")) return detail::save_png(img, path);
    if (detail::ends_with_ci(path, ".pgm") || detail::ends_with_ci(path, ".ppm") ||
        detail::ends_with_ci(path, ".pnm"))
        return detail::save_pnm(img, path);
    throw DataError("save_image: unsupported output format (use .png/.pgm/.ppm): " + path);
}

}  // namespace pnpr
