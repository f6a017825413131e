#ifndef PLATED_IMAGE_HPP
#define PLATED_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "plated/error.hpp"
#include "plated/tensor.hpp"

namespace plated {

// Raster decode to an RGB float tensor in [0,1]. Format is sniffed from the
// file's magic bytes: PNG and JPEG via libpng/libjpeg, PPM/PGM (P6/P5 binary,
// P3/P2 ascii, maxval <= 255) decoded here. Grayscale is replicated to three
// channels, alpha is dropped.

namespace imgdetail {

inline Tensor from_rgb8(const std::vector<unsigned char>& rgb, std::size_t h, std::size_t w) {
    Tensor t({h, w, 3});
    for (std::size_t i = 0; i < h * w * 3; ++i) t[i] = static_cast<real>(rgb[i] / 255.0);
    return t;
}

inline Tensor decode_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw Error("cannot decode PNG '" + path + "': " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw Error("cannot decode PNG '" + path + "': " + msg);
    }
    return from_rgb8(buffer, image.height, image.width);
}

struct JpegErrorTrap {
    jpeg_error_mgr mgr;
    std::string path;
};

[[noreturn]] inline void jpeg_fail(j_common_ptr cinfo) {
    char what[JMSG_LENGTH_MAX];
    (*cinfo->err->format_message)(cinfo, what);
    const std::string path = reinterpret_cast<JpegErrorTrap*>(cinfo->err)->path;
    jpeg_destroy(cinfo);
    throw Error("cannot decode JPEG '" + path + "': " + what);
}

inline Tensor decode_jpeg(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    require(fp != nullptr, "cannot open '" + path + "'");
    jpeg_decompress_struct cinfo;
    JpegErrorTrap trap;
    trap.path = path;
    cinfo.err = jpeg_std_error(&trap.mgr);
    trap.mgr.error_exit = jpeg_fail;
    try {
        jpeg_create_decompress(&cinfo);
        jpeg_stdio_src(&cinfo, fp);
        jpeg_read_header(&cinfo, TRUE);
        cinfo.out_color_space = JCS_RGB;
        jpeg_start_decompress(&cinfo);
        const std::size_t w = cinfo.output_width, h = cinfo.output_height;
        std::vector<unsigned char> rgb(h * w * 3);
        while (cinfo.output_scanline < cinfo.output_height) {
            unsigned char* row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
            jpeg_read_scanlines(&cinfo, &row, 1);
        }
        jpeg_finish_decompress(&cinfo);
        jpeg_destroy_decompress(&cinfo);
        std::fclose(fp);
        return from_rgb8(rgb, h, w);
    } catch (...) {
        std::fclose(fp);
        throw;
    }
}

inline Tensor decode_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "cannot open '" + path + "'");
    std::string magic;
    is >> magic;
    const bool binary = magic == "P6" || magic == "P5";
    const bool gray = magic == "P5" || magic == "P2";
    require(binary || magic == "P3" || magic == "P2", "'" + path + "' is not a supported PPM/PGM");

    auto next_int = [&]() -> long {
        // skip whitespace and # comments
        for (;;) {
            int c = is.peek();
            if (c == '#') {
                std::string comment;
                std::getline(is, comment);
            } else if (std::isspace(c)) {
                is.get();
            } else {
                break;
            }
        }
        long v = -1;
        is >> v;
        require(is.good() && v >= 0, "malformed header in '" + path + "'");
        return v;
    };

    const long w = next_int(), h = next_int(), maxval = next_int();
    require(w > 0 && h > 0, "bad dimensions in '" + path + "'");
    require(maxval > 0 && maxval <= 255, "'" + path + "': only 8-bit PPM/PGM supported");
    const std::size_t channels = gray ? 1 : 3;
    const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
    std::vector<unsigned char> raw(count);
    if (binary) {
        is.get();  // single whitespace after maxval
        is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
        require(is.gcount() == static_cast<std::streamsize>(count), "'" + path + "' is truncated");
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            long v;
            is >> v;
            require(!is.fail() && v >= 0 && v <= maxval, "'" + path + "' has a bad sample");
            raw[i] = static_cast<unsigned char>(v);
        }
    }
    Tensor t({static_cast<std::size_t>(h), static_cast<std::size_t>(w), 3});
    for (std::size_t i = 0; i < static_cast<std::size_t>(h) * static_cast<std::size_t>(w); ++i)
        for (std::size_t c = 0; c < 3; ++c)
            t[i * 3 + c] = static_cast<real>(raw[i * channels + (gray ? 0 : c)] /
                                             static_cast<double>(maxval));
    return t;
}

}  // namespace imgdetail

inline Tensor decode_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    require(probe.good(), "cannot open image '" + path + "'");
    unsigned char magic[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(magic), 2);
    probe.close();
    if (magic[0] == 0x89 && magic[1] == 'P') return imgdetail::decode_png(path);
    if (magic[0] == 0xff && magic[1] == 0xd8) return imgdetail::decode_jpeg(path);
    if (magic[0] == 'P' && (magic[1] == '6' || magic[1] == '5' || magic[1] == '3' || magic[1] == '2'))
        return imgdetail::decode_ppm(path);
    throw Error("unsupported image format in '" + path + "' (want PNG, JPEG, or PPM/PGM)");
}

// Bilinear resampling with half-pixel centers: src = (dst + 0.5)*scale - 0.5.
inline Tensor bilinear_resize(const Tensor& img, std::size_t out_h, std::size_t out_w) {
    require(img.rank() == 3, "bilinear_resize: input must be [H,W,C]");
    const std::size_t h = img.dim(0), w = img.dim(1), c = img.dim(2);
    if (h == out_h && w == out_w) return img;
    Tensor out({out_h, out_w, c});
    const double sy = static_cast<double>(h) / static_cast<double>(out_h);
    const double sx = static_cast<double>(w) / static_cast<double>(out_w);
    for (std::size_t i = 0; i < out_h; ++i) {
        double fy = (static_cast<double>(i) + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
        const std::size_t y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t j = 0; j < out_w; ++j) {
            double fx = (static_cast<double>(j) + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
            const std::size_t x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double top = (1.0 - wx) * img.at(y0, x0, ch) + wx * img.at(y0, x1, ch);
                const double bot = (1.0 - wx) * img.at(y1, x0, ch) + wx * img.at(y1, x1, ch);
                out.at(i, j, ch) = static_cast<real>((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

// P6 writer for fixtures and exported previews.
inline void write_ppm(const Tensor& img, const std::string& path) {
    require(img.rank() == 3 && img.dim(2) == 3, "write_ppm: input must be [H,W,3]");
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "cannot write '" + path + "'");
    os << "P6\n" << img.dim(1) << ' ' << img.dim(0) << "\n255\n";
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = std::clamp(static_cast<double>(img[i]), 0.0, 1.0);
        os.put(static_cast<char>(std::lround(v * 255.0)));
    }
    require(os.good(), "write failed for '" + path + "'");
}

}  // namespace plated

#endif  // PLATED_IMAGE_HPP
