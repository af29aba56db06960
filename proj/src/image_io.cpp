#include "ulgfbp/image_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include <jerror.h>
#include <jpeglib.h>

#include "ulgfbp/imaging.hpp"

namespace ulgfbp {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_png_signature(std::FILE* f) {
    unsigned char sig[8];
    const std::size_t n = std::fread(sig, 1, 8, f);
    std::rewind(f);
    return n == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

GrayImage decode_png_gray(std::FILE* f, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("png: allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DataError("png: allocation failed");
    }
    std::vector<std::vector<png_byte>> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("png: failed to decode " + path);
    }
    png_init_io(png, f);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    rows.assign(h, std::vector<png_byte>(png_get_rowbytes(png, info)));
    std::vector<png_bytep> row_ptrs(h);
    for (int y = 0; y < h; ++y) row_ptrs[y] = rows[y].data();
    png_read_image(png, row_ptrs.data());
    png_destroy_read_struct(&png, &info, nullptr);

    if (channels == 1) {
        GrayImage out(w, h);
        for (int y = 0; y < h; ++y)
            std::memcpy(out.data.data() + static_cast<std::size_t>(y) * w, rows[y].data(), w);
        return out;
    }
    if (channels != 3) throw DataError("png: unsupported channel layout in " + path);
    RgbImage rgb(w, h);
    for (int y = 0; y < h; ++y)
        std::memcpy(rgb.data.data() + static_cast<std::size_t>(y) * w * 3, rows[y].data(),
                    static_cast<std::size_t>(w) * 3);
    return to_grayscale(rgb);
}

struct JpegErrorMgr {
    jpeg_error_mgr base;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

GrayImage decode_jpeg_gray(std::FILE* f, const std::string& path) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DataError("jpeg: failed to decode " + path);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_GRAYSCALE;
    jpeg_start_decompress(&cinfo);

    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    GrayImage out(w, h);
    std::vector<JSAMPLE> row(static_cast<std::size_t>(w) * cinfo.output_components);
    JSAMPROW rp = row.data();
    while (cinfo.output_scanline < cinfo.output_height) {
        const int y = static_cast<int>(cinfo.output_scanline);
        jpeg_read_scanlines(&cinfo, &rp, 1);
        std::memcpy(out.data.data() + static_cast<std::size_t>(y) * w, row.data(), w);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

void write_png(const std::string& path, int w, int h, int color_type, int stride,
               const std::uint8_t* data) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("png: cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png: allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: failed to write " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, w, h, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y)
        png_write_row(png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * stride));
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

} // namespace

GrayImage decode_image_gray(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw DataError("cannot open image file: " + path);
    if (has_png_signature(f.get())) return decode_png_gray(f.get(), path);
    return decode_jpeg_gray(f.get(), path);
}

void write_png_gray(const std::string& path, const GrayImage& img) {
    if (img.empty()) throw ArgumentError("write_png_gray: empty image");
    write_png(path, img.width, img.height, PNG_COLOR_TYPE_GRAY, img.width, img.data.data());
}

void write_png_rgb(const std::string& path, const RgbImage& img) {
    if (img.empty()) throw ArgumentError("write_png_rgb: empty image");
    write_png(path, img.width, img.height, PNG_COLOR_TYPE_RGB, img.width * 3, img.data.data());
}

} // namespace ulgfbp
