#include "ibis/codec.hpp"

#include <csetjmp>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <fmt/core.h>
#include <openssl/evp.h>
#include <png.h>

namespace ibis {
namespace {

struct PngWriteBuffer {
    Bytes bytes;
};

void write_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* buf = static_cast<PngWriteBuffer*>(png_get_io_ptr(png));
    buf->bytes.insert(buf->bytes.end(), data, data + len);
}

void flush_cb(png_structp) {}

Bytes encode_png(const std::uint8_t* pixels, Index height, Index width, int channels) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png: out of memory");
    png_infop info = png_create_info_struct(png);
    PngWriteBuffer buf;
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png: encode failed");
    }
    png_set_write_fn(png, &buf, write_cb, flush_cb);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    for (Index r = 0; r < height; ++r) {
        rows[r] = const_cast<png_bytep>(pixels + r * width * channels);
    }
    png_set_rows(png, info, rows.data());
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    png_destroy_write_struct(&png, &info);
    return std::move(buf.bytes);
}

struct PngReadCursor {
    std::span<const std::uint8_t> data;
    std::size_t offset = 0;
};

void read_cb(png_structp png, png_bytep out, png_size_t len) {
    auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
    if (cur->offset + len > cur->data.size()) png_error(png, "truncated PNG");
    std::memcpy(out, cur->data.data() + cur->offset, len);
    cur->offset += len;
}

struct DecodedPng {
    Index height = 0;
    Index width = 0;
    int color_type = 0;
    int bit_depth = 0;
    std::vector<std::uint8_t> pixels;
};

// Only 8-bit gray / RGB are accepted; everything else is a format error.
DecodedPng decode_png(std::span<const std::uint8_t> data) {
    if (data.size() < 8 || png_sig_cmp(data.data(), 0, 8) != 0) throw DataError("png: bad signature");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png: out of memory");
    png_infop info = png_create_info_struct(png);
    PngReadCursor cur{data, 0};
    DecodedPng out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("png: decode failed");
    }
    png_set_read_fn(png, &cur, read_cb);
    png_read_info(png, info);
    out.width = png_get_image_width(png, info);
    out.height = png_get_image_height(png, info);
    out.color_type = png_get_color_type(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    const bool supported = out.bit_depth == 8 &&
                           (out.color_type == PNG_COLOR_TYPE_GRAY || out.color_type == PNG_COLOR_TYPE_RGB);
    if (supported) {
        const int channels = out.color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;
        out.pixels.resize(static_cast<std::size_t>(out.height * out.width * channels));
        rows.resize(static_cast<std::size_t>(out.height));
        for (Index r = 0; r < out.height; ++r) rows[r] = out.pixels.data() + r * out.width * channels;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (!supported) {
        throw DataError(fmt::format("png: unsupported color type {} at bit depth {}", out.color_type,
                                    out.bit_depth));
    }
    return out;
}

}  // namespace

Bytes encode_mask_png(const Mask& m) {
    require_valid(m);
    std::vector<std::uint8_t> px(static_cast<std::size_t>(m.size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) px[r * m.cols() + c] = m(r, c) ? 255 : 0;
    return encode_png(px.data(), m.rows(), m.cols(), 1);
}

Mask decode_mask_png(std::span<const std::uint8_t> png) {
    DecodedPng d = decode_png(png);
    if (d.color_type != PNG_COLOR_TYPE_GRAY) throw DataError("mask png must be single-channel grayscale");
    Mask m(d.height, d.width);
    for (Index r = 0; r < d.height; ++r)
        for (Index c = 0; c < d.width; ++c) m(r, c) = d.pixels[r * d.width + c] != 0;
    return m;
}

Bytes encode_image_png(const Image& img) {
    return encode_png(img.pixels.data(), img.height, img.width, img.channels);
}

Image decode_image_png(std::span<const std::uint8_t> png) {
    DecodedPng d = decode_png(png);
    Image img;
    img.height = d.height;
    img.width = d.width;
    img.channels = d.color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;
    img.pixels = std::move(d.pixels);
    return img;
}

std::string base64_encode(std::span<const std::uint8_t> data) {
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                  static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Bytes base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw DataError("base64: length is not a multiple of 4");
    Bytes out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw DataError("base64: invalid input");
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

std::string sha256_hex(std::span<const std::uint8_t> data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::string hex;
    hex.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

std::string sha256_hex(std::string_view text) {
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open {}", path));
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(fmt::format("cannot write {}", path));
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw DataError(fmt::format("write failed: {}", path));
}

void write_file(const std::string& path, std::string_view text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace ibis
