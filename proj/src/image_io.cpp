#include "kwb/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace kwb {
namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
class PnmHeaderReader {
public:
    PnmHeaderReader(const std::string& bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

    int next_int() {
        skip_space_and_comments();
        std::size_t start = pos_;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
        if (start == pos_) throw FormatError("malformed PNM header");
        return std::stoi(bytes_.substr(start, pos_ - start));
    }

    // Exactly one whitespace byte separates the header from the raster.
    std::size_t raster_start() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            throw FormatError("malformed PNM header");
        }
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    const std::string& bytes_;
    std::size_t pos_;
};

RawImage decode_pnm(const std::string& bytes, int channels) {
    PnmHeaderReader header(bytes, 2);
    RawImage img;
    img.width = header.next_int();
    img.height = header.next_int();
    img.maxval = header.next_int();
    if (img.width < 1 || img.height < 1 || img.maxval < 1 || img.maxval > 65535) {
        throw FormatError("unsupported PNM dimensions or maxval");
    }
    const std::size_t start = header.raster_start();
    const std::size_t count = static_cast<std::size_t>(img.width) * img.height * channels;
    const int bytes_per = img.maxval > 255 ? 2 : 1;
    if (bytes.size() < start + count * bytes_per) throw FormatError("truncated PNM raster");

    img.samples.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    auto sample = [&](std::size_t i) -> std::uint16_t {
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + start + i * bytes_per;
        return bytes_per == 2 ? static_cast<std::uint16_t>((p[0] << 8) | p[1]) : p[0];
    };
    const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < 3; ++c) {
            img.samples[p * 3 + c] = sample(p * channels + (channels == 3 ? c : 0));
        }
    }
    return img;
}

struct PngReadDeleter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadDeleter() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

RawImage decode_png(const std::filesystem::path& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "rb"), &std::fclose);
    if (!fp) throw IoError("cannot open " + path.string());

    PngReadDeleter guard;
    guard.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!guard.png) throw FormatError("png_create_read_struct failed");
    guard.info = png_create_info_struct(guard.png);
    if (!guard.info) throw FormatError("png_create_info_struct failed");

    RawImage img;
    std::vector<png_bytep> rows;
    std::vector<unsigned char> buffer;
    if (setjmp(png_jmpbuf(guard.png))) throw FormatError("corrupt PNG " + path.string());

    png_init_io(guard.png, fp.get());
    png_read_info(guard.png, guard.info);
    const png_uint_32 width = png_get_image_width(guard.png, guard.info);
    const png_uint_32 height = png_get_image_height(guard.png, guard.info);
    const int depth = png_get_bit_depth(guard.png, guard.info);
    const int color = png_get_color_type(guard.png, guard.info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(guard.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(guard.png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(guard.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(guard.png);
    png_read_update_info(guard.png, guard.info);

    const int out_depth = png_get_bit_depth(guard.png, guard.info);
    const std::size_t rowbytes = png_get_rowbytes(guard.png, guard.info);
    buffer.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
    png_read_image(guard.png, rows.data());
    png_read_end(guard.png, nullptr);

    img.width = static_cast<int>(width);
    img.height = static_cast<int>(height);
    img.maxval = out_depth == 16 ? 65535 : 255;
    img.samples.resize(static_cast<std::size_t>(width) * height * 3);
    for (png_uint_32 y = 0; y < height; ++y) {
        const unsigned char* row = rows[y];
        for (png_uint_32 i = 0; i < width * 3; ++i) {
            img.samples[y * width * 3 + i] =
                out_depth == 16 ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1]) : row[i];
        }
    }
    return img;
}

std::uint16_t quantize16(double v) {
    return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

}  // namespace

RawImage read_raw_image(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path.string());
    unsigned char magic[8] = {};
    probe.read(reinterpret_cast<char*>(magic), 8);
    probe.close();
    if (magic[0] == 'P' && magic[1] == '6') return decode_pnm(slurp(path), 3);
    if (magic[0] == 'P' && magic[1] == '5') return decode_pnm(slurp(path), 1);
    if (png_sig_cmp(magic, 0, 8) == 0) return decode_png(path);
    throw FormatError("unrecognized image format: " + path.string());
}

LinearImage raw_to_linear(const RawImage& raw) {
    std::vector<double> data(raw.samples.size());
    const double scale = 1.0 / raw.maxval;
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = raw.samples[i] * scale;
    return LinearImage(raw.height, raw.width, std::move(data));
}

LinearImage read_image(const std::filesystem::path& path) { return raw_to_linear(read_raw_image(path)); }

std::string encode_ppm16(const LinearImage& image) {
    std::string out = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n65535\n";
    const std::size_t header = out.size();
    out.resize(header + image.data().size() * 2);
    for (std::size_t i = 0; i < image.data().size(); ++i) {
        const std::uint16_t s = quantize16(image.data()[i]);
        out[header + 2 * i] = static_cast<char>(s >> 8);
        out[header + 2 * i + 1] = static_cast<char>(s & 0xff);
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) { return slurp(path); }

void write_ppm16(const std::filesystem::path& path, const LinearImage& image) {
    write_text_file(path, encode_ppm16(image));
}

void write_png16(const std::filesystem::path& path, const LinearImage& image) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) throw IoError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_write_struct failed");
    }
    std::vector<unsigned char> buffer(image.data().size() * 2);
    for (std::size_t i = 0; i < image.data().size(); ++i) {
        const std::uint16_t s = quantize16(image.data()[i]);
        buffer[2 * i] = static_cast<unsigned char>(s >> 8);
        buffer[2 * i + 1] = static_cast<unsigned char>(s & 0xff);
    }
    std::vector<png_bytep> rows(image.height());
    for (int y = 0; y < image.height(); ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * image.width() * 6;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG write failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, image.width(), image.height(), 16, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_image(const std::filesystem::path& path, const LinearImage& image) {
    if (path.extension() == ".png") {
        write_png16(path, image);
    } else {
        write_ppm16(path, image);
    }
}

std::string encode_pgm8(int height, int width, std::span<const std::uint8_t> values) {
    if (values.size() != static_cast<std::size_t>(height) * width) {
        throw InvalidArgument("PGM value count does not match dimensions");
    }
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(values.data()), values.size());
    return out;
}

void write_pgm8(const std::filesystem::path& path, int height, int width, std::span<const std::uint8_t> values) {
    write_text_file(path, encode_pgm8(height, width, values));
}

GrayImage8 read_pgm8(const std::filesystem::path& path) {
    const std::string bytes = slurp(path);
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw FormatError("not a P5 PGM: " + path.string());
    RawImage raw = decode_pnm(bytes, 1);
    if (raw.maxval > 255) throw FormatError("16-bit PGM not supported");
    GrayImage8 out{raw.height, raw.width, {}};
    out.values.resize(static_cast<std::size_t>(raw.height) * raw.width);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = static_cast<std::uint8_t>(raw.samples[3 * i]);
    return out;
}

}  // namespace kwb
