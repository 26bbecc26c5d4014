#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kwb/color.hpp"

namespace kwb {

// Integer samples as stored on disk (sensor counts for raw dumps).
struct RawImage {
    int height = 0;
    int width = 0;
    int maxval = 0;
    std::vector<std::uint16_t> samples;  // row-major, interleaved RGB

    std::uint16_t at(int y, int x, int c) const {
        return samples[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

// Binary PPM (P6, maxval <= 65535, big-endian when > 255) or PNG (8/16-bit,
// gray/RGB/RGBA). Chosen by magic bytes, not extension.
RawImage read_raw_image(const std::filesystem::path& path);

// read_raw_image divided by maxval, interpreted as linear RGB.
LinearImage read_image(const std::filesystem::path& path);
LinearImage raw_to_linear(const RawImage& raw);

// 16-bit P6: header "P6\n<w> <h>\n65535\n", samples round(clip(v, 0, 1) * 65535).
std::string encode_ppm16(const LinearImage& image);
void write_ppm16(const std::filesystem::path& path, const LinearImage& image);
void write_png16(const std::filesystem::path& path, const LinearImage& image);
// PNG for a .png extension, 16-bit PPM otherwise.
void write_image(const std::filesystem::path& path, const LinearImage& image);

// 8-bit P5 grayscale.
std::string encode_pgm8(int height, int width, std::span<const std::uint8_t> values);
void write_pgm8(const std::filesystem::path& path, int height, int width,
                std::span<const std::uint8_t> values);

struct GrayImage8 {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;
};
GrayImage8 read_pgm8(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace kwb
