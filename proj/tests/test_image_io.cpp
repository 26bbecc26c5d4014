#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "kwb/image_io.hpp"

using namespace kwb;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("kwb_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

LinearImage quantized_image(int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(0, 65535);
    LinearImage img(h, w);
    for (double& v : img.data()) v = u(rng) / 65535.0;
    return img;
}

}  // namespace

TEST(Ppm16, HeaderAndBigEndianSamples) {
    LinearImage img(1, 2);
    img.set_pixel(0, 0, {1.0, 0.0, 0.5});
    img.set_pixel(0, 1, {2.0, 256.0 / 65535.0, 1.0 / 65535.0});
    const std::string bytes = encode_ppm16(img);
    const std::string header = "P6\n2 1\n65535\n";
    ASSERT_EQ(bytes.substr(0, header.size()), header);
    const auto* s = reinterpret_cast<const unsigned char*>(bytes.data() + header.size());
    ASSERT_EQ(bytes.size(), header.size() + 12);
    EXPECT_EQ(s[0], 0xFF);
    EXPECT_EQ(s[1], 0xFF);
    EXPECT_EQ(s[2], 0x00);
    EXPECT_EQ(s[3], 0x00);
    // round(0.5 * 65535) = 32768
    EXPECT_EQ(s[4], 0x80);
    EXPECT_EQ(s[5], 0x00);
    // values above 1 clip to full scale
    EXPECT_EQ(s[6], 0xFF);
    EXPECT_EQ(s[7], 0xFF);
    EXPECT_EQ(s[8], 0x01);
    EXPECT_EQ(s[9], 0x00);
    EXPECT_EQ(s[10], 0x00);
    EXPECT_EQ(s[11], 0x01);
}

TEST(Ppm16, RoundTripIsExactOnQuantizedData) {
    const fs::path dir = temp_dir("ppm");
    const LinearImage img = quantized_image(7, 5, 3);
    write_ppm16(dir / "a.ppm", img);
    const LinearImage back = read_image(dir / "a.ppm");
    ASSERT_TRUE(back.same_shape(img));
    for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_EQ(back.data()[i], img.data()[i]);
    // Rewriting what was read reproduces the file byte for byte.
    EXPECT_EQ(encode_ppm16(back), read_text_file(dir / "a.ppm"));
}

TEST(Ppm8, EightBitFilesAreScaledByMaxval) {
    const fs::path dir = temp_dir("ppm8");
    std::string bytes = "P6\n# comment\n1 1\n255\n";
    bytes += static_cast<char>(255);
    bytes += static_cast<char>(0);
    bytes += static_cast<char>(51);
    write_text_file(dir / "b.ppm", bytes);
    const LinearImage img = read_image(dir / "b.ppm");
    EXPECT_EQ(img.at(0, 0, 0), 1.0);
    EXPECT_EQ(img.at(0, 0, 1), 0.0);
    EXPECT_DOUBLE_EQ(img.at(0, 0, 2), 0.2);
}

TEST(Png16, RoundTripIsExactOnQuantizedData) {
    const fs::path dir = temp_dir("png");
    const LinearImage img = quantized_image(6, 9, 4);
    write_png16(dir / "a.png", img);
    const RawImage raw = read_raw_image(dir / "a.png");
    EXPECT_EQ(raw.maxval, 65535);
    const LinearImage back = raw_to_linear(raw);
    for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_EQ(back.data()[i], img.data()[i]);
}

TEST(ImageIo, FormatChosenByMagicBytes) {
    const fs::path dir = temp_dir("magic");
    const LinearImage img = quantized_image(3, 3, 5);
    write_png16(dir / "really_png.ppm", img);
    EXPECT_EQ(read_image(dir / "really_png.ppm"), img);
}

TEST(ImageIo, Errors) {
    const fs::path dir = temp_dir("errors");
    EXPECT_THROW(read_image(dir / "missing.ppm"), IoError);
    write_text_file(dir / "junk.ppm", "hello world");
    EXPECT_THROW(read_image(dir / "junk.ppm"), FormatError);
    write_text_file(dir / "short.ppm", "P6\n4 4\n65535\n\x01\x02");
    EXPECT_THROW(read_image(dir / "short.ppm"), FormatError);
    write_text_file(dir / "bad.ppm", "P6\n-4 4\n65535\n");
    EXPECT_THROW(read_image(dir / "bad.ppm"), FormatError);
}

TEST(Pgm8, RoundTrip) {
    const fs::path dir = temp_dir("pgm");
    const std::vector<std::uint8_t> values{0, 128, 255, 7, 9, 11};
    write_pgm8(dir / "m.pgm", 2, 3, values);
    EXPECT_EQ(read_text_file(dir / "m.pgm").substr(0, 11), "P5\n3 2\n255\n");
    const GrayImage8 g = read_pgm8(dir / "m.pgm");
    EXPECT_EQ(g.height, 2);
    EXPECT_EQ(g.width, 3);
    EXPECT_EQ(g.values, values);
    EXPECT_THROW(encode_pgm8(2, 2, values), InvalidArgument);
}
