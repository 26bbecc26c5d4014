#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "kwb/kernel_field.hpp"

using namespace kwb;

namespace {

LinearImage random_image(int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LinearImage img(h, w);
    for (double& v : img.data()) v = u(rng);
    return img;
}

KernelField random_field(int h, int w, int k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    KernelField f(h, w, k);
    for (double& v : f.weights()) v = u(rng);
    return f;
}

// Direct transcription of the per-pixel sum with clamped (replicated) neighbors.
LinearImage naive_apply(const LinearImage& x, const KernelField& f) {
    const int h = x.height(), w = x.width(), k = f.k(), r = k / 2;
    LinearImage y(h, w);
    for (int py = 0; py < h; ++py) {
        for (int px = 0; px < w; ++px) {
            for (int co = 0; co < 3; ++co) {
                double s = 0.0;
                for (int ci = 0; ci < 3; ++ci) {
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) {
                            const int sy = std::clamp(py + ky - r, 0, h - 1);
                            const int sx = std::clamp(px + kx - r, 0, w - 1);
                            s += f.at(py, px, co, ci, ky, kx) * x.at(sy, sx, ci);
                        }
                    }
                }
                y.at(py, px, co) = s;
            }
        }
    }
    return y;
}

}  // namespace

TEST(ApplyKernels, IdentityFieldReproducesInput) {
    for (int k : {1, 3}) {
        const LinearImage x = random_image(9, 11, 1);
        EXPECT_EQ(apply_kernels(x, KernelField::identity(9, 11, k)).image, x);
    }
}

TEST(ApplyKernels, DiagonalFieldEqualsApplyDiagonal) {
    const LinearImage x = random_image(16, 16, 2);
    const Rgb g{2.0, 1.0, 0.5};
    const LinearImage y = apply_kernels(x, KernelField::diagonal(16, 16, 1, g)).image;
    const LinearImage expected = apply_diagonal(x, GainTriple(g));
    for (std::size_t i = 0; i < y.data().size(); ++i) EXPECT_EQ(y.data()[i], expected.data()[i]);
}

TEST(ApplyKernels, BoxAverageOfConstantIsConstant) {
    const LinearImage x(7, 5, 0.6);
    KernelField f(7, 5, 3);
    for (int py = 0; py < 7; ++py) {
        for (int px = 0; px < 5; ++px) {
            for (int c = 0; c < 3; ++c) {
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) f.at(py, px, c, c, ky, kx) = 1.0 / 9.0;
                }
            }
        }
    }
    const ReferenceImage y = apply_kernels(x, f);
    for (double v : y.image.data()) EXPECT_NEAR(v, 0.6, 1e-15);
}

TEST(ApplyKernels, MatchesNaiveOracle) {
    for (int k : {1, 3, 5}) {
        const LinearImage x = random_image(6, 8, 10 + k);
        const KernelField f = random_field(6, 8, k, 20 + k);
        const LinearImage got = apply_kernels(x, f).image;
        const LinearImage want = naive_apply(x, f);
        for (std::size_t i = 0; i < got.data().size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-13);
    }
}

TEST(ApplyKernels, OutputIsNotClamped) {
    const LinearImage x(2, 2, 0.5);
    const LinearImage y = apply_kernels(x, KernelField::diagonal(2, 2, 1, {-1.0, 3.0, 1.0})).image;
    EXPECT_EQ(y.at(0, 0, 0), -0.5);
    EXPECT_EQ(y.at(0, 0, 1), 1.5);
}

TEST(ApplyKernels, LinearInInput) {
    const LinearImage a = random_image(8, 8, 3), b = random_image(8, 8, 4);
    const KernelField f = random_field(8, 8, 3, 5);
    LinearImage mix(8, 8);
    for (std::size_t i = 0; i < mix.data().size(); ++i) mix.data()[i] = 0.3 * a.data()[i] + 1.7 * b.data()[i];
    const LinearImage ya = apply_kernels(a, f).image, yb = apply_kernels(b, f).image, ym = apply_kernels(mix, f).image;
    for (std::size_t i = 0; i < ym.data().size(); ++i) {
        const double expect = 0.3 * ya.data()[i] + 1.7 * yb.data()[i];
        EXPECT_NEAR(ym.data()[i], expect, 1e-10 * std::max(1.0, std::abs(expect)));
    }
}

TEST(ApplyKernels, DimensionMismatchRejected) {
    EXPECT_THROW(apply_kernels(random_image(4, 4, 1), KernelField::identity(4, 5, 1)), InvalidArgument);
}

TEST(KernelField, LayoutIndex) {
    KernelField f(2, 3, 3);
    EXPECT_EQ(f.taps_per_pixel(), 81);
    EXPECT_EQ(f.index(0, 0, 0, 0, 0, 1), 1u);
    EXPECT_EQ(f.index(0, 0, 0, 1, 0, 0), 9u);
    EXPECT_EQ(f.index(0, 0, 1, 0, 0, 0), 27u);
    EXPECT_EQ(f.index(0, 1, 0, 0, 0, 0), 81u);
    EXPECT_EQ(f.index(1, 0, 0, 0, 0, 0), 243u);
    EXPECT_THROW(KernelField(2, 2, 2), InvalidArgument);
    EXPECT_THROW(KernelField(2, 2, 0), InvalidArgument);
}

TEST(RegulationPenalty, DiagonalFieldIsZero) {
    EXPECT_EQ(regulation_penalty(KernelField::diagonal(5, 5, 3, {2.0, -1.0, 0.5})), 0.0);
}

TEST(RegulationPenalty, SixCrossPairs) {
    KernelField f(1, 1, 1);
    for (int co = 0; co < 3; ++co) {
        for (int ci = 0; ci < 3; ++ci) f.at(0, 0, co, ci, 0, 0) = co == ci ? 7.0 : -0.5;
    }
    EXPECT_DOUBLE_EQ(regulation_penalty(f), 3.0);
}

TEST(RegulationPenalty, HomogeneousAndZeroOnlyWithoutCrossWeights) {
    KernelField f = random_field(4, 4, 3, 9);
    KernelField twice = f;
    for (double& v : twice.weights()) v *= 2.0;
    EXPECT_NEAR(regulation_penalty(twice), 2.0 * regulation_penalty(f), 1e-12);
    EXPECT_GT(regulation_penalty(f), 0.0);
    KernelField one(4, 4, 3);
    one.at(2, 1, 0, 2, 1, 1) = 1e-12;
    EXPECT_GT(regulation_penalty(one), 0.0);
}

TEST(IlluminationMap, IdentityReferenceGivesOnes) {
    const LinearImage x = random_image(6, 6, 5);
    // Lift every value above the dark threshold.
    LinearImage lifted = x;
    for (double& v : lifted.data()) v = 0.1 + 0.9 * v;
    const GainMap m = illumination_vector_map(lifted, apply_kernels(lifted, KernelField::identity(6, 6, 1)));
    EXPECT_EQ(m.valid_count(), 36u);
    for (const Rgb& g : m.gains) EXPECT_EQ(g, (Rgb{1.0, 1.0, 1.0}));
}

TEST(IlluminationMap, DiagonalReferenceGivesConstantMap) {
    LinearImage x = random_image(5, 7, 6);
    for (double& v : x.data()) v = 0.05 + v;
    const Rgb g{0.5, 1.0, 2.0};
    const GainMap m = illumination_vector_map(x, ReferenceImage{apply_diagonal(x, GainTriple(g))});
    EXPECT_EQ(m.valid_count(), 35u);
    for (const Rgb& v : m.gains) EXPECT_EQ(v, g);
    const GainMap m2 = illumination_vector_map(x, apply_kernels(x, KernelField::diagonal(5, 7, 3, g)));
    for (const Rgb& v : m2.gains) EXPECT_EQ(v, g);
}

TEST(IlluminationMap, DarkAndNonPositivePixelsFlagged) {
    LinearImage x(1, 3, 0.5);
    x.set_pixel(0, 0, {0.001, 0.5, 0.5});
    LinearImage ref = x;
    ref.at(0, 1, 2) = 0.0;
    const GainMap m = illumination_vector_map(x, ReferenceImage{ref}, 0.02);
    EXPECT_EQ(m.valid, (std::vector<std::uint8_t>{0, 0, 1}));
}

TEST(UpsampleGainMap, AlignedCornersInterpolation) {
    GainMap m;
    m.height = 1;
    m.width = 2;
    m.gains = {{1.0, 1.0, 1.0}, {3.0, 3.0, 3.0}};
    m.valid = {1, 1};
    const GainMap up = upsample_gain_map(m, 1, 4);
    const double expected[] = {1.0, 5.0 / 3.0, 7.0 / 3.0, 3.0};
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(up.gains[i][0], expected[i], 1e-15);
}

TEST(UpsampleGainMap, ConstantAndIdentitySize) {
    GainMap m;
    m.height = 3;
    m.width = 2;
    m.gains.assign(6, {0.7, 1.0, 1.3});
    m.valid = {1, 0, 1, 1, 1, 0};
    const GainMap up = upsample_gain_map(m, 9, 7);
    for (const Rgb& g : up.gains) {
        EXPECT_NEAR(g[0], 0.7, 1e-15);
        EXPECT_NEAR(g[2], 1.3, 1e-15);
    }
    const GainMap same = upsample_gain_map(m, 3, 2);
    EXPECT_EQ(same.gains, m.gains);
    EXPECT_EQ(same.valid, m.valid);
}

TEST(ApplyGainMap, MultipliesPerPixel) {
    const LinearImage x(1, 2, 0.5);
    GainMap m;
    m.height = 1;
    m.width = 2;
    m.gains = {{2.0, 1.0, 0.5}, {1.0, 3.0, 1.0}};
    m.valid = {1, 1};
    const LinearImage y = apply_gain_map(x, m);
    EXPECT_EQ(y.pixel(0, 0), (Rgb{1.0, 0.5, 0.25}));
    EXPECT_EQ(y.pixel(0, 1), (Rgb{0.5, 1.5, 0.5}));
}

TEST(KernelFieldCodec, HeaderAndRoundTrip) {
    KernelField f = random_field(3, 4, 3, 8);
    // Quantize to float so the round trip is exact.
    for (double& v : f.weights()) v = static_cast<float>(v);
    const std::string bytes = encode_kernel_field(f);
    ASSERT_EQ(bytes.substr(0, 4), "KPF1");
    ASSERT_EQ(bytes.size(), 4 + 5 * 4 + f.weights().size() * 4);
    const auto u32 = [&](std::size_t off) {
        const auto* b = reinterpret_cast<const unsigned char*>(bytes.data() + off);
        return static_cast<std::uint32_t>(b[0] | (b[1] << 8) | (b[2] << 16) | (b[3] << 24));
    };
    EXPECT_EQ(u32(4), 3u);
    EXPECT_EQ(u32(8), 4u);
    EXPECT_EQ(u32(12), 3u);
    EXPECT_EQ(u32(16), 3u);
    EXPECT_EQ(u32(20), 3u);
    EXPECT_EQ(decode_kernel_field(bytes), f);
    const auto path = std::filesystem::temp_directory_path() / "kwb_test_field.kpf";
    write_kernel_field(path, f);
    EXPECT_EQ(read_kernel_field(path), f);
    EXPECT_THROW(decode_kernel_field("KPF0" + bytes.substr(4)), FormatError);
    EXPECT_THROW(decode_kernel_field(bytes.substr(0, bytes.size() - 1)), FormatError);
}

TEST(Visualization, DiagonalTilesAreBrightest) {
    const KernelVisualization v = visualize_kernels(KernelField::identity(4, 4, 1));
    ASSERT_EQ(v.values.size(), static_cast<std::size_t>(v.height) * v.width);
    EXPECT_EQ(*std::max_element(v.values.begin(), v.values.end()), 255);
    EXPECT_EQ(*std::min_element(v.values.begin(), v.values.end()), 0);
    // Tile (row b, col a): diagonal tiles lie on the tile-grid diagonal.
    const int th = v.height / 3, tw = v.width / 3;
    for (int b = 0; b < 3; ++b) {
        for (int a = 0; a < 3; ++a) {
            const std::uint8_t px = v.values[static_cast<std::size_t>(b * th) * v.width + a * tw];
            EXPECT_EQ(px, a == b ? 255 : 0);
        }
    }
}

TEST(Planar, ShiftedPlaneReplicatesEdges) {
    const double plane[] = {1, 2, 3, 4, 5, 6};  // 2 x 3
    double out[6];
    planar::shifted_plane(plane, 2, 3, 0, 1, out);
    EXPECT_EQ(std::vector<double>(out, out + 6), (std::vector<double>{2, 3, 3, 5, 6, 6}));
    planar::shifted_plane(plane, 2, 3, -1, -1, out);
    EXPECT_EQ(std::vector<double>(out, out + 6), (std::vector<double>{1, 1, 2, 1, 1, 2}));
}

TEST(Planar, FieldLayoutRoundTrip) {
    const KernelField f = random_field(3, 5, 3, 2);
    EXPECT_EQ(planar::field_from_planar(planar::field_to_planar(f), 3, 5, 3), f);
}
