#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "kwb/net/augment.hpp"
#include "kwb/net/gradcheck.hpp"
#include "kwb/net/trainer.hpp"
#include "kwb/resample.hpp"
#include "kwb/rng.hpp"
#include "kwb/synth.hpp"

using namespace kwb;
using namespace kwb::net;

namespace {

SourceSample synthetic_source(int size, std::uint64_t seed, std::vector<IlluminantVector> lights) {
    SceneSpec spec;
    spec.height = spec.width = size;
    spec.texture_seed = seed;
    spec.illuminants = std::move(lights);
    const SyntheticScene s = synth_scene(spec);
    return {s.image, s.regions};
}

SourceSample uniform_source(int h, int w, const IlluminantVector& light) {
    LinearImage img(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) img.set_pixel(y, x, light.rgb());
    }
    return {img, {{light, std::vector<std::uint8_t>(img.pixel_count(), 1)}}};
}

const IlluminantVector kTop(0.80, 0.30, 0.52);
const IlluminantVector kBottom(0.38, 0.26, 0.89);

}  // namespace

TEST(Augment, IdentityViewIsPureResize) {
    const SourceSample src = synthetic_source(48, 1, {kTop});
    const SourceSample v = apply_view(src, ViewParams{48, 0, 0, 0.0, false, false}, 16);
    EXPECT_EQ(v.image, resize_area(src.image, 16, 16));
    ASSERT_EQ(v.regions.size(), 1u);
    EXPECT_EQ(v.regions[0].mask, std::vector<std::uint8_t>(256, 1));
    const TrainingSample s = make_sample(src, 16);
    EXPECT_EQ(s.input, v.image);
    EXPECT_EQ(s.target, corrected_target(s.input, s.regions));
}

TEST(Augment, DoubleFlipRestoresOrientation) {
    const SourceSample src = synthetic_source(16, 2, {kTop, kBottom});
    const ViewParams lr{16, 0, 0, 0.0, true, false};
    const SourceSample once = apply_view(src, lr, 16);
    EXPECT_NE(once.image, src.image);
    const SourceSample twice = apply_view(once, lr, 16);
    EXPECT_EQ(twice.image, src.image);
    const ViewParams tb{16, 0, 0, 0.0, false, true};
    const SourceSample flipped = apply_view(src, tb, 16);
    // Top-down flip moves the first region's rows to the bottom.
    EXPECT_EQ(flipped.regions[0].mask[0], 0);
    EXPECT_EQ(flipped.regions[0].mask[255], 1);
    EXPECT_EQ(apply_view(flipped, tb, 16).image, src.image);
}

TEST(Augment, ConcatOfTwoUniformImages) {
    const SourceSample a = uniform_source(20, 20, kTop);
    const SourceSample b = uniform_source(30, 30, kBottom);
    AugmentParams p;
    p.a = ViewParams{20, 0, 0, 0.0, false, false};
    p.concat = true;
    p.b = ViewParams{30, 0, 0, 0.0, false, false};
    p.split_row = 6;
    const TrainingSample s = apply_augment(a, b, p, 16);
    ASSERT_EQ(s.regions.size(), 2u);
    const GainTriple ga = gains_from_illuminant(kTop), gb = gains_from_illuminant(kBottom);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            const bool top = y < 6;
            const std::size_t i = static_cast<std::size_t>(y) * 16 + x;
            EXPECT_EQ(s.regions[0].mask[i], top ? 1 : 0);
            EXPECT_EQ(s.regions[1].mask[i], top ? 0 : 1);
            const IlluminantVector& l = top ? kTop : kBottom;
            const GainTriple& g = top ? ga : gb;
            for (int c = 0; c < 3; ++c) {
                EXPECT_NEAR(s.input.at(y, x, c), l[c], 1e-15);
                EXPECT_NEAR(s.target.at(y, x, c), l[c] * g[c], 1e-15);
            }
        }
    }
    EXPECT_EQ(s.regions[0].illuminant, kTop);
    EXPECT_EQ(s.regions[1].illuminant, kBottom);
}

TEST(Augment, RotationOfUniformImageStaysUniform) {
    const SourceSample a = uniform_source(40, 40, kTop);
    const SourceSample v = apply_view(a, ViewParams{30, 5, 3, 37.0, true, false}, 16);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            for (int c = 0; c < 3; ++c) EXPECT_NEAR(v.image.at(y, x, c), kTop[c], 1e-12);
        }
    }
    EXPECT_EQ(v.regions[0].mask, std::vector<std::uint8_t>(256, 1));
}

TEST(Augment, SampledParametersWithinRanges) {
    std::mt19937_64 rng(3);
    const AugmentConfig cfg;
    const SourceSample a = synthetic_source(64, 4, {kTop});
    int concat = 0, flips = 0;
    for (int i = 0; i < 2000; ++i) {
        const AugmentParams p = sample_augment(rng, a, a, 32, cfg);
        EXPECT_GE(p.a.crop_side, 8);
        EXPECT_GE(p.a.crop_side, static_cast<int>(std::floor(0.1 * 64)));
        EXPECT_LE(p.a.crop_side, static_cast<int>(std::ceil(0.9 * 64)));
        EXPECT_LE(p.a.crop_y + p.a.crop_side, 64);
        EXPECT_LE(p.a.crop_x + p.a.crop_side, 64);
        EXPECT_LE(std::abs(p.a.angle_deg), 60.0);
        if (p.concat) {
            ++concat;
            EXPECT_GE(p.split_row, 8);
            EXPECT_LE(p.split_row, 24);
        }
        flips += p.a.flip_lr;
    }
    EXPECT_NEAR(concat / 2000.0, 0.3, 0.05);
    EXPECT_NEAR(flips / 2000.0, 0.5, 0.05);
}

TEST(Augment, OutputHasModelSizeAndConsistentTarget) {
    std::mt19937_64 rng(5);
    const SourceSample a = synthetic_source(64, 6, {kTop});
    const SourceSample b = synthetic_source(48, 7, {kBottom});
    for (int i = 0; i < 40; ++i) {
        const TrainingSample s = augment(a, b, rng, 32);
        EXPECT_EQ(s.input.height(), 32);
        EXPECT_EQ(s.input.width(), 32);
        EXPECT_EQ(s.target, corrected_target(s.input, s.regions));
        std::vector<int> cover(32 * 32, 0);
        for (const auto& r : s.regions) {
            for (std::size_t p = 0; p < r.mask.size(); ++p) cover[p] += r.mask[p];
        }
        for (int c : cover) EXPECT_EQ(c, 1);
    }
}

TEST(Augment, ConfigValidation) {
    AugmentConfig c;
    c.crop_min = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = AugmentConfig{};
    c.max_rotation_deg = 95.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    std::mt19937_64 rng(1);
    EXPECT_THROW(sample_view(rng, 8, 8, AugmentConfig{}), InvalidArgument);
}

TEST(Checkpoint, EncodeDecodeRoundTrip) {
    TrainConfig tc;
    tc.batch_size = 2;
    tc.max_steps = 2;
    Checkpoint c = new_checkpoint(NetworkSpec{16, 3, {4, 8}, 77}, tc);
    // Quantize to float so the round trip is exact.
    for (double& v : c.net.params()) v = static_cast<float>(v);
    std::mt19937_64 rng(1);
    for (double& v : c.adam.m()) v = static_cast<float>(std::uniform_real_distribution<double>(-1, 1)(rng));
    for (double& v : c.adam.v()) v = static_cast<float>(std::uniform_real_distribution<double>(0, 1)(rng));
    const std::string bytes = encode_checkpoint(c);
    ASSERT_EQ(bytes.substr(0, 4), "KWB1");
    // magic, 3 u32, 2 widths, seed, count, then three f32 tensors
    EXPECT_EQ(bytes.size(), 4 + 5 * 4 + 8 + 8 + 3 * 4 * c.net.param_count());
    const Checkpoint d = decode_checkpoint(bytes);
    EXPECT_EQ(d.net.spec(), c.net.spec());
    EXPECT_EQ(d.net.params(), c.net.params());
    EXPECT_EQ(d.adam.m(), c.adam.m());
    EXPECT_EQ(d.adam.v(), c.adam.v());
    EXPECT_THROW(decode_checkpoint("KWB2" + bytes.substr(4)), FormatError);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 4)), FormatError);
}

TEST(Checkpoint, FileAndSidecar) {
    const auto dir = std::filesystem::temp_directory_path() / "kwb_test_ckpt";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    Checkpoint c = new_checkpoint(NetworkSpec{16, 1, {4, 8}, 5}, TrainConfig{});
    c.step = 17;
    c.confidence_mean = 3.25;
    write_checkpoint(dir / "m.kwb", c);
    ASSERT_TRUE(std::filesystem::exists(dir / "m.kwb.json"));
    const Checkpoint d = read_checkpoint(dir / "m.kwb");
    EXPECT_EQ(d.step, 17);
    EXPECT_EQ(d.confidence_mean, 3.25);
    EXPECT_EQ(d.train.learning_rate, c.train.learning_rate);
    EXPECT_EQ(d.net.spec().seed, 5u);
}

TEST(Training, ZeroStepsKeepsInitialization) {
    TrainConfig tc;
    tc.max_steps = 0;
    Checkpoint c = new_checkpoint(NetworkSpec{16, 1, {4, 8}, 9}, tc);
    const auto init = c.net.params();
    train(c, {synthetic_source(16, 1, {kTop})}, TrainOptions{}, 0);
    EXPECT_EQ(c.net.params(), init);
    EXPECT_EQ(c.step, 0);
}

TEST(Training, BatchReductionIndependentOfJobs) {
    TrainConfig tc;
    tc.batch_size = 4;
    tc.learning_rate = 1e-3;
    std::vector<TrainingSample> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(make_sample(synthetic_source(16, 10 + i, {kTop}), 16));
    Checkpoint a = new_checkpoint(NetworkSpec{16, 1, {4, 8}, 3}, tc);
    Checkpoint b = a;
    for (int s = 0; s < 3; ++s) {
        train_step(a, batch, 1);
        train_step(b, batch, 3);
    }
    EXPECT_EQ(a.net.params(), b.net.params());
    EXPECT_EQ(a.adam.v(), b.adam.v());
}

TEST(Training, SeededRunsAreBitIdenticalAndLogged) {
    TrainConfig tc;
    tc.batch_size = 2;
    tc.max_steps = 5;
    tc.learning_rate = 1e-3;
    std::vector<SourceSample> data{synthetic_source(32, 1, {kTop}), synthetic_source(32, 2, {kBottom})};
    auto run = [&](std::uint64_t seed, std::string& log) {
        Checkpoint c = new_checkpoint(NetworkSpec{16, 1, {4, 8}, seed}, tc);
        std::ostringstream out;
        TrainOptions opt;
        opt.log = &out;
        train(c, data, opt, seed);
        log = out.str();
        return encode_checkpoint(c);
    };
    std::string la, lb, lc;
    const std::string a = run(4, la), b = run(4, lb), c = run(5, lc);
    EXPECT_EQ(a, b);
    EXPECT_EQ(la, lb);
    EXPECT_NE(a, c);
    EXPECT_EQ(la.substr(0, la.find('\n')), "step,l1,l2,penalty,total");
    EXPECT_EQ(std::count(la.begin(), la.end(), '\n'), 6);
}

TEST(Training, SingleSampleOverfit) {
    TrainConfig tc;
    tc.batch_size = 1;
    tc.max_steps = 500;
    // Random heads can start with a channel negative everywhere, where the clamped loss has no gradient.
    Checkpoint c = new_checkpoint(NetworkSpec{32, 1, {16, 32, 64}, 21}, tc, true);
    const SourceSample src = synthetic_source(32, 22, {kTop});
    const TrainingSample sample = make_sample(src, 32);
    const double initial = loss_terms(sample.input, sample.target, c.net.forward(sample.input), tc).total;
    TrainOptions opt;
    opt.use_augment = false;
    train(c, {src}, opt, 23);
    const KernelField f = c.net.forward(sample.input);
    const double final_loss = loss_terms(sample.input, sample.target, f, tc).total;
    EXPECT_LE(final_loss, 0.1 * initial) << "initial " << initial << " final " << final_loss;
    double diag = 0.0, cross = 0.0;
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
            for (int co = 0; co < 3; ++co) {
                for (int ci = 0; ci < 3; ++ci) (co == ci ? diag : cross) += std::abs(f.at(y, x, co, ci, 0, 0));
            }
        }
    }
    EXPECT_LT(cross / 6.0, diag / 3.0);
}

TEST(Gradcheck, DefaultToyConfigurationPasses) {
    const GradcheckResult r = gradcheck(GradcheckConfig{});
    EXPECT_TRUE(r.passed) << "max relative error " << r.max_rel_error;
    EXPECT_EQ(r.entries.size(), 100u);
    EXPECT_LE(r.max_rel_error, 1e-4);
}

TEST(Gradcheck, KernelOrderThreePasses) {
    GradcheckConfig cfg;
    cfg.spec.kernel_order = 3;
    cfg.samples = 50;
    const GradcheckResult r = gradcheck(cfg);
    EXPECT_TRUE(r.passed) << "max relative error " << r.max_rel_error;
}

TEST(Gradcheck, RelativeErrorDefinition) {
    EXPECT_EQ(relative_error(1.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(relative_error(0.0, 1e-9), 1e-9 / 1e-6);
}

TEST(Training, ConfidenceMeanOfIdentityNetwork) {
    const Network net = Network::identity_init(NetworkSpec{16, 1, {4, 8}, 0});
    // Identity fields give confidence near 1 in every channel: the balanced R/B case.
    const double m = confidence_training_mean(net, {synthetic_source(16, 3, {kTop})});
    EXPECT_NEAR(m, 2.0 / (1e-6 * std::sqrt(2.0)), 0.01 * m);
}
