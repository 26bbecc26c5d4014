#pragma once

#include <random>
#include <vector>

#include "kwb/color.hpp"
#include "kwb/synth.hpp"

namespace kwb::net {

// Image plus per-region ground truth at any resolution.
struct SourceSample {
    LinearImage image;
    std::vector<IlluminantRegion> regions;
};

struct TrainingSample {
    LinearImage input;
    LinearImage target;  // input corrected region by region with ground-truth gains
    std::vector<IlluminantRegion> regions;
};

// Input resized to `size` and its corrected target; no augmentation.
TrainingSample make_sample(const SourceSample& source, int size);

struct AugmentConfig {
    double crop_min = 0.1;  // crop side as a fraction of the shorter edge
    double crop_max = 0.9;
    double max_rotation_deg = 60.0;
    double flip_probability = 0.5;
    double concat_probability = 0.3;
    int min_crop = 8;

    void validate() const;
};

struct ViewParams {
    int crop_side = 0;
    int crop_y = 0;
    int crop_x = 0;
    double angle_deg = 0.0;
    bool flip_lr = false;
    bool flip_tb = false;
};

struct AugmentParams {
    ViewParams a;
    bool concat = false;
    ViewParams b;
    int split_row = 0;  // rows [0, split) from a, [split, size) from b
};

ViewParams sample_view(std::mt19937_64& rng, int height, int width, const AugmentConfig& config);
AugmentParams sample_augment(std::mt19937_64& rng, const SourceSample& a, const SourceSample& b, int size,
                             const AugmentConfig& config);

// Crop, rotate (bilinear, largest inscribed square), flip and area-resize one
// source. Region masks follow the same geometry with nearest sampling.
SourceSample apply_view(const SourceSample& source, const ViewParams& view, int size);
TrainingSample apply_augment(const SourceSample& a, const SourceSample& b, const AugmentParams& params, int size);

TrainingSample augment(const SourceSample& a, const SourceSample& b, std::mt19937_64& rng, int size,
                       const AugmentConfig& config = {});

}  // namespace kwb::net
