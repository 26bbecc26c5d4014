#pragma once

#include <cstdint>
#include <vector>

#include "kwb/net/config.hpp"
#include "kwb/net/network.hpp"
#include "kwb/net/trainer.hpp"

namespace kwb::net {

struct GradcheckConfig {
    NetworkSpec spec{16, 1, {4, 8}, 0};
    TrainConfig train;
    int samples = 100;      // parameters compared
    double step = 1e-3;     // central-difference h
    double tolerance = 1e-4;  // max relative error
    double input_offset = 1e-3;  // added to every input value
    std::uint64_t seed = 0;
    // Evaluate at a point near the identity field: head biases set to the
    // identity kernel and head weights scaled by head_scale.
    bool identity_head = true;
    double head_scale = 0.1;
};

struct GradcheckEntry {
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradcheckResult {
    std::vector<GradcheckEntry> entries;
    double max_rel_error = 0.0;
    int skipped = 0;  // draws rejected because theta +- h crosses a kink
    bool passed = false;
};

// |a - n| / max(|a|, |n|, 1e-6).
double relative_error(double analytic, double numeric);

// Total loss of one sample plus the on/off pattern of every kink it passes
// through (ReLU gates, the clamp before the transfer, the transfer's branch,
// L1 signs of gradient differences and of cross-channel weights).
struct LossProbe {
    double loss = 0.0;
    std::vector<unsigned char> signature;
};
LossProbe probe_loss(const Network& net, const TrainingSample& sample, const TrainConfig& config);

// Two-illuminant synthetic sample at spec.input_size, analytic
// gradient against central differences on randomly drawn parameters. Draws
// whose perturbations change the kink signature are skipped and redrawn.
GradcheckResult gradcheck(const GradcheckConfig& config);

}  // namespace kwb::net
