#pragma once

#include <cstdint>
#include <vector>

namespace kwb::net {

struct NetworkSpec {
    int input_size = 64;
    int kernel_order = 1;  // K, 1 or 3
    std::vector<int> encoder_widths{16, 32, 64};
    std::uint64_t seed = 0;

    int stages() const { return static_cast<int>(encoder_widths.size()); }
    int output_channels() const { return 9 * kernel_order * kernel_order; }
    void validate() const;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct TrainConfig {
    int batch_size = 32;
    double learning_rate = 1e-4;
    double lambda1 = 1.0;  // gradient L1
    double lambda2 = 1.0;  // intensity L2
    double lambda3 = 0.01;  // cross-channel penalty
    int max_steps = 2000;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

}  // namespace kwb::net
