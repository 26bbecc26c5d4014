#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "kwb/net/adam.hpp"
#include "kwb/net/augment.hpp"
#include "kwb/net/loss.hpp"
#include "kwb/net/network.hpp"

namespace kwb::net {

struct Checkpoint {
    Network net;
    Adam adam;
    long step = 0;
    TrainConfig train;
    double confidence_mean = 0.0;  // mean R/B confidence over the training set
};

Checkpoint new_checkpoint(const NetworkSpec& spec, const TrainConfig& train, bool identity = false);

// "KWB1", spec integers (input_size, kernel_order, stage count, widths...),
// seed u64, parameter count u64, then parameters, Adam m and Adam v as f32 LE.
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);
// JSON sidecar: step, seed, spec, train config, confidence mean.
std::string checkpoint_sidecar(const Checkpoint& ckpt);

// Writes `path` and `path` + ".json".
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Reads `path` and, when present, its sidecar.
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Loss of one sample; adds dL/dparams into `grad`.
LossTerms sample_gradient(const Network& net, const TrainingSample& sample, const TrainConfig& config,
                          std::vector<double>& grad);

// Mean gradient over the batch followed by one Adam step (index ckpt.step + 1).
// Per-sample gradients are reduced in batch order, so results do not depend on `jobs`.
LossTerms train_step(Checkpoint& ckpt, const std::vector<TrainingSample>& batch, int jobs = 1);

struct TrainOptions {
    AugmentConfig augment;
    bool use_augment = true;
    int checkpoint_every = 0;  // 0: only at the end
    std::filesystem::path checkpoint_path;  // empty: never written
    std::ostream* log = nullptr;  // CSV step,l1,l2,penalty,total
    int jobs = 1;
    std::function<void(long, const LossTerms&)> on_step;
};

// Runs ckpt.train.max_steps - ckpt.step further steps. Batches draw source
// pairs and augmentation from the "train/batch" substream of `seed`.
void train(Checkpoint& ckpt, const std::vector<SourceSample>& data, const TrainOptions& options,
           std::uint64_t seed);

// Mean R/B confidence statistic of the network over the sources at model resolution.
double confidence_training_mean(const Network& net, const std::vector<SourceSample>& data);

}  // namespace kwb::net
