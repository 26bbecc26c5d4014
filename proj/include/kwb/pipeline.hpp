#pragma once

#include "kwb/clustering.hpp"
#include "kwb/confidence.hpp"
#include "kwb/kernel_field.hpp"
#include "kwb/net/network.hpp"

namespace kwb {

struct PipelineConfig {
    ClusterConfig cluster;
    LocalFitConfig fit;
    double dark_threshold = kDefaultDarkThreshold;
};

struct PipelineResult {
    LinearImage model_input;
    KernelField field;
    ReferenceImage reference;
    GainMap map;
    ClusterResult clusters;
    ConfidenceMap confidence;
    IlluminantEstimate estimate;  // mask at model resolution
};

// Kernel application, illumination map, clustering, local fitting and the
// confidence report for an input already at the field's resolution.
PipelineResult estimate_from_field(const LinearImage& model_input, const KernelField& field, double training_mean,
                                   const PipelineConfig& config);

// Area-resizes `image` to the network's input size, runs the network and then
// estimate_from_field.
PipelineResult run_pipeline(const net::Network& net, const LinearImage& image, double training_mean,
                            const PipelineConfig& config);

// Applies each pixel's region gains (regions looked up at the image's scale).
LinearImage correct_image(const LinearImage& image, const IlluminantEstimate& estimate);

}  // namespace kwb
