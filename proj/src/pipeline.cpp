#include "kwb/pipeline.hpp"

#include "kwb/resample.hpp"

namespace kwb {

PipelineResult estimate_from_field(const LinearImage& model_input, const KernelField& field, double training_mean,
                                   const PipelineConfig& config) {
    PipelineResult r;
    r.model_input = model_input;
    r.field = field;
    r.reference = apply_kernels(model_input, field);
    r.map = illumination_vector_map(model_input, r.reference, config.dark_threshold);
    LocalFitConfig fit = config.fit;
    fit.fit.dark_threshold = config.dark_threshold;
    fit.merge_threshold = config.cluster.merge_threshold;
    if (r.map.valid_count() >= static_cast<std::size_t>(config.cluster.n_clusters)) {
        r.clusters = spectral_cluster(r.map, config.cluster);
        r.estimate = fit_local(model_input, r.reference, r.clusters.mask, fit);
    } else {
        // Too few usable pixels to cluster: one region over whatever can be fitted.
        r.clusters.mask.height = model_input.height();
        r.clusters.mask.width = model_input.width();
        r.clusters.mask.n_clusters = 1;
        r.clusters.mask.labels.assign(model_input.pixel_count(), 0);
        r.clusters.merged = true;
        r.estimate = fit_local(model_input, r.reference, r.clusters.mask, fit);
    }
    r.confidence = channel_confidence(model_input, field);
    r.estimate.confidence = confidence_report(r.confidence, training_mean);
    return r;
}

PipelineResult run_pipeline(const net::Network& net, const LinearImage& image, double training_mean,
                            const PipelineConfig& config) {
    const int s = net.spec().input_size;
    const LinearImage x = resize_area(image, s, s);
    return estimate_from_field(x, net.forward(x), training_mean, config);
}

LinearImage correct_image(const LinearImage& image, const IlluminantEstimate& estimate) {
    LinearImage out = image;
    const int h = image.height(), w = image.width();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const GainTriple& g = estimate.region_at(y, x, h, w).gains;
            for (int c = 0; c < 3; ++c) out.at(y, x, c) *= g[c];
        }
    }
    return out;
}

}  // namespace kwb
