#include "kwb/net/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "kwb/resample.hpp"
#include "kwb/rng.hpp"
#include "kwb/synth.hpp"

namespace kwb::net {

double relative_error(double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

LossProbe probe_loss(const Network& net, const TrainingSample& sample, const TrainConfig& config) {
    const int s = net.spec().input_size;
    Activations acts;
    const auto x = to_planar(sample.input);
    net.forward(x, acts);
    LossKinks kinks;
    const LossTerms t =
        loss_planar(x, acts.field, to_planar(sample.target), s, s, net.spec().kernel_order, config, nullptr, &kinks);
    LossProbe probe{t.total, {}};
    for (const auto* group : {&acts.enc_out, &acts.dec_out}) {
        for (const auto& v : *group) {
            for (double a : v) probe.signature.push_back(a > 0.0 ? 1 : 0);
        }
    }
    probe.signature.insert(probe.signature.end(), kinks.bits.begin(), kinks.bits.end());
    return probe;
}

GradcheckResult gradcheck(const GradcheckConfig& cfg) {
    NetworkSpec spec = cfg.spec;
    spec.seed = cfg.seed;
    Network net = cfg.identity_head ? Network::identity_init(spec) : Network(spec);
    if (cfg.identity_head) {
        // Small random head weights on top of the identity bias.
        const Network random(spec);
        const ConvLayer& h = net.head();
        for (std::size_t i = 0; i < h.weight_count(); ++i) {
            net.params()[h.weight_offset + i] = cfg.head_scale * random.params()[h.weight_offset + i];
        }
    }
    const int size = spec.input_size;

    SceneSpec scene;
    scene.height = scene.width = size;
    scene.illuminants = {IlluminantVector(0.80, 0.30, 0.52), IlluminantVector(0.38, 0.26, 0.89)};
    scene.texture_seed = substream_seed(cfg.seed, "gradcheck/scene");
    const SyntheticScene synth = synth_scene(scene);
    TrainingSample sample;
    sample.input = synth.image;
    for (double& v : sample.input.data()) v += cfg.input_offset;
    sample.regions = synth.regions;
    sample.target = corrected_target(sample.input, sample.regions);

    std::vector<double> grad(net.param_count(), 0.0);
    sample_gradient(net, sample, cfg.train, grad);
    const LossProbe base = probe_loss(net, sample, cfg.train);

    GradcheckResult result;
    auto rng = substream(cfg.seed, "gradcheck/params");
    std::uniform_int_distribution<std::size_t> pick(0, net.param_count() - 1);
    const int max_draws = 50 * cfg.samples;
    int draws = 0;
    while (static_cast<int>(result.entries.size()) < cfg.samples && draws < max_draws) {
        ++draws;
        const std::size_t i = pick(rng);
        const double theta = net.params()[i];
        net.params()[i] = theta + cfg.step;
        const LossProbe plus = probe_loss(net, sample, cfg.train);
        net.params()[i] = theta - cfg.step;
        const LossProbe minus = probe_loss(net, sample, cfg.train);
        net.params()[i] = theta;
        if (plus.signature != base.signature || minus.signature != base.signature) {
            ++result.skipped;
            continue;
        }
        const double numeric = (plus.loss - minus.loss) / (2.0 * cfg.step);
        const GradcheckEntry e{i, grad[i], numeric, relative_error(grad[i], numeric)};
        result.max_rel_error = std::max(result.max_rel_error, e.rel_error);
        result.entries.push_back(e);
    }
    result.passed = static_cast<int>(result.entries.size()) >= cfg.samples && result.max_rel_error <= cfg.tolerance;
    return result;
}

}  // namespace kwb::net
