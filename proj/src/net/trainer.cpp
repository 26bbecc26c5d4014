#include "kwb/net/trainer.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <thread>

#include "../binary_io.hpp"
#include "kwb/confidence.hpp"
#include "kwb/image_io.hpp"
#include "kwb/resample.hpp"
#include "kwb/rng.hpp"

namespace kwb::net {

Checkpoint new_checkpoint(const NetworkSpec& spec, const TrainConfig& train, bool identity) {
    train.validate();
    Checkpoint c;
    c.net = identity ? Network::identity_init(spec) : Network(spec);
    c.adam = Adam(c.net.param_count());
    c.train = train;
    return c;
}

std::string encode_checkpoint(const Checkpoint& c) {
    const NetworkSpec& s = c.net.spec();
    std::string out = "KWB1";
    binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.input_size));
    binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.kernel_order));
    binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.stages()));
    for (int w : s.encoder_widths) binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    binary::put_le<std::uint64_t>(out, s.seed);
    binary::put_le<std::uint64_t>(out, c.net.param_count());
    for (double v : c.net.params()) binary::put_f32(out, v);
    for (double v : c.adam.m()) binary::put_f32(out, v);
    for (double v : c.adam.v()) binary::put_f32(out, v);
    return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
    binary::Reader r(bytes);
    r.expect_magic("KWB1");
    NetworkSpec s;
    s.input_size = static_cast<int>(r.get<std::uint32_t>());
    s.kernel_order = static_cast<int>(r.get<std::uint32_t>());
    const std::uint32_t stages = r.get<std::uint32_t>();
    if (stages == 0 || stages > 16) throw FormatError("checkpoint: bad stage count");
    s.encoder_widths.clear();
    for (std::uint32_t i = 0; i < stages; ++i) s.encoder_widths.push_back(static_cast<int>(r.get<std::uint32_t>()));
    s.seed = r.get<std::uint64_t>();
    const std::uint64_t n = r.get<std::uint64_t>();
    try {
        s.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
    Checkpoint c;
    c.net = Network(s);
    if (n != c.net.param_count()) throw FormatError("checkpoint: parameter count does not match the spec");
    if (r.remaining() != 3 * n * 4) throw FormatError("checkpoint: payload size mismatch");
    c.adam = Adam(n);
    for (auto& v : c.net.params()) v = r.get_f32();
    for (auto& v : c.adam.m()) v = r.get_f32();
    for (auto& v : c.adam.v()) v = r.get_f32();
    return c;
}

std::string checkpoint_sidecar(const Checkpoint& c) {
    const NetworkSpec& s = c.net.spec();
    const TrainConfig& t = c.train;
    nlohmann::ordered_json j;
    j["step"] = c.step;
    j["seed"] = s.seed;
    j["network"] = {{"input_size", s.input_size},
                    {"kernel_order", s.kernel_order},
                    {"encoder_widths", s.encoder_widths}};
    j["train"] = {{"batch_size", t.batch_size},   {"learning_rate", t.learning_rate}, {"lambda1", t.lambda1},
                  {"lambda2", t.lambda2},         {"lambda3", t.lambda3},             {"max_steps", t.max_steps},
                  {"adam_beta1", t.adam_beta1},   {"adam_beta2", t.adam_beta2},       {"adam_eps", t.adam_eps}};
    j["confidence_training_mean"] = c.confidence_mean;
    return j.dump(2) + "\n";
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    write_text_file(path, encode_checkpoint(c));
    write_text_file(path.string() + ".json", checkpoint_sidecar(c));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    Checkpoint c = decode_checkpoint(read_text_file(path));
    const std::filesystem::path side = path.string() + ".json";
    if (std::filesystem::exists(side)) {
        try {
            const auto j = nlohmann::json::parse(read_text_file(side));
            c.step = j.value("step", 0L);
            c.confidence_mean = j.value("confidence_training_mean", 0.0);
            if (j.contains("train")) {
                const auto& t = j["train"];
                c.train.batch_size = t.value("batch_size", c.train.batch_size);
                c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
                c.train.lambda1 = t.value("lambda1", c.train.lambda1);
                c.train.lambda2 = t.value("lambda2", c.train.lambda2);
                c.train.lambda3 = t.value("lambda3", c.train.lambda3);
                c.train.max_steps = t.value("max_steps", c.train.max_steps);
                c.train.adam_beta1 = t.value("adam_beta1", c.train.adam_beta1);
                c.train.adam_beta2 = t.value("adam_beta2", c.train.adam_beta2);
                c.train.adam_eps = t.value("adam_eps", c.train.adam_eps);
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("checkpoint sidecar: ") + e.what());
        }
    }
    return c;
}

LossTerms sample_gradient(const Network& net, const TrainingSample& sample, const TrainConfig& config,
                          std::vector<double>& grad) {
    const int s = net.spec().input_size;
    if (sample.input.height() != s || sample.input.width() != s) throw InvalidArgument("sample size mismatch");
    Activations acts;
    const auto x = to_planar(sample.input);
    net.forward(x, acts);
    std::vector<double> gfield;
    const LossTerms t = loss_planar(x, acts.field, to_planar(sample.target), s, s, net.spec().kernel_order, config,
                                    &gfield);
    net.backward(acts, gfield, grad);
    return t;
}

LossTerms train_step(Checkpoint& c, const std::vector<TrainingSample>& batch, int jobs) {
    if (batch.empty()) throw InvalidArgument("empty batch");
    const std::size_t n = c.net.param_count();
    std::vector<std::vector<double>> grads(batch.size(), std::vector<double>(n, 0.0));
    std::vector<LossTerms> terms(batch.size());
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(batch.size())));
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t i = first; i < batch.size(); i += stride) {
            terms[i] = sample_gradient(c.net, batch[i], c.train, grads[i]);
        }
    };
    if (workers == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work, static_cast<std::size_t>(t), workers);
        for (auto& th : pool) th.join();
    }
    std::vector<double> grad(n, 0.0);
    LossTerms mean;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        for (std::size_t j = 0; j < n; ++j) grad[j] += grads[i][j];
        mean.l1 += terms[i].l1;
        mean.l2 += terms[i].l2;
        mean.penalty += terms[i].penalty;
        mean.total += terms[i].total;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv;
    mean.l1 *= inv;
    mean.l2 *= inv;
    mean.penalty *= inv;
    mean.total *= inv;
    c.step += 1;
    c.adam.step(c.net.params(), grad, c.train, c.step);
    return mean;
}

void train(Checkpoint& c, const std::vector<SourceSample>& data, const TrainOptions& opt, std::uint64_t seed) {
    if (data.empty()) throw InvalidArgument("training set is empty");
    c.train.validate();
    const int size = c.net.spec().input_size;
    auto rng = substream(seed, "train/batch");
    std::vector<TrainingSample> plain;
    if (!opt.use_augment) {
        for (const auto& s : data) plain.push_back(make_sample(s, size));
    }
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    if (opt.log && c.step == 0) *opt.log << "step,l1,l2,penalty,total\n";
    while (c.step < c.train.max_steps) {
        std::vector<TrainingSample> batch;
        batch.reserve(c.train.batch_size);
        for (int b = 0; b < c.train.batch_size; ++b) {
            const std::size_t ia = pick(rng);
            if (!opt.use_augment) {
                batch.push_back(plain[ia]);
                continue;
            }
            const std::size_t ib = pick(rng);
            batch.push_back(augment(data[ia], data[ib], rng, size, opt.augment));
        }
        const LossTerms t = train_step(c, batch, opt.jobs);
        if (opt.log) {
            char line[160];
            std::snprintf(line, sizeof(line), "%ld,%.9g,%.9g,%.9g,%.9g\n", c.step, t.l1, t.l2, t.penalty, t.total);
            *opt.log << line;
        }
        if (opt.on_step) opt.on_step(c.step, t);
        if (!opt.checkpoint_path.empty() && opt.checkpoint_every > 0 && c.step % opt.checkpoint_every == 0) {
            write_checkpoint(opt.checkpoint_path, c);
        }
    }
    c.confidence_mean = confidence_training_mean(c.net, data);
    if (!opt.checkpoint_path.empty()) write_checkpoint(opt.checkpoint_path, c);
}

double confidence_training_mean(const Network& net, const std::vector<SourceSample>& data) {
    if (data.empty()) return 0.0;
    const int size = net.spec().input_size;
    double sum = 0.0;
    for (const auto& s : data) {
        const LinearImage x = resize_area(s.image, size, size);
        sum += rb_confidence(channel_confidence(x, net.forward(x)));
    }
    return sum / static_cast<double>(data.size());
}

}  // namespace kwb::net
