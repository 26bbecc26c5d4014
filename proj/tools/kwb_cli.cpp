#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kwb/classical.hpp"
#include "kwb/clustering.hpp"
#include "kwb/eval.hpp"
#include "kwb/image_io.hpp"
#include "kwb/net/gradcheck.hpp"
#include "kwb/net/trainer.hpp"
#include "kwb/pipeline.hpp"
#include "kwb/report.hpp"
#include "kwb/resample.hpp"
#include "kwb/rng.hpp"
#include "kwb/synth.hpp"

namespace fs = std::filesystem;
using namespace kwb;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct Globals {
    std::uint64_t seed = 0;
    std::string config;
    std::string out = ".";
    int jobs = 1;
};

fs::path out_path(const Globals& g, const std::string& name) {
    fs::create_directories(g.out);
    return fs::path(g.out) / name;
}

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

Rgb parse_rgb(const std::string& s) {
    Rgb v{};
    char sep1 = 0, sep2 = 0;
    std::istringstream in(s);
    if (!(in >> v[0] >> sep1 >> v[1] >> sep2 >> v[2]) || sep1 != ',' || sep2 != ',') {
        throw InvalidArgument("expected r,g,b but got '" + s + "'");
    }
    return v;
}

std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> v;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) v.push_back(std::stoi(item));
    if (v.empty()) throw InvalidArgument("expected a comma-separated integer list");
    return v;
}

// Fills options that were not given on the command line from the JSON config:
// top-level keys for global flags, a per-subcommand object for the rest. Keys
// are the long flag names without leading dashes.
void apply_config(CLI::App& app, const Json& j) {
    for (CLI::Option* opt : app.get_options()) {
        if (opt->count() > 0 || opt->get_lnames().empty()) continue;
        const std::string key = opt->get_lnames().front();
        if (!j.contains(key) || key == "config" || key == "help") continue;
        const auto& v = j[key];
        std::vector<std::string> values;
        if (v.is_array()) {
            for (const auto& e : v) values.push_back(e.is_string() ? e.get<std::string>() : e.dump());
        } else {
            values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
        for (const auto& s : values) opt->add_result(s);
        opt->run_callback();
    }
    for (CLI::App* sub : app.get_subcommands()) {
        if (j.contains(sub->get_name()) && j[sub->get_name()].is_object()) apply_config(*sub, j[sub->get_name()]);
    }
}

EstimatorConfig classical_config(const std::string& method, double p, double sigma, double saturation) {
    const auto m = parse_classical_method(method);
    if (!m) throw InvalidArgument("unknown method '" + method + "'");
    EstimatorConfig cfg{*m, p, sigma, saturation};
    cfg.validate();
    return cfg;
}

bool is_classical(const std::string& method) { return parse_classical_method(method).has_value(); }

struct PipelineOptions {
    int n_clusters = 2;
    double rbf_sigma = 0.1;
    int max_nodes = 4096;
    int restarts = 4;
    double merge_threshold = 2.0;
    double dark_threshold = kDefaultDarkThreshold;

    PipelineConfig make(std::uint64_t seed) const {
        PipelineConfig c;
        c.cluster.n_clusters = n_clusters;
        c.cluster.rbf_sigma = rbf_sigma;
        c.cluster.max_nodes = max_nodes;
        c.cluster.kmeans_restarts = restarts;
        c.cluster.merge_threshold = merge_threshold;
        c.cluster.seed = substream_seed(seed, "cluster");
        c.dark_threshold = dark_threshold;
        return c;
    }
};

void add_pipeline_options(CLI::App* cmd, PipelineOptions& o) {
    cmd->add_option("--n-clusters", o.n_clusters, "Clusters for the illumination map")->capture_default_str();
    cmd->add_option("--rbf-sigma", o.rbf_sigma, "RBF sigma in radians")->capture_default_str();
    cmd->add_option("--max-nodes", o.max_nodes, "Node cap for the affinity graph")->capture_default_str();
    cmd->add_option("--kmeans-restarts", o.restarts, "k-means restarts")->capture_default_str();
    cmd->add_option("--merge-threshold", o.merge_threshold, "Single-mode merge angle in degrees")
        ->capture_default_str();
    cmd->add_option("--dark-threshold", o.dark_threshold, "Dark-pixel cutoff")->capture_default_str();
}

struct ClassicalOptions {
    double minkowski_p = 6.0;
    double sigma = 1.0;
    double saturation = 0.98;
};

void add_classical_options(CLI::App* cmd, ClassicalOptions& o) {
    cmd->add_option("--minkowski-p", o.minkowski_p, "Minkowski norm for shades_of_gray / gray_edge")
        ->capture_default_str();
    cmd->add_option("--smoothing-sigma", o.sigma, "Gaussian sigma for gray_edge")->capture_default_str();
    cmd->add_option("--saturation", o.saturation, "Saturation threshold as a fraction of the image max")
        ->capture_default_str();
}

// Dataset items from an index file, each with a single whole-image region.
std::vector<EvalItem> load_items(const DatasetIndex& index) {
    std::vector<EvalItem> items;
    for (const auto& e : index.entries) {
        IngestedImage ing = ingest(read_raw_image(e.image_path), e);
        IlluminantRegion region{e.ground_truth, std::vector<std::uint8_t>(ing.image.pixel_count(), 1)};
        for (std::size_t p = 0; p < region.mask.size(); ++p) {
            if (ing.excluded[p]) region.mask[p] = 0;
        }
        items.push_back({e.image_path.filename().string(), std::move(ing.image), {std::move(region)}, e.fold});
    }
    return items;
}

struct SynthOptions {
    int size = 64;
    std::vector<std::string> illuminants;
    double split = 0.5;
    double noise = 0.0;
    int count = 0;
    double max_ratio = 1.6;
    int n_illuminants = 1;
};

SceneSpec scene_spec(const SynthOptions& o, std::mt19937_64& rng) {
    SceneSpec s;
    s.height = s.width = o.size;
    s.split_fraction = o.split;
    s.noise_sigma = o.noise;
    s.illuminants.clear();
    if (!o.illuminants.empty()) {
        for (const auto& txt : o.illuminants) {
            const Rgb v = parse_rgb(txt);
            s.illuminants.emplace_back(v[0], v[1], v[2]);
        }
    } else {
        for (int i = 0; i < o.n_illuminants; ++i) s.illuminants.push_back(random_illuminant(rng, o.max_ratio));
    }
    s.texture_seed = rng();
    return s;
}

std::vector<EvalItem> synthetic_items(const SynthOptions& o, std::uint64_t seed, const std::string& stage) {
    auto rng = substream(seed, stage);
    std::vector<EvalItem> items;
    const int n = std::max(o.count, 1);
    const auto folds = n >= 5 ? make_folds(static_cast<std::size_t>(n), 5, substream_seed(seed, stage + "/folds"))
                              : std::vector<int>(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        const SyntheticScene scene = synth_scene(scene_spec(o, rng));
        char name[32];
        std::snprintf(name, sizeof(name), "synth_%04d", i);
        items.push_back({name, scene.image, scene.regions, folds[static_cast<std::size_t>(i)]});
    }
    return items;
}

Json scene_json(const SceneSpec& spec, const std::vector<std::string>& requested) {
    Json j;
    j["size"] = {spec.height, spec.width};
    j["split_fraction"] = spec.split_fraction;
    j["noise_sigma"] = spec.noise_sigma;
    j["texture_seed"] = spec.texture_seed;
    Json regions = Json::array();
    for (std::size_t i = 0; i < spec.illuminants.size(); ++i) {
        const auto& l = spec.illuminants[i];
        Json r;
        if (i < requested.size()) {
            const Rgb v = parse_rgb(requested[i]);
            r["illuminant"] = {v[0], v[1], v[2]};
        } else {
            r["illuminant"] = {l.r(), l.g(), l.b()};
        }
        r["normalized"] = {l.r(), l.g(), l.b()};
        const GainTriple g = gains_from_illuminant(l);
        r["gains"] = {g.r(), g.g(), g.b()};
        regions.push_back(r);
    }
    j["regions"] = regions;
    return j;
}

// ---- subcommands ----

struct EstimateArgs {
    std::string image;
    std::string method = "gray_world";
    std::string correct;
    std::string mask;
    std::string json_out;
    ClassicalOptions classical;
    PipelineOptions pipeline;
};

int cmd_estimate(const Globals& g, const EstimateArgs& a) {
    const LinearImage image = read_image(a.image);
    IlluminantEstimate est;
    Json extra;
    if (is_classical(a.method)) {
        const auto cfg = classical_config(a.method, a.classical.minkowski_p, a.classical.sigma, a.classical.saturation);
        est = single_region_estimate(estimate_classical(image, cfg));
    } else {
        const net::Checkpoint ckpt = net::read_checkpoint(a.method);
        const PipelineResult r = run_pipeline(ckpt.net, image, ckpt.confidence_mean, a.pipeline.make(g.seed));
        est = r.estimate;
        extra["merged"] = r.clusters.merged;
        if (!a.mask.empty()) {
            write_pgm8(a.mask, r.clusters.mask.height, r.clusters.mask.width, est.mask.to_gray8());
        }
    }
    Json j;
    j["method"] = a.method;
    j["image"] = fs::path(a.image).filename().string();
    j["estimate"] = to_json(est);
    if (!extra.empty()) j["clustering"] = extra;
    if (!a.correct.empty()) {
        write_image(a.correct, gamma_encode_for_display(correct_image(image, est), 1.0 / 2.2));
    }
    if (!a.json_out.empty()) write_text_file(a.json_out, j.dump(2) + "\n");
    print_json(j);
    return 0;
}

struct TrainArgs {
    std::string index;
    int synthetic = 0;
    double max_ratio = 1.6;
    std::string checkpoint;
    std::string log;
    int input_size = 64;
    int kernel_order = 1;
    std::string widths = "16,32,64";
    int batch_size = 32;
    double lr = 1e-4;
    double lambda1 = 1.0, lambda2 = 1.0, lambda3 = 0.01;
    int max_steps = 2000;
    int checkpoint_every = 0;
    bool no_augment = false;
    double concat_p = 0.3;
    std::string init = "random";
    int exclude_fold = -1;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
    std::vector<net::SourceSample> data;
    if (!a.index.empty()) {
        const DatasetIndex index = load_dataset_index(a.index, substream_seed(g.seed, "folds"));
        for (auto& item : load_items(index)) {
            if (a.exclude_fold >= 0 && item.fold == a.exclude_fold) continue;
            data.push_back({std::move(item.image), std::move(item.regions)});
        }
    } else if (a.synthetic > 0) {
        SynthOptions so;
        so.size = a.input_size;
        so.count = a.synthetic;
        so.max_ratio = a.max_ratio;
        for (auto& item : synthetic_items(so, g.seed, "synth/train")) {
            data.push_back({std::move(item.image), std::move(item.regions)});
        }
    }
    if (data.empty()) throw InvalidArgument("training set is empty (give --index or --synthetic N)");

    net::NetworkSpec spec;
    spec.input_size = a.input_size;
    spec.kernel_order = a.kernel_order;
    spec.encoder_widths = parse_ints(a.widths);
    spec.seed = g.seed;
    net::TrainConfig tc;
    tc.batch_size = a.batch_size;
    tc.learning_rate = a.lr;
    tc.lambda1 = a.lambda1;
    tc.lambda2 = a.lambda2;
    tc.lambda3 = a.lambda3;
    tc.max_steps = a.max_steps;
    if (a.init != "random" && a.init != "identity") throw InvalidArgument("--init must be random or identity");
    net::Checkpoint ckpt = net::new_checkpoint(spec, tc, a.init == "identity");

    net::TrainOptions opt;
    opt.use_augment = !a.no_augment;
    opt.augment.concat_probability = a.concat_p;
    opt.checkpoint_every = a.checkpoint_every;
    opt.checkpoint_path = a.checkpoint.empty() ? out_path(g, "model.kwb") : fs::path(a.checkpoint);
    opt.jobs = g.jobs;
    const fs::path log_path = a.log.empty() ? out_path(g, "train_log.csv") : fs::path(a.log);
    std::ofstream log(log_path, std::ios::binary);
    if (!log) throw IoError("cannot write " + log_path.string());
    opt.log = &log;
    net::train(ckpt, data, opt, g.seed);

    Json j;
    j["checkpoint"] = opt.checkpoint_path.string();
    j["log"] = log_path.string();
    j["steps"] = ckpt.step;
    j["samples"] = data.size();
    j["confidence_training_mean"] = ckpt.confidence_mean;
    print_json(j);
    return 0;
}

struct EvalArgs {
    std::string index;
    int synthetic = 0;
    int n_illuminants = 1;
    double noise = 0.0;
    int size = 64;
    std::string method = "gray_world";
    std::string errors_file;
    std::string row_stats;
    int fold = -1;
    std::string report;
    ClassicalOptions classical;
    PipelineOptions pipeline;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
    if (!a.row_stats.empty()) {
        std::vector<double> v;
        std::istringstream in(a.row_stats);
        std::string item;
        while (std::getline(in, item, ',')) v.push_back(std::stod(item));
        if (v.size() != 5) throw InvalidArgument("--row-stats needs mean,median,trimean,best25,worst25");
        ErrorStats s{v[0], v[1], v[2], v[3], v[4], summary_geometric_mean({v[0], v[1], v[2], v[3], v[4]})};
        std::cout << format_stats_table(a.method, s);
        return 0;
    }
    if (!a.errors_file.empty()) {
        std::ifstream in(a.errors_file);
        if (!in) throw IoError("cannot open " + a.errors_file);
        std::vector<double> errors;
        double e;
        while (in >> e) errors.push_back(e);
        const ErrorStats s = error_stats(errors);
        std::cout << format_stats_table(fs::path(a.errors_file).filename().string(), s);
        return 0;
    }

    std::vector<EvalItem> items;
    if (!a.index.empty()) {
        items = load_items(load_dataset_index(a.index, substream_seed(g.seed, "folds")));
    } else if (a.synthetic > 0) {
        SynthOptions so;
        so.size = a.size;
        so.count = a.synthetic;
        so.n_illuminants = a.n_illuminants;
        so.noise = a.noise;
        items = synthetic_items(so, g.seed, "synth/eval");
    }
    if (items.empty()) throw InvalidArgument("evaluation set is empty (give --index or --synthetic N)");
    if (a.fold >= 0) {
        std::vector<EvalItem> kept;
        for (auto& it : items) {
            if (it.fold == a.fold) kept.push_back(std::move(it));
        }
        items = std::move(kept);
        if (items.empty()) throw InvalidArgument("fold has no items");
    }

    Estimator estimator;
    net::Checkpoint ckpt;
    if (a.method == "oracle") {
        // Ground truth of the region covering most of the image.
        estimator = [&items](const LinearImage& img) {
            for (const auto& it : items) {
                if (&it.image == &img) {
                    IlluminantEstimate est;
                    est.mode = it.regions.size() > 1 ? IlluminantEstimate::Mode::Multi
                                                     : IlluminantEstimate::Mode::Single;
                    est.mask.height = img.height();
                    est.mask.width = img.width();
                    est.mask.n_clusters = static_cast<int>(it.regions.size());
                    est.mask.labels.assign(img.pixel_count(), kInvalidLabel);
                    for (std::size_t r = 0; r < it.regions.size(); ++r) {
                        std::size_t n = 0;
                        for (std::size_t p = 0; p < img.pixel_count(); ++p) {
                            if (it.regions[r].mask[p]) {
                                est.mask.labels[p] = static_cast<int>(r);
                                ++n;
                            }
                        }
                        const auto& l = it.regions[r].illuminant;
                        est.regions.push_back({static_cast<int>(r), gains_from_illuminant(l), l, n});
                    }
                    return est;
                }
            }
            throw Error("oracle: unknown image");
        };
    } else if (is_classical(a.method)) {
        const auto cfg = classical_config(a.method, a.classical.minkowski_p, a.classical.sigma, a.classical.saturation);
        estimator = [cfg](const LinearImage& img) { return single_region_estimate(estimate_classical(img, cfg)); };
    } else {
        ckpt = net::read_checkpoint(a.method);
        const PipelineConfig pc = a.pipeline.make(g.seed);
        estimator = [&ckpt, pc](const LinearImage& img) {
            return run_pipeline(ckpt.net, img, ckpt.confidence_mean, pc).estimate;
        };
    }
    const EvalReport report = evaluate(estimator, items, 5, g.jobs);
    std::cout << format_stats_table(a.method, report.pooled);
    Json j = to_json(report);
    j["method"] = a.method;
    const fs::path report_path = a.report.empty() ? out_path(g, "eval_report.json") : fs::path(a.report);
    write_text_file(report_path, j.dump(2) + "\n");
    return 0;
}

struct SynthArgs {
    SynthOptions opt;
    std::string prefix = "scene";
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
    auto rng = substream(g.seed, "synth");
    if (a.opt.count <= 0) {
        const SceneSpec spec = scene_spec(a.opt, rng);
        const SyntheticScene scene = synth_scene(spec);
        write_ppm16(out_path(g, a.prefix + ".ppm"), scene.image);
        for (std::size_t r = 0; r < scene.regions.size(); ++r) {
            std::vector<std::uint8_t> m(scene.regions[r].mask.size());
            for (std::size_t p = 0; p < m.size(); ++p) m[p] = scene.regions[r].mask[p] ? 255 : 0;
            write_pgm8(out_path(g, a.prefix + "_region" + std::to_string(r) + ".pgm"), spec.height, spec.width, m);
        }
        Json j = scene_json(spec, a.opt.illuminants);
        j["image"] = a.prefix + ".ppm";
        write_text_file(out_path(g, a.prefix + ".json"), j.dump(2) + "\n");
        print_json(j);
        return 0;
    }
    // Dataset mode: one image per scene plus an index CSV with per-image ground truth.
    DatasetIndex index;
    const auto folds = a.opt.count >= 5 ? make_folds(static_cast<std::size_t>(a.opt.count), 5,
                                                     substream_seed(g.seed, "synth/folds"))
                                        : std::vector<int>(static_cast<std::size_t>(a.opt.count), -1);
    SynthOptions single = a.opt;
    single.n_illuminants = 1;
    for (int i = 0; i < a.opt.count; ++i) {
        const SceneSpec spec = scene_spec(single, rng);
        if (spec.illuminants.size() != 1) throw InvalidArgument("dataset mode writes single-illuminant scenes");
        const SyntheticScene scene = synth_scene(spec);
        char name[48];
        std::snprintf(name, sizeof(name), "%s_%04d.ppm", a.prefix.c_str(), i);
        const fs::path path = out_path(g, name);
        write_ppm16(path, scene.image);
        DatasetEntry e;
        e.image_path = path;
        e.ground_truth = spec.illuminants[0];
        e.black_level = {0.0, 0.0, 0.0};
        e.saturation_level = 65535.0;
        e.fold = folds[static_cast<std::size_t>(i)];
        index.entries.push_back(e);
    }
    const fs::path csv = out_path(g, a.prefix + "_index.csv");
    write_text_file(csv, dataset_index_to_csv(index, csv.parent_path()));
    print_json(Json{{"index", csv.string()}, {"images", index.entries.size()}});
    return 0;
}

struct ClusterArgs {
    std::string image;
    std::string reference;
    std::string model;
    std::string mask;
    PipelineOptions pipeline;
};

int cmd_cluster(const Globals& g, const ClusterArgs& a) {
    if (a.reference.empty() == a.model.empty()) throw InvalidArgument("give exactly one of --reference or --model");
    const PipelineConfig pc = a.pipeline.make(g.seed);
    PipelineResult r;
    if (!a.model.empty()) {
        const net::Checkpoint ckpt = net::read_checkpoint(a.model);
        r = run_pipeline(ckpt.net, read_image(a.image), ckpt.confidence_mean, pc);
    } else {
        const LinearImage input = read_image(a.image);
        const LinearImage ref = read_image(a.reference);
        if (!input.same_shape(ref)) throw InvalidArgument("reference and image dimensions differ");
        // Reference given directly: the field is irrelevant except for confidence, so use identity.
        r.model_input = input;
        r.reference = ReferenceImage{ref};
        r.map = illumination_vector_map(input, r.reference, pc.dark_threshold);
        LocalFitConfig fit = pc.fit;
        fit.fit.dark_threshold = pc.dark_threshold;
        fit.merge_threshold = pc.cluster.merge_threshold;
        r.clusters = spectral_cluster(r.map, pc.cluster);
        r.estimate = fit_local(input, r.reference, r.clusters.mask, fit);
    }
    const fs::path mask_path = a.mask.empty() ? out_path(g, "mask.pgm") : fs::path(a.mask);
    write_pgm8(mask_path, r.clusters.mask.height, r.clusters.mask.width, r.clusters.mask.to_gray8());
    Json j;
    j["mask"] = mask_path.string();
    j["clusters"] = r.clusters.mask.n_clusters;
    j["merged"] = r.clusters.merged;
    j["estimate"] = to_json(r.estimate);
    print_json(j);
    return 0;
}

struct GradcheckArgs {
    int samples = 100;
    double step = 1e-3;
    double tolerance = 1e-4;
    int input_size = 16;
    int kernel_order = 1;
    std::string widths = "4,8";
};

int cmd_gradcheck(const Globals& g, const GradcheckArgs& a) {
    net::GradcheckConfig cfg;
    cfg.samples = a.samples;
    cfg.step = a.step;
    cfg.tolerance = a.tolerance;
    cfg.spec.input_size = a.input_size;
    cfg.spec.kernel_order = a.kernel_order;
    cfg.spec.encoder_widths = parse_ints(a.widths);
    cfg.seed = g.seed;
    const net::GradcheckResult r = net::gradcheck(cfg);
    std::printf("checked %zu parameters (%d skipped at kinks), max relative error %.3e, tolerance %.1e: %s\n",
                r.entries.size(), r.skipped, r.max_rel_error, cfg.tolerance, r.passed ? "PASS" : "FAIL");
    return r.passed ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel-field white balance toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Global seed")->capture_default_str();
    app.add_option("--config", g.config, "JSON config file; explicit flags win");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

    EstimateArgs est;
    auto* c_est = app.add_subcommand("estimate", "Estimate the illuminant(s) of an image");
    c_est->add_option("image", est.image, "PPM or PNG image")->required();
    c_est->add_option("--method", est.method, "Classical method name or checkpoint path")->capture_default_str();
    c_est->add_option("--correct", est.correct, "Write the corrected, gamma 1/2.2 image here");
    c_est->add_option("--mask", est.mask, "Write the cluster mask PGM here (checkpoint methods)");
    c_est->add_option("--json", est.json_out, "Also write the JSON estimate here");
    add_classical_options(c_est, est.classical);
    add_pipeline_options(c_est, est.pipeline);

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "Train the kernel-prediction network");
    c_train->add_option("--index", tr.index, "Dataset index CSV");
    c_train->add_option("--synthetic", tr.synthetic, "Train on N generated single-illuminant scenes");
    c_train->add_option("--max-ratio", tr.max_ratio, "Illuminant R/G and B/G range for --synthetic")
        ->capture_default_str();
    c_train->add_option("--checkpoint", tr.checkpoint, "Checkpoint path (default <out>/model.kwb)");
    c_train->add_option("--log", tr.log, "Loss log CSV (default <out>/train_log.csv)");
    c_train->add_option("--input-size", tr.input_size)->capture_default_str();
    c_train->add_option("--kernel-order", tr.kernel_order)->capture_default_str();
    c_train->add_option("--widths", tr.widths, "Encoder widths, comma-separated")->capture_default_str();
    c_train->add_option("--batch-size", tr.batch_size)->capture_default_str();
    c_train->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
    c_train->add_option("--lambda1", tr.lambda1)->capture_default_str();
    c_train->add_option("--lambda2", tr.lambda2)->capture_default_str();
    c_train->add_option("--lambda3", tr.lambda3)->capture_default_str();
    c_train->add_option("--max-steps", tr.max_steps)->capture_default_str();
    c_train->add_option("--checkpoint-every", tr.checkpoint_every, "0 writes only the final checkpoint")
        ->capture_default_str();
    c_train->add_flag("--no-augment", tr.no_augment, "Train on resized sources without augmentation");
    c_train->add_option("--concat-p", tr.concat_p, "Two-source concatenation probability")->capture_default_str();
    c_train->add_option("--init", tr.init, "random or identity")->capture_default_str();
    c_train->add_option("--exclude-fold", tr.exclude_fold, "Leave this fold out of training");

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Angular-error statistics of an estimator");
    c_eval->add_option("--index", ev.index, "Dataset index CSV");
    c_eval->add_option("--synthetic", ev.synthetic, "Evaluate on N generated scenes");
    c_eval->add_option("--illuminants", ev.n_illuminants, "Illuminants per generated scene (1 or 2)")
        ->capture_default_str();
    c_eval->add_option("--noise", ev.noise, "Noise sigma of generated scenes")->capture_default_str();
    c_eval->add_option("--size", ev.size, "Side of generated scenes")->capture_default_str();
    c_eval->add_option("--method", ev.method, "Classical method, oracle, or checkpoint path")->capture_default_str();
    c_eval->add_option("--errors-file", ev.errors_file, "Summarize a list of precomputed errors instead");
    c_eval->add_option("--row-stats", ev.row_stats, "mean,median,trimean,best25,worst25: print the row with G.M.");
    c_eval->add_option("--fold", ev.fold, "Evaluate only this fold");
    c_eval->add_option("--report", ev.report, "JSON report path (default <out>/eval_report.json)");
    add_classical_options(c_eval, ev.classical);
    add_pipeline_options(c_eval, ev.pipeline);

    SynthArgs sy;
    auto* c_synth = app.add_subcommand("synth", "Generate synthetic scenes with ground truth");
    c_synth->add_option("--size", sy.opt.size)->capture_default_str();
    c_synth->add_option("--illuminant", sy.opt.illuminants, "r,g,b; give twice for two regions");
    c_synth->add_option("--split", sy.opt.split, "Fraction of rows lit by the first illuminant")->capture_default_str();
    c_synth->add_option("--noise", sy.opt.noise)->capture_default_str();
    c_synth->add_option("--count", sy.opt.count, "Write N single-illuminant scenes and an index CSV");
    c_synth->add_option("--max-ratio", sy.opt.max_ratio, "Random illuminant R/G and B/G range")->capture_default_str();
    c_synth->add_option("--prefix", sy.prefix)->capture_default_str();

    ClusterArgs cl;
    auto* c_cluster = app.add_subcommand("cluster", "Cluster the illumination map of an image");
    c_cluster->add_option("image", cl.image, "Input image")->required();
    c_cluster->add_option("--reference", cl.reference, "Reference image at the same size");
    c_cluster->add_option("--model", cl.model, "Checkpoint producing the reference");
    c_cluster->add_option("--mask", cl.mask, "Mask PGM path (default <out>/mask.pgm)");
    add_pipeline_options(c_cluster, cl.pipeline);

    GradcheckArgs gc;
    auto* c_gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
    c_gc->add_option("--samples", gc.samples)->capture_default_str();
    c_gc->add_option("--step", gc.step)->capture_default_str();
    c_gc->add_option("--tolerance", gc.tolerance)->capture_default_str();
    c_gc->add_option("--input-size", gc.input_size)->capture_default_str();
    c_gc->add_option("--kernel-order", gc.kernel_order)->capture_default_str();
    c_gc->add_option("--widths", gc.widths)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (!g.config.empty()) {
            Json j;
            try {
                j = Json::parse(read_text_file(g.config));
            } catch (const nlohmann::json::exception& e) {
                throw InvalidArgument(std::string("config: ") + e.what());
            }
            apply_config(app, j);
        }
        if (*c_est) return cmd_estimate(g, est);
        if (*c_train) return cmd_train(g, tr);
        if (*c_eval) return cmd_eval(g, ev);
        if (*c_synth) return cmd_synth(g, sy);
        if (*c_cluster) return cmd_cluster(g, cl);
        if (*c_gc) return cmd_gradcheck(g, gc);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
