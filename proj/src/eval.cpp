#include "kwb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace kwb {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidMetadata("dataset index: bad " + what + " value '" + s + "'");
    }
}

}  // namespace

DatasetIndex load_dataset_index(const std::filesystem::path& csv, std::uint64_t fold_seed) {
    std::ifstream in(csv);
    if (!in) throw IoError("cannot open dataset index " + csv.string());
    std::string line;
    if (!std::getline(in, line)) throw InvalidMetadata("dataset index is empty");
    const auto header = split_csv_line(line);
    const std::vector<std::string> expected{"path", "r", "g", "b", "black", "sat", "fold"};
    if (header.size() < expected.size() || !std::equal(expected.begin(), expected.end(), header.begin())) {
        throw InvalidMetadata("dataset index header must start with path,r,g,b,black,sat,fold");
    }
    const bool has_mask = header.size() > expected.size() && header[expected.size()] == "mask";
    const auto base = csv.parent_path();

    DatasetIndex index;
    std::vector<std::size_t> missing;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() < expected.size()) throw InvalidMetadata("dataset index: short row '" + line + "'");
        DatasetEntry e;
        e.image_path = std::filesystem::path(f[0]).is_absolute() ? std::filesystem::path(f[0]) : base / f[0];
        const double r = parse_double(f[1], "r"), g = parse_double(f[2], "g"), b = parse_double(f[3], "b");
        try {
            e.ground_truth = IlluminantVector(r, g, b);
        } catch (const InvalidArgument&) {
            throw InvalidMetadata("dataset index: invalid ground truth for " + f[0]);
        }
        const double black = parse_double(f[4], "black");
        e.black_level = {black, black, black};
        e.saturation_level = parse_double(f[5], "sat");
        e.fold = f[6].empty() ? -1 : static_cast<int>(parse_double(f[6], "fold"));
        if (e.fold < -1 || e.fold > 4) throw InvalidMetadata("dataset index: fold must be in 0..4");
        if (e.fold < 0) missing.push_back(index.entries.size());
        if (has_mask && f.size() > expected.size() && !f[expected.size()].empty()) {
            const std::filesystem::path m(f[expected.size()]);
            e.mask_polygon = m.is_absolute() ? m : base / m;
        }
        index.entries.push_back(std::move(e));
    }
    if (missing.size() >= 5) {
        const auto folds = make_folds(missing.size(), 5, fold_seed);
        for (std::size_t i = 0; i < missing.size(); ++i) index.entries[missing[i]].fold = folds[i];
    } else {
        for (std::size_t i = 0; i < missing.size(); ++i) index.entries[missing[i]].fold = static_cast<int>(i);
    }
    return index;
}

std::string dataset_index_to_csv(const DatasetIndex& index, const std::filesystem::path& relative_to) {
    std::ostringstream out;
    out.precision(17);
    out << "path,r,g,b,black,sat,fold,mask\n";
    for (const auto& e : index.entries) {
        out << std::filesystem::relative(e.image_path, relative_to).generic_string() << ',' << e.ground_truth.r() << ','
            << e.ground_truth.g() << ',' << e.ground_truth.b() << ',' << e.black_level[0] << ',' << e.saturation_level
            << ',' << e.fold << ',';
        if (e.mask_polygon) out << std::filesystem::relative(*e.mask_polygon, relative_to).generic_string();
        out << '\n';
    }
    return out.str();
}

std::vector<std::array<double, 2>> read_polygon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open polygon " + path.string());
    std::vector<std::array<double, 2>> poly;
    double x, y;
    while (in >> x >> y) poly.push_back({x, y});
    if (poly.size() < 3) throw InvalidMetadata("polygon needs at least 3 vertices: " + path.string());
    return poly;
}

std::vector<std::uint8_t> rasterize_polygon(const std::vector<std::array<double, 2>>& polygon, int height, int width) {
    std::vector<std::uint8_t> inside(static_cast<std::size_t>(height) * width, 0);
    const std::size_t m = polygon.size();
    for (int y = 0; y < height; ++y) {
        const double py = y + 0.5;
        for (int x = 0; x < width; ++x) {
            const double px = x + 0.5;
            bool in = false;
            for (std::size_t i = 0, j = m - 1; i < m; j = i++) {
                const auto& a = polygon[i];
                const auto& b = polygon[j];
                if ((a[1] > py) != (b[1] > py) && px < (b[0] - a[0]) * (py - a[1]) / (b[1] - a[1]) + a[0]) in = !in;
            }
            inside[static_cast<std::size_t>(y) * width + x] = in ? 1 : 0;
        }
    }
    return inside;
}

IngestedImage ingest(const RawImage& raw, const DatasetEntry& entry) {
    for (int c = 0; c < 3; ++c) {
        if (!(entry.saturation_level > entry.black_level[c])) {
            throw InvalidMetadata("saturation level must exceed the black level");
        }
    }
    std::vector<double> data(raw.samples.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int c = static_cast<int>(i % 3);
        const double black = entry.black_level[c];
        data[i] = std::max(0.0, raw.samples[i] - black) / (entry.saturation_level - black);
    }
    IngestedImage out{LinearImage(raw.height, raw.width, std::move(data)), {}};
    out.excluded.assign(out.image.pixel_count(), 0);
    if (entry.mask_polygon) {
        out.excluded = rasterize_polygon(read_polygon(*entry.mask_polygon), raw.height, raw.width);
        auto d = out.image.data();
        for (std::size_t p = 0; p < out.excluded.size(); ++p) {
            if (out.excluded[p]) d[3 * p] = d[3 * p + 1] = d[3 * p + 2] = 0.0;
        }
    }
    return out;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double summary_geometric_mean(const std::array<double, 5>& row) {
    double log_sum = 0.0;
    for (double v : row) {
        if (v <= 0.0) return 0.0;
        log_sum += std::log(v);
    }
    return std::exp(log_sum / 5.0);
}

ErrorStats error_stats(std::vector<double> errors) {
    if (errors.empty()) throw InvalidArgument("error_stats of an empty list");
    for (double e : errors) {
        if (!std::isfinite(e) || e < 0.0) throw InvalidArgument("errors must be finite and >= 0");
    }
    std::sort(errors.begin(), errors.end());
    const std::size_t n = errors.size();
    const std::size_t quarter = (n + 3) / 4;

    ErrorStats s;
    s.mean = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(n);
    s.median = n % 2 == 1 ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
    s.trimean = (quantile_sorted(errors, 0.25) + 2.0 * s.median + quantile_sorted(errors, 0.75)) / 4.0;
    s.best25 = std::accumulate(errors.begin(), errors.begin() + static_cast<std::ptrdiff_t>(quarter), 0.0) /
               static_cast<double>(quarter);
    s.worst25 = std::accumulate(errors.end() - static_cast<std::ptrdiff_t>(quarter), errors.end(), 0.0) /
                static_cast<double>(quarter);
    s.gm = summary_geometric_mean({s.mean, s.median, s.trimean, s.best25, s.worst25});
    return s;
}

std::vector<int> make_folds(std::size_t n, int k, std::uint64_t seed) {
    if (k < 1) throw InvalidArgument("make_folds: k must be >= 1");
    if (n < static_cast<std::size_t>(k)) throw InvalidArgument("make_folds: need at least k items");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> folds(n);
    for (std::size_t i = 0; i < n; ++i) folds[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    return folds;
}

FoldSplit fold_split(const std::vector<int>& folds, int test_fold) {
    FoldSplit split;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == test_fold ? split.test : split.train).push_back(i);
    return split;
}

IlluminantEstimate single_region_estimate(const IlluminantVector& illuminant) {
    IlluminantEstimate est;
    est.mode = IlluminantEstimate::Mode::Single;
    const Rgb& l = illuminant.rgb();
    // Gains are only defined for strictly positive illuminants.
    GainTriple gains;
    if (l[0] > 0.0 && l[1] > 0.0 && l[2] > 0.0) gains = gains_from_illuminant(illuminant);
    est.regions = {{0, gains, illuminant, 0}};
    return est;
}

namespace {

struct ItemOutcome {
    std::vector<double> errors;
    std::optional<EvalFailure> failure;
};

ItemOutcome score_item(const Estimator& estimator, const EvalItem& item) {
    ItemOutcome out;
    try {
        const IlluminantEstimate est = estimator(item.image);
        if (est.regions.empty()) throw Error("estimator returned no regions");
        const int h = item.image.height(), w = item.image.width();
        for (const auto& region : item.regions) {
            std::map<const IlluminantEstimate::Region*, std::size_t> votes;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (region.mask[static_cast<std::size_t>(y) * w + x]) ++votes[&est.region_at(y, x, h, w)];
                }
            }
            if (votes.empty()) continue;
            const IlluminantEstimate::Region* pick = nullptr;
            std::size_t most = 0;
            // Ties go to the lower region index.
            for (const auto& r : est.regions) {
                auto it = votes.find(&r);
                if (it != votes.end() && it->second > most) {
                    most = it->second;
                    pick = &r;
                }
            }
            out.errors.push_back(angular_distance(pick->illuminant, region.illuminant));
        }
    } catch (const std::exception& e) {
        out.errors.clear();
        out.failure = EvalFailure{item.name, e.what()};
    }
    return out;
}

}  // namespace

EvalReport evaluate(const Estimator& estimator, const std::vector<EvalItem>& items, int n_folds, int jobs) {
    if (items.empty()) throw InvalidArgument("evaluate: empty dataset");
    std::vector<ItemOutcome> outcomes(items.size());
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(items.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < items.size(); ++i) outcomes[i] = score_item(estimator, items[i]);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t i = t; i < items.size(); i += workers) outcomes[i] = score_item(estimator, items[i]);
            });
        }
        for (auto& th : pool) th.join();
    }

    EvalReport report;
    std::vector<std::vector<double>> fold_errors(std::max(1, n_folds));
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (outcomes[i].failure) {
            report.failures.push_back(*outcomes[i].failure);
            continue;
        }
        for (double e : outcomes[i].errors) {
            report.errors.push_back(e);
            const int f = items[i].fold;
            if (f >= 0 && f < n_folds) fold_errors[f].push_back(e);
        }
    }
    for (int f = 0; f < n_folds; ++f) {
        if (fold_errors[f].empty()) {
            report.per_fold.emplace_back(std::nullopt);
        } else {
            report.per_fold.emplace_back(error_stats(fold_errors[f]));
        }
    }
    if (report.errors.empty()) throw DegenerateScene("evaluate: every item failed");
    report.pooled = error_stats(report.errors);
    return report;
}

std::string format_stats_table(const std::string& method, const ErrorStats& s) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%-24s %8s %8s %8s %9s %10s %8s\n%-24s %8.2f %8.2f %8.2f %9.2f %10.2f %8.2f\n",
                  "Method", "Mean", "Med.", "Tri.", "Best 25%", "Worst 25%", "G.M.", method.c_str(), s.mean, s.median,
                  s.trimean, s.best25, s.worst25, s.gm);
    return buf;
}

}  // namespace kwb
