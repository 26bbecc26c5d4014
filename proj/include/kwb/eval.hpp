#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kwb/clustering.hpp"
#include "kwb/color.hpp"
#include "kwb/image_io.hpp"
#include "kwb/synth.hpp"

namespace kwb {

struct DatasetEntry {
    std::filesystem::path image_path;
    IlluminantVector ground_truth;
    Rgb black_level{0.0, 0.0, 0.0};  // raw counts per channel
    double saturation_level = 65535.0;
    std::optional<std::filesystem::path> mask_polygon;  // region excluded from estimation
    int fold = -1;
};

struct DatasetIndex {
    std::vector<DatasetEntry> entries;
};

// CSV with header `path,r,g,b,black,sat,fold` and an optional trailing `mask`
// column. Relative paths resolve against the CSV's directory. Missing folds
// (-1 or empty) are assigned with make_folds(missing, 5, fold_seed), or
// 0, 1, ... when fewer than five are missing.
DatasetIndex load_dataset_index(const std::filesystem::path& csv, std::uint64_t fold_seed = 0);
std::string dataset_index_to_csv(const DatasetIndex& index, const std::filesystem::path& relative_to);

// One "x y" vertex per line.
std::vector<std::array<double, 2>> read_polygon(const std::filesystem::path& path);
// Pixels whose centers fall inside the polygon (even-odd rule).
std::vector<std::uint8_t> rasterize_polygon(const std::vector<std::array<double, 2>>& polygon, int height, int width);

struct IngestedImage {
    LinearImage image;
    std::vector<std::uint8_t> excluded;  // 1 where the mask polygon covers the pixel; those pixels are zeroed
};

// (raw - black) clamped at 0, divided by (saturation - black).
IngestedImage ingest(const RawImage& raw, const DatasetEntry& entry);

struct ErrorStats {
    double mean = 0.0;
    double median = 0.0;
    double trimean = 0.0;
    double best25 = 0.0;
    double worst25 = 0.0;
    double gm = 0.0;
};

ErrorStats error_stats(std::vector<double> errors);
// Geometric mean of (mean, median, trimean, best25, worst25); 0 if any is 0.
double summary_geometric_mean(const std::array<double, 5>& row);
// Linear-interpolation quantile of sorted data (rank 1 + q (n - 1)).
double quantile_sorted(const std::vector<double>& sorted, double q);

// Seeded shuffle then round-robin assignment to k folds.
std::vector<int> make_folds(std::size_t n, int k, std::uint64_t seed);

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
FoldSplit fold_split(const std::vector<int>& folds, int test_fold);

struct EvalItem {
    std::string name;
    LinearImage image;
    std::vector<IlluminantRegion> regions;
    int fold = 0;
};

using Estimator = std::function<IlluminantEstimate(const LinearImage&)>;

struct EvalFailure {
    std::string name;
    std::string message;
};

struct EvalReport {
    std::vector<std::optional<ErrorStats>> per_fold;  // nullopt for folds without scored regions
    ErrorStats pooled;
    std::vector<double> errors;  // per scored region, in item order
    std::vector<EvalFailure> failures;
};

// Angular error of every ground-truth region against the estimated illuminant
// covering most of it. Items whose estimator throws become failure rows.
// `jobs` > 1 estimates items concurrently; results are gathered in item order.
EvalReport evaluate(const Estimator& estimator, const std::vector<EvalItem>& items, int n_folds = 5, int jobs = 1);

// Wraps a whole-image illuminant into a single-region estimate.
IlluminantEstimate single_region_estimate(const IlluminantVector& illuminant);

// "Method  Mean  Med.  Tri.  Best 25%  Worst 25%  G.M." table with one row.
std::string format_stats_table(const std::string& method, const ErrorStats& stats);

}  // namespace kwb
