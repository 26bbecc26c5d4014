#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kwb/color.hpp"
#include "kwb/confidence.hpp"
#include "kwb/fitting.hpp"
#include "kwb/kernel_field.hpp"

namespace kwb {

struct ClusterConfig {
    int n_clusters = 2;
    double rbf_sigma = 0.1;  // radians
    int max_nodes = 4096;
    int kmeans_restarts = 4;
    std::uint64_t seed = 0;
    double merge_threshold = 2.0;  // degrees

    void validate() const;
};

constexpr int kInvalidLabel = -1;

struct ClusterMask {
    int height = 0;
    int width = 0;
    int n_clusters = 0;
    std::vector<int> labels;  // kInvalidLabel or [0, n_clusters)

    int at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
    // Label for a pixel of an image with different dimensions (nearest).
    int at_scaled(int y, int x, int image_height, int image_width) const;
    // label 0 -> 0, label 1 -> 128, other labels spread over (0, 255), invalid -> 255.
    std::vector<std::uint8_t> to_gray8() const;
};

struct ClusterResult {
    ClusterMask mask;
    bool merged = false;  // fewer distinct vectors than clusters: everything is one cluster
};

// RBF-of-angle spectral clustering of the map's gain directions.
ClusterResult spectral_cluster(const GainMap& map, const ClusterConfig& config);

namespace spectral {

// Dense affinity exp(-angle / sigma^2) between unit vectors, angle in radians.
// Diagonal entries are 1.
std::vector<double> affinity_matrix(const std::vector<Rgb>& directions, double sigma);

// The k eigenvectors of largest eigenvalue of D^-1/2 W D^-1/2 (the k smallest
// of the symmetric normalized Laplacian), n x k column-major.
// `affinity` is symmetric. Dense solver up to `dense_limit` nodes, filtered
// block subspace iteration above.
std::vector<double> normalized_embedding(std::vector<double> affinity, int n, int k, std::uint64_t seed,
                                         int dense_limit = 512);

// Seeded k-means on the rows of an n x dim row-major matrix; farthest-point
// seeding, best of `restarts` by inertia.
std::vector<int> kmeans(const std::vector<double>& rows, int n, int dim, int k, int restarts, std::uint64_t seed);

}  // namespace spectral

struct IlluminantEstimate {
    enum class Mode { Single, Multi };

    struct Region {
        int label = 0;
        GainTriple gains;
        IlluminantVector illuminant;
        std::size_t pixels = 0;
    };

    Mode mode = Mode::Single;
    std::vector<Region> regions;
    // Labels index `regions`. Empty (0x0) for estimators without a spatial mask.
    ClusterMask mask;
    std::optional<ConfidenceReport> confidence;

    // Illuminant that applies at pixel (y, x) of an image of the given size.
    const Region& region_at(int y, int x, int image_height, int image_width) const;
};

struct LocalFitConfig {
    FitConfig fit;
    double merge_threshold = 2.0;  // degrees
    std::size_t min_cluster_pixels = 16;
};

// Per-cluster fits; collapses to a single global fit when every pair of
// cluster illuminants is closer than merge_threshold.
IlluminantEstimate fit_local(const LinearImage& input, const ReferenceImage& reference, const ClusterMask& mask,
                             const LocalFitConfig& config);

std::string_view to_string(IlluminantEstimate::Mode mode);

}  // namespace kwb
