#include "kwb/clustering.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "kwb/simd.hpp"

namespace kwb {

void ClusterConfig::validate() const {
    if (n_clusters < 2) throw InvalidArgument("n_clusters must be >= 2");
    if (!(rbf_sigma > 0.0)) throw InvalidArgument("rbf_sigma must be > 0");
    if (max_nodes < n_clusters) throw InvalidArgument("max_nodes must be >= n_clusters");
    if (kmeans_restarts < 1) throw InvalidArgument("kmeans_restarts must be >= 1");
    if (!(merge_threshold >= 0.0)) throw InvalidArgument("merge_threshold must be >= 0");
}

int ClusterMask::at_scaled(int y, int x, int image_height, int image_width) const {
    const int sy = std::min(height - 1, static_cast<int>((y + 0.5) * height / image_height));
    const int sx = std::min(width - 1, static_cast<int>((x + 0.5) * width / image_width));
    return at(sy, sx);
}

std::vector<std::uint8_t> ClusterMask::to_gray8() const {
    std::vector<std::uint8_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int l = labels[i];
        if (l == kInvalidLabel) {
            out[i] = 255;
        } else if (l == 0) {
            out[i] = 0;
        } else {
            out[i] = static_cast<std::uint8_t>(std::min(254, 128 + 40 * (l - 1)));
        }
    }
    return out;
}

namespace spectral {

std::vector<double> affinity_matrix(const std::vector<Rgb>& directions, double sigma) {
    const std::size_t n = directions.size();
    const double inv_s2 = 1.0 / (sigma * sigma);
    std::vector<double> w(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i * n + i] = 1.0;
        const Rgb& a = directions[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const Rgb& b = directions[j];
            const double c = std::clamp(a[0] * b[0] + a[1] * b[1] + a[2] * b[2], -1.0, 1.0);
            const double v = std::exp(-std::acos(c) * inv_s2);
            w[i * n + j] = v;
            w[j * n + i] = v;
        }
    }
    return w;
}

namespace {

using Eigen::MatrixXd;

MatrixXd thin_q(const MatrixXd& a) {
    Eigen::HouseholderQR<MatrixXd> qr(a);
    return qr.householderQ() * MatrixXd::Identity(a.rows(), a.cols());
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// m * v for a dense row-major n x n matrix.
MatrixXd product(const std::vector<double>& m, int n, const MatrixXd& v) {
    const RowMatrix x = v;
    RowMatrix z(n, v.cols());
    simd::kernels().matmul(m.data(), x.data(), z.data(), n, n, static_cast<std::size_t>(v.cols()));
    return z;
}

// Top-k invariant subspace of a symmetric PSD matrix by Chebyshev-filtered
// block subspace iteration with Rayleigh-Ritz. The filter damps [0, cutoff],
// where cutoff is the smallest Ritz value of the block.
MatrixXd top_eigenvectors_iterative(const std::vector<double>& m, int n, int k, std::uint64_t seed) {
    const int b = std::min(n, k + 10);
    constexpr int kDegree = 4;
    constexpr int kMaxIterations = 500;
    constexpr double kResidualTol = 1e-9;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd v(n, b);
    for (int j = 0; j < b; ++j) {
        for (int i = 0; i < n; ++i) v(i, j) = normal(rng);
    }
    v = thin_q(v);

    MatrixXd u;
    double cutoff = 0.0;
    for (int it = 0; it < kMaxIterations; ++it) {
        if (it > 0) {
            if (cutoff > 0.0) {
                const double half = 0.5 * cutoff;
                MatrixXd prev = v;
                MatrixXd cur = (product(m, n, v) - half * v) / half;
                for (int d = 2; d <= kDegree; ++d) {
                    MatrixXd next = 2.0 * (product(m, n, cur) - half * cur) / half - prev;
                    prev = std::move(cur);
                    cur = std::move(next);
                }
                v = thin_q(cur);
            } else {
                v = thin_q(product(m, n, v));
            }
        }
        const MatrixXd z = product(m, n, v);
        MatrixXd h = v.transpose() * z;
        h = 0.5 * (h + h.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
        if (es.info() != Eigen::Success) throw ClusteringFailure("Rayleigh-Ritz eigen-solve failed");
        const MatrixXd s = es.eigenvectors().rowwise().reverse();
        const Eigen::VectorXd theta = es.eigenvalues().reverse();
        u = v * s;
        const MatrixXd au = z * s;
        if (!au.allFinite()) throw ClusteringFailure("non-finite values in eigen-solve");
        double worst = 0.0;
        for (int j = 0; j < k; ++j) worst = std::max(worst, (au.col(j) - theta(j) * u.col(j)).norm());
        if (worst <= kResidualTol * std::max(1.0, std::fabs(theta(0)))) return u.leftCols(k);
        v = u;
        // No filtering when the block spectrum is flat.
        cutoff = theta(b - 1) < 0.95 * theta(k - 1) ? std::max(theta(b - 1), 1e-3 * theta(0)) : 0.0;
    }
    return u.leftCols(k);
}

}  // namespace

std::vector<double> normalized_embedding(std::vector<double> affinity, int n, int k, std::uint64_t seed,
                                         int dense_limit) {
    if (n < 1 || k < 1 || k > n || affinity.size() != static_cast<std::size_t>(n) * n) {
        throw InvalidArgument("normalized_embedding: bad sizes");
    }
    std::vector<double>& m = affinity;
    std::vector<double> dinv(n);
    for (int i = 0; i < n; ++i) {
        double d = 0.0;
        for (int j = 0; j < n; ++j) d += m[static_cast<std::size_t>(i) * n + j];
        dinv[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m[static_cast<std::size_t>(i) * n + j] *= dinv[i] * dinv[j];
    }

    MatrixXd vecs;
    if (n <= dense_limit) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(Eigen::Map<const MatrixXd>(m.data(), n, n));
        if (es.info() != Eigen::Success) throw ClusteringFailure("eigen-solve failed");
        vecs = es.eigenvectors().rightCols(k).rowwise().reverse();
    } else {
        vecs = top_eigenvectors_iterative(m, n, k, seed);
    }
    if (!vecs.allFinite()) throw ClusteringFailure("non-finite eigenvectors");
    return std::vector<double>(vecs.data(), vecs.data() + vecs.size());
}

std::vector<int> kmeans(const std::vector<double>& rows, int n, int dim, int k, int restarts, std::uint64_t seed) {
    auto dist2 = [&](const double* a, const double* b) {
        double s = 0.0;
        for (int d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
        return s;
    };
    std::vector<int> best_labels(n, 0);
    double best_inertia = std::numeric_limits<double>::infinity();

    for (int r = 0; r < restarts; ++r) {
        std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(r + 1));
        std::vector<double> centers(static_cast<std::size_t>(k) * dim);
        std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
        int pick = static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
        for (int c = 0; c < k; ++c) {
            std::copy_n(&rows[static_cast<std::size_t>(pick) * dim], dim, &centers[static_cast<std::size_t>(c) * dim]);
            for (int i = 0; i < n; ++i) {
                nearest[i] = std::min(nearest[i], dist2(&rows[static_cast<std::size_t>(i) * dim], &centers[c * dim]));
            }
            pick = static_cast<int>(std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
        }

        std::vector<int> labels(n, -1);
        for (int iter = 0; iter < 100; ++iter) {
            bool changed = false;
            for (int i = 0; i < n; ++i) {
                int arg = 0;
                double bestd = std::numeric_limits<double>::infinity();
                for (int c = 0; c < k; ++c) {
                    const double d = dist2(&rows[static_cast<std::size_t>(i) * dim], &centers[c * dim]);
                    if (d < bestd) {
                        bestd = d;
                        arg = c;
                    }
                }
                if (labels[i] != arg) {
                    labels[i] = arg;
                    changed = true;
                }
            }
            if (!changed) break;
            std::vector<double> sums(static_cast<std::size_t>(k) * dim, 0.0);
            std::vector<int> counts(k, 0);
            for (int i = 0; i < n; ++i) {
                ++counts[labels[i]];
                for (int d = 0; d < dim; ++d) sums[labels[i] * dim + d] += rows[static_cast<std::size_t>(i) * dim + d];
            }
            for (int c = 0; c < k; ++c) {
                if (counts[c] == 0) continue;  // keep the previous center
                for (int d = 0; d < dim; ++d) centers[c * dim + d] = sums[c * dim + d] / counts[c];
            }
        }
        double inertia = 0.0;
        for (int i = 0; i < n; ++i) inertia += dist2(&rows[static_cast<std::size_t>(i) * dim], &centers[labels[i] * dim]);
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best_labels = labels;
        }
    }
    return best_labels;
}

}  // namespace spectral

namespace {

Rgb unit(const Rgb& v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return {v[0] / n, v[1] / n, v[2] / n};
}

// Relabels so clusters are numbered by first appearance in raster order.
int canonicalize(std::vector<int>& labels) {
    std::map<int, int> remap;
    for (int& l : labels) {
        if (l == kInvalidLabel) continue;
        auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
        l = it->second;
    }
    return static_cast<int>(remap.size());
}

}  // namespace

ClusterResult spectral_cluster(const GainMap& map, const ClusterConfig& config) {
    config.validate();
    const int h = map.height, w = map.width;
    if (h < 1 || w < 1 || map.size() != static_cast<std::size_t>(h) * w) {
        throw InvalidArgument("spectral_cluster: malformed map");
    }

    // Smallest block factor that brings the node count under max_nodes.
    int f = 1;
    while (static_cast<long long>((h + f - 1) / f) * ((w + f - 1) / f) > config.max_nodes) ++f;
    const int bh = (h + f - 1) / f, bw = (w + f - 1) / f;

    std::vector<int> block_node(static_cast<std::size_t>(bh) * bw, -1);
    std::vector<Rgb> nodes;
    for (int by = 0; by < bh; ++by) {
        for (int bx = 0; bx < bw; ++bx) {
            Rgb sum{};
            int count = 0;
            for (int y = by * f; y < std::min(h, (by + 1) * f); ++y) {
                for (int x = bx * f; x < std::min(w, (bx + 1) * f); ++x) {
                    const std::size_t p = static_cast<std::size_t>(y) * w + x;
                    const Rgb& g = map.gains[p];
                    const double norm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
                    if (!map.valid[p] || !(norm > 0.0) || !std::isfinite(norm)) continue;
                    for (int c = 0; c < 3; ++c) sum[c] += g[c] / norm;
                    ++count;
                }
            }
            const double norm = std::sqrt(sum[0] * sum[0] + sum[1] * sum[1] + sum[2] * sum[2]);
            if (count == 0 || !(norm > 0.0)) continue;
            block_node[static_cast<std::size_t>(by) * bw + bx] = static_cast<int>(nodes.size());
            nodes.push_back(unit(sum));
        }
    }

    ClusterResult result;
    result.mask.height = h;
    result.mask.width = w;
    result.mask.labels.assign(static_cast<std::size_t>(h) * w, kInvalidLabel);
    if (nodes.empty()) throw ClusteringFailure("illumination map has no valid pixels");

    const int n = static_cast<int>(nodes.size());
    const int k = config.n_clusters;
    std::vector<Rgb> distinct;
    for (const Rgb& v : nodes) {
        bool seen = false;
        for (const Rgb& d : distinct) {
            if (angular_distance_rad(v, d) < 1e-7) {
                seen = true;
                break;
            }
        }
        if (!seen) distinct.push_back(v);
        if (static_cast<int>(distinct.size()) >= k) break;
    }

    std::vector<int> node_label(n, 0);
    if (static_cast<int>(distinct.size()) < k) {
        result.merged = true;
    } else {
        auto emb = spectral::normalized_embedding(spectral::affinity_matrix(nodes, config.rbf_sigma), n, k,
                                                  config.seed);
        // Column-major n x k -> row-normalized row-major.
        std::vector<double> rows(static_cast<std::size_t>(n) * k);
        for (int i = 0; i < n; ++i) {
            double norm = 0.0;
            for (int j = 0; j < k; ++j) norm += emb[static_cast<std::size_t>(j) * n + i] * emb[static_cast<std::size_t>(j) * n + i];
            norm = std::sqrt(norm);
            for (int j = 0; j < k; ++j) {
                rows[static_cast<std::size_t>(i) * k + j] = norm > 0.0 ? emb[static_cast<std::size_t>(j) * n + i] / norm : 0.0;
            }
        }
        node_label = spectral::kmeans(rows, n, k, k, config.kmeans_restarts, config.seed);
    }

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * w + x;
            if (!map.valid[p]) continue;
            const int node = block_node[static_cast<std::size_t>(y / f) * bw + x / f];
            if (node >= 0) result.mask.labels[p] = node_label[node];
        }
    }
    result.mask.n_clusters = canonicalize(result.mask.labels);
    return result;
}

const IlluminantEstimate::Region& IlluminantEstimate::region_at(int y, int x, int image_height, int image_width) const {
    if (regions.empty()) throw InvalidArgument("estimate has no regions");
    if (regions.size() == 1 || mask.labels.empty()) return regions.front();
    const int label = mask.at_scaled(y, x, image_height, image_width);
    if (label >= 0 && label < static_cast<int>(regions.size())) return regions[label];
    return *std::max_element(regions.begin(), regions.end(),
                             [](const Region& a, const Region& b) { return a.pixels < b.pixels; });
}

std::string_view to_string(IlluminantEstimate::Mode mode) {
    return mode == IlluminantEstimate::Mode::Single ? "single" : "multi";
}

IlluminantEstimate fit_local(const LinearImage& input, const ReferenceImage& reference, const ClusterMask& mask,
                             const LocalFitConfig& config) {
    if (mask.height != input.height() || mask.width != input.width()) {
        throw InvalidArgument("fit_local: mask dimensions differ from the image");
    }
    const auto valid = fit_validity(input, reference, config.fit.dark_threshold);
    std::vector<int> labels = mask.labels;
    const std::size_t n = labels.size();

    auto usable = [&](int label) {
        std::vector<std::uint8_t> use(n, 0);
        for (std::size_t p = 0; p < n; ++p) use[p] = (labels[p] == label && valid[p]) ? 1 : 0;
        return use;
    };
    auto count_usable = [&](int label) {
        std::size_t c = 0;
        for (std::size_t p = 0; p < n; ++p) c += (labels[p] == label && valid[p]) ? 1 : 0;
        return c;
    };
    // Mean gain direction of a cluster's usable pixels.
    const auto x = input.data();
    const auto r = reference.image.data();
    auto mean_direction = [&](int label) {
        Rgb s{};
        for (std::size_t p = 0; p < n; ++p) {
            if (labels[p] != label || !valid[p]) continue;
            Rgb g{r[3 * p] / x[3 * p], r[3 * p + 1] / x[3 * p + 1], r[3 * p + 2] / x[3 * p + 2]};
            g = unit(g);
            for (int c = 0; c < 3; ++c) s[c] += g[c];
        }
        return s;
    };

    std::vector<int> present;
    for (int l : labels) {
        if (l != kInvalidLabel && std::find(present.begin(), present.end(), l) == present.end()) present.push_back(l);
    }
    std::sort(present.begin(), present.end());
    // Drop empty clusters; fold small ones into their nearest neighbor.
    while (true) {
        std::vector<int> alive;
        int small = kInvalidLabel;
        for (int l : present) {
            const std::size_t c = count_usable(l);
            if (c == 0) continue;
            alive.push_back(l);
            if (c < config.min_cluster_pixels && small == kInvalidLabel) small = l;
        }
        present = alive;
        if (small == kInvalidLabel || present.size() <= 1) break;
        const Rgb d = mean_direction(small);
        int target = kInvalidLabel;
        double best = std::numeric_limits<double>::infinity();
        for (int l : present) {
            if (l == small) continue;
            const double a = angular_distance_rad(d, mean_direction(l));
            if (a < best) {
                best = a;
                target = l;
            }
        }
        for (int& l : labels) {
            if (l == small) l = target;
        }
    }
    if (present.empty()) throw DegenerateScene("no valid pixels in any cluster");

    auto labelled_pixels = [&](int label) {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
    };

    IlluminantEstimate est;
    std::vector<IlluminantEstimate::Region> regions;
    for (int l : present) {
        const GainTriple g = fit_gains(input, reference, usable(l), config.fit).gains();
        regions.push_back({l, g, illuminant_from_gains(g), labelled_pixels(l)});
    }

    bool collapse = regions.size() == 1;
    if (!collapse) {
        collapse = true;
        for (std::size_t i = 0; i < regions.size() && collapse; ++i) {
            for (std::size_t j = i + 1; j < regions.size(); ++j) {
                if (angular_distance(regions[i].illuminant, regions[j].illuminant) >= config.merge_threshold) {
                    collapse = false;
                    break;
                }
            }
        }
    }

    est.mask.height = mask.height;
    est.mask.width = mask.width;
    est.mask.labels.assign(n, kInvalidLabel);
    if (collapse) {
        std::vector<std::uint8_t> use(n, 0);
        std::size_t pixels = 0;
        for (std::size_t p = 0; p < n; ++p) {
            const bool in_region = std::find(present.begin(), present.end(), labels[p]) != present.end();
            if (in_region) {
                est.mask.labels[p] = 0;
                ++pixels;
                use[p] = valid[p];
            }
        }
        const GainTriple g = fit_gains(input, reference, use, config.fit).gains();
        est.mode = IlluminantEstimate::Mode::Single;
        est.regions = {{0, g, illuminant_from_gains(g), pixels}};
        est.mask.n_clusters = 1;
        return est;
    }

    est.mode = IlluminantEstimate::Mode::Multi;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        for (std::size_t p = 0; p < n; ++p) {
            if (labels[p] == regions[i].label) est.mask.labels[p] = static_cast<int>(i);
        }
        regions[i].label = static_cast<int>(i);
    }
    est.regions = std::move(regions);
    est.mask.n_clusters = static_cast<int>(est.regions.size());
    return est;
}

}  // namespace kwb
