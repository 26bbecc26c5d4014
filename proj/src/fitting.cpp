#include "kwb/fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace kwb {

void SimplexConfig::validate() const {
    if (!(reflection > 0.0)) throw InvalidArgument("simplex reflection must be > 0");
    if (!(expansion > 1.0)) throw InvalidArgument("simplex expansion must be > 1");
    if (!(contraction > 0.0 && contraction < 1.0)) throw InvalidArgument("simplex contraction must be in (0, 1)");
    if (!(shrink > 0.0 && shrink < 1.0)) throw InvalidArgument("simplex shrink must be in (0, 1)");
    if (!(initial_step > 0.0)) throw InvalidArgument("simplex initial_step must be > 0");
    if (max_evals < 4) throw InvalidArgument("simplex max_evals must be >= 4");
    if (!(tolerance >= 0.0)) throw InvalidArgument("simplex tolerance must be >= 0");
}

namespace {

struct Vertex {
    Rgb x;
    double f;
};

Rgb clamp_gain(Rgb x) {
    for (double& v : x) v = std::max(v, kMinGain);
    return x;
}

Rgb along(const Rgb& from, const Rgb& to, double t) {
    // from + t * (to - from)
    return {from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1]), from[2] + t * (to[2] - from[2])};
}

}  // namespace

SimplexResult simplex_minimize(const std::function<double(const Rgb&)>& objective, const SimplexConfig& config) {
    config.validate();
    int evals = 0;
    SimplexResult best;
    best.value = std::numeric_limits<double>::infinity();

    auto eval = [&](const Rgb& raw) -> Vertex {
        const Rgb x = clamp_gain(raw);
        const double f = objective(x);
        ++evals;
        if (!std::isfinite(f)) {
            best.evaluations = evals;
            throw OptimizationFailure("objective returned a non-finite value", best);
        }
        if (f < best.value) {
            best.point = x;
            best.value = f;
        }
        return {x, f};
    };

    // One Nelder-Mead run from an axis-aligned simplex at `start`.
    auto run = [&](const Vertex& start) {
        std::array<Vertex, 4> s;
        s[0] = start;
        for (int i = 0; i < 3; ++i) {
            Rgb x = start.x;
            x[i] += config.initial_step;
            s[i + 1] = eval(x);
        }
        while (true) {
            std::stable_sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
            if (s[3].f - s[0].f <= config.tolerance) return std::pair{s[0], true};
            if (evals >= config.max_evals) return std::pair{s[0], false};

            Rgb centroid{};
            for (int i = 0; i < 3; ++i) {
                for (int c = 0; c < 3; ++c) centroid[c] += s[i].x[c] / 3.0;
            }
            const Vertex& worst = s[3];

            const Vertex xr = eval(along(centroid, worst.x, -config.reflection));
            if (xr.f < s[0].f) {
                const Vertex xe = eval(along(centroid, xr.x, config.expansion));
                s[3] = xe.f < xr.f ? xe : xr;
                continue;
            }
            if (xr.f < s[2].f) {
                s[3] = xr;
                continue;
            }
            if (xr.f < worst.f) {
                const Vertex xc = eval(along(centroid, xr.x, config.contraction));
                if (xc.f <= xr.f) {
                    s[3] = xc;
                    continue;
                }
            } else {
                const Vertex xcc = eval(along(centroid, worst.x, config.contraction));
                if (xcc.f < worst.f) {
                    s[3] = xcc;
                    continue;
                }
            }
            for (int i = 1; i < 4; ++i) s[i] = eval(along(s[0].x, s[i].x, config.shrink));
        }
    };

    // Clamping can flatten the simplex onto a bound; restart from the best
    // vertex until a restart stops improving.
    auto [current, converged] = run(eval({1.0, 1.0, 1.0}));
    while (converged && evals < config.max_evals) {
        const auto [next, next_converged] = run(current);
        const bool improved = next.f < current.f - config.tolerance;
        current = next;
        converged = next_converged;
        if (!improved) break;
    }

    SimplexResult out;
    out.point = current.x;
    out.value = current.f;
    out.evaluations = evals;
    out.converged = converged;
    return out;
}

std::vector<std::uint8_t> fit_validity(const LinearImage& input, const ReferenceImage& reference,
                                       double dark_threshold) {
    if (!input.same_shape(reference.image)) throw InvalidArgument("fit: input and reference dimensions differ");
    std::vector<std::uint8_t> use(input.pixel_count());
    const auto x = input.data();
    const auto r = reference.image.data();
    for (std::size_t p = 0; p < use.size(); ++p) {
        bool ok = true;
        for (int c = 0; c < 3; ++c) {
            if (!(x[3 * p + c] >= dark_threshold) || !(r[3 * p + c] > 0.0) || !std::isfinite(r[3 * p + c])) ok = false;
        }
        use[p] = ok ? 1 : 0;
    }
    return use;
}

FitObjective::FitObjective(const LinearImage& input, const ReferenceImage& reference,
                           const std::vector<std::uint8_t>& use) {
    if (!input.same_shape(reference.image) || use.size() != input.pixel_count()) {
        throw InvalidArgument("fit: dimension mismatch");
    }
    const auto x = input.data();
    const auto r = reference.image.data();
    for (std::size_t p = 0; p < use.size(); ++p) {
        if (!use[p]) continue;
        ++n_;
        for (int c = 0; c < 3; ++c) {
            const double xi = x[3 * p + c], yi = r[3 * p + c];
            sxx_[c] += xi * xi;
            sxy_[c] += xi * yi;
            syy_[c] += yi * yi;
        }
    }
}

double FitObjective::operator()(const Rgb& g) const {
    if (n_ == 0) return 0.0;
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += g[c] * g[c] * sxx_[c] - 2.0 * g[c] * sxy_[c] + syy_[c];
    // Rounding can push an exact fit a hair below zero.
    return std::max(s, 0.0) / static_cast<double>(n_);
}

double fitting_objective_direct(const LinearImage& input, const ReferenceImage& reference,
                                const std::vector<std::uint8_t>& use, const Rgb& g) {
    const auto x = input.data();
    const auto r = reference.image.data();
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < use.size(); ++p) {
        if (!use[p]) continue;
        ++n;
        for (int c = 0; c < 3; ++c) {
            const double d = x[3 * p + c] * g[c] - r[3 * p + c];
            s += d * d;
        }
    }
    return n == 0 ? 0.0 : s / static_cast<double>(n);
}

SimplexResult fit_gains(const LinearImage& input, const ReferenceImage& reference,
                        const std::vector<std::uint8_t>& use, const FitConfig& config) {
    const FitObjective objective(input, reference, use);
    if (objective.pixel_count() == 0) throw DegenerateScene("no valid pixels to fit");
    return simplex_minimize([&](const Rgb& g) { return objective(g); }, config.simplex);
}

GainTriple fit_global(const LinearImage& input, const ReferenceImage& reference, const FitConfig& config) {
    return fit_gains(input, reference, fit_validity(input, reference, config.dark_threshold), config).gains();
}

}  // namespace kwb
