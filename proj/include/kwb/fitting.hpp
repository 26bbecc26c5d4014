#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "kwb/color.hpp"
#include "kwb/confidence.hpp"
#include "kwb/kernel_field.hpp"

namespace kwb {

struct SimplexConfig {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    double initial_step = 0.1;
    int max_evals = 600;
    double tolerance = 1e-10;  // on f(worst) - f(best)

    void validate() const;
};

struct SimplexResult {
    Rgb point{1.0, 1.0, 1.0};
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;

    GainTriple gains() const { return GainTriple(point); }
};

class OptimizationFailure : public Error {
public:
    OptimizationFailure(const std::string& what, SimplexResult best) : Error(what), best_(best) {}
    const SimplexResult& best() const { return best_; }

private:
    SimplexResult best_;
};

constexpr double kMinGain = 1e-4;

// Nelder-Mead over gain triples. Starts at (1, 1, 1) plus one vertex offset by
// initial_step along each axis; every candidate is clamped to >= kMinGain.
SimplexResult simplex_minimize(const std::function<double(const Rgb&)>& objective, const SimplexConfig& config);

struct FitConfig {
    SimplexConfig simplex;
    double dark_threshold = kDefaultDarkThreshold;
};

// Pixels usable for fitting: every input channel >= dark_threshold and every
// reference channel > 0.
std::vector<std::uint8_t> fit_validity(const LinearImage& input, const ReferenceImage& reference,
                                       double dark_threshold);

// Mean over selected pixels of ||apply_diagonal(input, g) - reference||^2.
// Evaluated through per-channel moments; fitting_objective_direct is the
// pixel loop it must agree with.
class FitObjective {
public:
    FitObjective(const LinearImage& input, const ReferenceImage& reference, const std::vector<std::uint8_t>& use);
    double operator()(const Rgb& g) const;
    std::size_t pixel_count() const { return n_; }

private:
    std::size_t n_ = 0;
    Rgb sxx_{}, sxy_{}, syy_{};
};

double fitting_objective_direct(const LinearImage& input, const ReferenceImage& reference,
                                const std::vector<std::uint8_t>& use, const Rgb& g);

// Fit over the pixels flagged in `use` (already intersected with validity by the caller).
SimplexResult fit_gains(const LinearImage& input, const ReferenceImage& reference,
                        const std::vector<std::uint8_t>& use, const FitConfig& config);

// Fit over every valid pixel. Throws DegenerateScene when none is valid.
GainTriple fit_global(const LinearImage& input, const ReferenceImage& reference, const FitConfig& config = {});

}  // namespace kwb
