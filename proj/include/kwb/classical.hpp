#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "kwb/color.hpp"

namespace kwb {

enum class ClassicalMethod { WhitePatch, GrayWorld, ShadesOfGray, GrayEdge1, GrayEdge2 };

struct EstimatorConfig {
    ClassicalMethod method = ClassicalMethod::GrayWorld;
    double minkowski_p = 6.0;
    double smoothing_sigma = 1.0;
    // Pixels with any channel >= threshold * (image max) are left out.
    double saturation_threshold = 0.98;

    void validate() const;
};

std::string_view to_string(ClassicalMethod m);
std::optional<ClassicalMethod> parse_classical_method(std::string_view name);

// Unit-norm illuminant direction from image statistics.
// Throws DegenerateScene when the statistic vanishes.
IlluminantVector estimate_classical(const LinearImage& image, const EstimatorConfig& config);

}  // namespace kwb
