#pragma once

#include <vector>

#include "kwb/color.hpp"

namespace kwb {

// Box-filter resampling: every output pixel is the exact area-weighted mean of
// the input pixels it covers. Works for both shrinking and enlarging.
std::vector<double> resize_area(const std::vector<double>& src, int height, int width, int channels,
                                int out_height, int out_width);
LinearImage resize_area(const LinearImage& image, int out_height, int out_width);

// Interleaved <-> planar (channel-major) layouts.
std::vector<double> to_planar(const LinearImage& image);
LinearImage from_planar(const std::vector<double>& planar, int height, int width);

}  // namespace kwb
