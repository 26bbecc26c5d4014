#pragma once

#include <vector>

#include "kwb/net/config.hpp"

namespace kwb::net {

class Adam {
public:
    Adam() = default;
    explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

    // Bias-corrected update for step index t >= 1.
    void step(std::vector<double>& params, const std::vector<double>& grad, const TrainConfig& config, long t);

    std::vector<double>& m() { return m_; }
    std::vector<double>& v() { return v_; }
    const std::vector<double>& m() const { return m_; }
    const std::vector<double>& v() const { return v_; }

private:
    std::vector<double> m_, v_;
};

}  // namespace kwb::net
