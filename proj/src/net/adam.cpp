#include "kwb/net/adam.hpp"

#include <cmath>

#include "kwb/errors.hpp"

namespace kwb::net {

void Adam::step(std::vector<double>& params, const std::vector<double>& grad, const TrainConfig& cfg, long t) {
    if (t < 1) throw InvalidArgument("Adam step index must be >= 1");
    if (grad.size() != params.size() || m_.size() != params.size()) throw InvalidArgument("Adam size mismatch");
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
        v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
}

}  // namespace kwb::net
