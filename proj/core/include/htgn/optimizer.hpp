#ifndef HTGN_OPTIMIZER_HPP
#define HTGN_OPTIMIZER_HPP

#include <cstdint>
#include <vector>

#include "htgn/tensor.hpp"

namespace htgn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction over a fixed parameter list. step() consumes and
/// zeroes the accumulated gradients.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Tensor> params, AdamConfig cfg = {});

    void step();
    std::int64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Tensor> params_;
    std::vector<Eigen::MatrixXd> m_, v_;
    AdamConfig cfg_;
    std::int64_t step_count_ = 0;
};

}  // namespace htgn

#endif  // HTGN_OPTIMIZER_HPP
