#include "htgn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace htgn {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor& p : params_) {
        if (!p.requires_grad())
            throw std::invalid_argument("AdamOptimizer: parameter without gradient storage");
        m_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
        v_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    }
}

void AdamOptimizer::step() {
    ++step_count_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        const Eigen::MatrixXd& g = p.grad();
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
        Eigen::MatrixXd m_hat = m_[i] / bc1;
        Eigen::MatrixXd v_hat = v_[i] / bc2;
        Eigen::MatrixXd update =
            m_hat.array() / (v_hat.array().sqrt() + cfg_.epsilon);
        p.set_value(p.value() - cfg_.lr * update.matrix());
        p.zero_grad();
    }
}

}  // namespace htgn
