#include "ndno/optim.hpp"

#include <cmath>

namespace ndno::train {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ValidationError("TrainConfig.batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("TrainConfig.learning_rate must be > 0");
    if (epochs < 1) throw ValidationError("TrainConfig.epochs must be >= 1");
    if (beta1 < 0.0 || beta2 < 0.0 || beta3 < 0.0)
        throw ValidationError("TrainConfig: loss coefficients must be >= 0");
    if (!(adam_beta_m > 0.0 && adam_beta_m < 1.0) || !(adam_beta_v > 0.0 && adam_beta_v < 1.0))
        throw ValidationError("TrainConfig: adam moment decays must lie in (0, 1)");
    if (!(adam_eps > 0.0)) throw ValidationError("TrainConfig.adam_eps must be > 0");
    if (lr_min < 0.0) throw ValidationError("TrainConfig.lr_min must be >= 0");
}

double cosine_lr(int t, const TrainConfig& cfg) {
    if (t < 0 || t > cfg.epochs)
        throw ValidationError("cosine_lr: epoch " + std::to_string(t) + " outside [0, " +
                              std::to_string(cfg.epochs) + "]");
    return cfg.lr_min + 0.5 * (cfg.learning_rate - cfg.lr_min) *
                            (1.0 + std::cos(M_PI * static_cast<double>(t) /
                                            static_cast<double>(cfg.epochs)));
}

void Adam::step(const std::vector<Mat*>& params, const std::vector<Mat>& grads,
                const std::vector<std::string>& names, double rate) {
    if (params.size() != grads.size())
        throw ValidationError("Adam::step: parameter/gradient count mismatch");
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = Mat::Zero(params[i]->rows(), params[i]->cols());
            v_[i] = Mat::Zero(params[i]->rows(), params[i]->cols());
        }
    }
    ++t_;
    const double bc_m = 1.0 - std::pow(bm_, static_cast<double>(t_));
    const double bc_v = 1.0 - std::pow(bv_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Mat& g = grads[i];
        if (!g.allFinite())
            throw NumericError("Adam::step: non-finite gradient in block '" +
                               (i < names.size() ? names[i] : std::to_string(i)) + "'");
        m_[i] = bm_ * m_[i] + (1.0 - bm_) * g;
        v_[i] = bv_ * v_[i] + (1.0 - bv_) * g.cwiseProduct(g);
        const Mat mhat = m_[i] / bc_m;
        const Mat vhat = v_[i] / bc_v;
        params[i]->noalias() -= rate * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
    }
}

}  // namespace ndno::train
