#pragma once

#include <string>
#include <vector>

#include "ndno/pointcloud.hpp"

namespace ndno::train {

// Table-1 training bundle; applies to both stages unless overridden.
struct TrainConfig {
    int batch_size = 4;
    double learning_rate = 1e-2;
    int epochs = 500;
    double beta1 = 1e4;   // invertibility coefficient
    double beta2 = 1e-3;  // smoothness coefficient
    double beta3 = 1e5;   // similarity coefficient
    double adam_beta_m = 0.9;
    double adam_beta_v = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    double lr_min = 0.0;

    void validate() const;
};

// eta(t) = lr_min + (lr - lr_min) (1 + cos(pi t / epochs)) / 2, t in [0, epochs]
double cosine_lr(int t, const TrainConfig& cfg);

class Adam {
public:
    Adam(double beta_m, double beta_v, double eps) : bm_(beta_m), bv_(beta_v), eps_(eps) {}
    explicit Adam(const TrainConfig& cfg) : Adam(cfg.adam_beta_m, cfg.adam_beta_v, cfg.adam_eps) {}

    // params[i] <- params[i] - rate * mhat / (sqrt(vhat) + eps). Moment buffers
    // are allocated on first use; NaN gradients raise NumericError naming the
    // block.
    void step(const std::vector<Mat*>& params, const std::vector<Mat>& grads,
              const std::vector<std::string>& names, double rate);

    long steps_taken() const { return t_; }

private:
    double bm_, bv_, eps_;
    std::vector<Mat> m_, v_;
    long t_ = 0;
};

}  // namespace ndno::train
