#pragma once

#include <cmath>

#include "sdp/param_store.hpp"

namespace sdp {

// Adam with bias correction. Updates are elementwise and sequential, so a
// fixed seed gives bit-identical trajectories.
template <typename T>
class Adam {
  public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    void step(ParamStore<T>& params, const ParamStore<T>& grads) {
        if (!initialized_) {
            m_ = params.zeros_like();
            v_ = params.zeros_like();
            initialized_ = true;
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
        for (auto& [name, p] : params) {
            const Tensor<T>& g = grads.at(name);
            Tensor<T>& m = m_.at(name);
            Tensor<T>& v = v_.at(name);
            for (int64_t i = 0; i < p.size(); ++i) {
                const double gi = static_cast<double>(g[i]);
                const double mi = b1_ * static_cast<double>(m[i]) + (1.0 - b1_) * gi;
                const double vi = b2_ * static_cast<double>(v[i]) + (1.0 - b2_) * gi * gi;
                m[i] = static_cast<T>(mi);
                v[i] = static_cast<T>(vi);
                const double mhat = mi / bc1;
                const double vhat = vi / bc2;
                p[i] = static_cast<T>(static_cast<double>(p[i]) -
                                      lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

    int64_t steps_taken() const { return t_; }

  private:
    double lr_, b1_, b2_, eps_;
    int64_t t_ = 0;
    bool initialized_ = false;
    ParamStore<T> m_, v_;
};

} // namespace sdp
