// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <memory>
#include <unordered_map>
#include <vector>

#include "fcdgan/autograd.hpp"

namespace fcdgan::optim {

/// Linear warm-up: ramps from 10% of the base rate at epoch 0 to the full
/// rate at `warmup_epochs`, constant afterwards.
inline double warmup_schedule(double base_lr, int epoch, int warmup_epochs) {
    if (warmup_epochs <= 0 || epoch >= warmup_epochs) return base_lr;
    return base_lr * (0.1 + 0.9 * static_cast<double>(epoch) / static_cast<double>(warmup_epochs));
}

template <typename T>
class Optimizer {
  public:
    explicit Optimizer(std::vector<ag::Param<T>> params, T lr) : params_(std::move(params)), lr_(lr) {}
    virtual ~Optimizer() = default;

    void set_lr(T lr) { lr_ = lr; }
    T lr() const { return lr_; }

    void zero_grad() {
        for (auto& p : params_) p->zero_grad();
    }

    const std::vector<ag::Param<T>>& params() const { return params_; }

    virtual void step() = 0;

  protected:
    std::vector<ag::Param<T>> params_;
    T lr_;
};

/// Adam; classic coupled L2 weight decay (decay added to the gradient).
template <typename T>
class Adam : public Optimizer<T> {
  public:
    Adam(std::vector<ag::Param<T>> params, T lr, T beta1 = T(0.9), T beta2 = T(0.999), T eps = T(1e-8),
         T weight_decay = T(0))
        : Optimizer<T>(std::move(params), lr), b1_(beta1), b2_(beta2), eps_(eps), wd_(weight_decay) {
        m_.resize(this->params_.size());
        v_.resize(this->params_.size());
        for (std::size_t i = 0; i < this->params_.size(); ++i) {
            m_[i] = Tensor<T>::zeros(this->params_[i]->value.shape);
            v_[i] = Tensor<T>::zeros(this->params_[i]->value.shape);
        }
    }

    void step() override {
        ++t_;
        const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(b1_), t_));
        const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(b2_), t_));
        for (std::size_t i = 0; i < this->params_.size(); ++i) {
            auto& p = *this->params_[i];
            if (p.frozen) continue;
            for (std::int64_t j = 0; j < p.value.numel(); ++j) {
                T g = p.grad[j];
                if (wd_ != T(0)) g += wd_ * p.value[j];
                m_[i][j] = b1_ * m_[i][j] + (T(1) - b1_) * g;
                v_[i][j] = b2_ * v_[i][j] + (T(1) - b2_) * g * g;
                const T mh = m_[i][j] / bc1;
                const T vh = v_[i][j] / bc2;
                p.value[j] -= this->lr_ * mh / (std::sqrt(vh) + eps_);
            }
        }
    }

  private:
    T b1_, b2_, eps_, wd_;
    int t_ = 0;
    std::vector<Tensor<T>> m_, v_;
};

template <typename T>
class RMSProp : public Optimizer<T> {
  public:
    RMSProp(std::vector<ag::Param<T>> params, T lr, T alpha = T(0.99), T eps = T(1e-8))
        : Optimizer<T>(std::move(params), lr), alpha_(alpha), eps_(eps) {
        sq_.resize(this->params_.size());
        for (std::size_t i = 0; i < this->params_.size(); ++i)
            sq_[i] = Tensor<T>::zeros(this->params_[i]->value.shape);
    }

    void step() override {
        if (this->lr_ == T(0)) return;
        for (std::size_t i = 0; i < this->params_.size(); ++i) {
            auto& p = *this->params_[i];
            if (p.frozen) continue;
            for (std::int64_t j = 0; j < p.value.numel(); ++j) {
                const T g = p.grad[j];
                sq_[i][j] = alpha_ * sq_[i][j] + (T(1) - alpha_) * g * g;
                p.value[j] -= this->lr_ * g / (std::sqrt(sq_[i][j]) + eps_);
            }
        }
    }

  private:
    T alpha_, eps_;
    std::vector<Tensor<T>> sq_;
};

}  // namespace fcdgan::optim
