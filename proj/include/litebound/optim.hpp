// Copyright 2026 The litebound Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LITEBOUND_OPTIM_HPP
#define LITEBOUND_OPTIM_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "litebound/nn.hpp"

namespace litebound::nn {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed set of parameters.
template <typename T>
class Adam {
public:
  Adam(std::vector<Parameter<T>*> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
    for (auto* p : params_) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }

  const std::vector<Parameter<T>*>& parameters() const noexcept { return params_; }
  long long steps() const noexcept { return t_; }
  void set_lr(double lr) noexcept { opts_.lr = lr; }
  double lr() const noexcept { return opts_.lr; }

  bool manages(const Parameter<T>* p) const {
    return std::find(params_.begin(), params_.end(), p) != params_.end();
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = *params_[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = static_cast<double>(p.grad[i]);
        m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g;
        v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g;
        const double update = opts_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opts_.eps);
        p.value[i] = static_cast<T>(static_cast<double>(p.value[i]) - update);
      }
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

private:
  std::vector<Parameter<T>*> params_;
  AdamOptions opts_;
  std::vector<std::vector<double>> m_, v_;
  long long t_ = 0;
};

}  // namespace litebound::nn

#endif  // LITEBOUND_OPTIM_HPP
