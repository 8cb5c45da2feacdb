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

#ifndef LITEBOUND_LOSSES_HPP
#define LITEBOUND_LOSSES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "litebound/error.hpp"
#include "litebound/frequency.hpp"
#include "litebound/student.hpp"
#include "litebound/tensor.hpp"

namespace litebound {

inline constexpr double kProbabilityClamp = 1e-7;
inline constexpr double kDiceSmoothing = 1.0;

/// Loss weights: lambda[0] scales bce + dice, lambda[1..4] scale the L1..L4 alignments.
using LossWeights = std::array<double, 5>;
inline constexpr LossWeights kDefaultLambdas{0.6, 0.1, 0.1, 0.1, 0.1};

struct LossBreakdown {
  double bce = 0.0;
  double dice = 0.0;
  std::array<double, 4> align{};  // L1..L4
  double total = 0.0;
};

template <typename T>
struct SegLoss {
  double bce = 0.0;
  double dice = 0.0;
  Tensor<T> grad_bce;   // d bce / d pred
  Tensor<T> grad_dice;  // d dice / d pred
};

/// Mean binary cross-entropy (probabilities clamped to [1e-7, 1-1e-7]) and
/// smoothed dice loss 1 - (2 sum p g + 1) / (sum p + sum g + 1).
template <typename T>
SegLoss<T> seg_loss(const Tensor<T>& pred, const Tensor<T>& gt, bool with_grad = true) {
  if (pred.shape() != gt.shape())
    throw ShapeError("seg_loss: prediction " + pred.shape().str() + " vs mask " + gt.shape().str());
  const double n = static_cast<double>(pred.size());
  SegLoss<T> out;
  double bce = 0.0, inter = 0.0, sum_p = 0.0, sum_g = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = static_cast<double>(pred[i]);
    const double g = static_cast<double>(gt[i]);
    const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
    bce -= g * std::log(pc) + (1.0 - g) * std::log(1.0 - pc);
    inter += p * g;
    sum_p += p;
    sum_g += g;
  }
  out.bce = bce / n;
  const double num = 2.0 * inter + kDiceSmoothing;
  const double den = sum_p + sum_g + kDiceSmoothing;
  out.dice = 1.0 - num / den;
  if (with_grad) {
    out.grad_bce = Tensor<T>(pred.shape());
    out.grad_dice = Tensor<T>(pred.shape());
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double p = static_cast<double>(pred[i]);
      const double g = static_cast<double>(gt[i]);
      const bool clamped = p < kProbabilityClamp || p > 1.0 - kProbabilityClamp;
      out.grad_bce[i] = clamped ? T{} : static_cast<T>((-g / p + (1.0 - g) / (1.0 - p)) / n);
      out.grad_dice[i] = static_cast<T>(-(2.0 * g * den - num) / (den * den));
    }
  }
  return out;
}

/// Mean squared error over all elements; gradient w.r.t. `latent` in `grad`.
template <typename T>
double align_loss(const Tensor<T>& latent, const Tensor<T>& target, Tensor<T>* grad = nullptr) {
  if (latent.shape() != target.shape())
    throw ShapeError("align_loss: latent " + latent.shape().str() + " vs target " + target.shape().str());
  const double n = static_cast<double>(latent.size());
  double s = 0.0;
  if (grad) *grad = Tensor<T>(latent.shape());
  for (std::size_t i = 0; i < latent.size(); ++i) {
    const double d = static_cast<double>(latent[i]) - static_cast<double>(target[i]);
    s += d * d;
    if (grad) (*grad)[i] = static_cast<T>(2.0 * d / n);
  }
  return s / n;
}

/// Band-routed alignment targets for L1..L4.
template <typename T>
struct AlignmentTargets {
  std::array<Tensor<T>, 4> target;
};

/// L1 <- low(semantic), L2 <- high(semantic), L3 <- low(boundary), L4 <- high(boundary).
template <typename T>
AlignmentTargets<T> assemble_targets(const Tensor<T>& semantic, const Tensor<T>& boundary,
                                     const freq::BandMasks& masks) {
  if (semantic.shape() != boundary.shape())
    throw ShapeError("assemble_targets: semantic " + semantic.shape().str() + " vs boundary " + boundary.shape().str());
  auto sem = freq::split_bands(semantic, masks);
  auto bnd = freq::split_bands(boundary, masks);
  return {{std::move(sem.low_spatial), std::move(sem.high_spatial), std::move(bnd.low_spatial),
           std::move(bnd.high_spatial)}};
}

/// Loss terms active in a phase.
struct PhaseLossSpec {
  int phase = 1;
  bool distill = true;  // false: phases 2-3 fall back to bce + dice
  LossWeights lambdas = kDefaultLambdas;

  bool uses_alignment() const { return phase >= 2 && distill; }
};

template <typename T>
struct PhaseLoss {
  LossBreakdown breakdown;
  Tensor<T> grad_logits;
  LatentQuartet<T> grad_latents;  // empty tensors when alignment is inactive
};

/// Composes the phase objective and its gradients w.r.t. logits and latents.
///
/// phase 1 (or distillation off): bce + dice.
/// phases 2, 3: l0 (bce + dice) + sum_i l_i align(L_i, target_i).
template <typename T>
PhaseLoss<T> phase_loss(const PhaseLossSpec& spec, const Prediction<T>& pred, const Tensor<T>& gt,
                        const LatentQuartet<T>& latents, const AlignmentTargets<T>* targets) {
  if (spec.phase < 1 || spec.phase > 3) throw ConfigError("phase must be 1, 2 or 3");
  const bool align = spec.uses_alignment();
  if (align && !targets) throw ConfigError("phase " + std::to_string(spec.phase) + " requires distillation targets");

  PhaseLoss<T> out;
  auto seg = seg_loss(pred.probability, gt);
  out.breakdown.bce = seg.bce;
  out.breakdown.dice = seg.dice;
  const double seg_weight = align ? spec.lambdas[0] : 1.0;

  out.grad_logits = Tensor<T>(pred.logits.shape());
  for (std::size_t i = 0; i < pred.logits.size(); ++i) {
    const double p = static_cast<double>(pred.probability[i]);
    const double dp = static_cast<double>(seg.grad_bce[i]) + static_cast<double>(seg.grad_dice[i]);
    out.grad_logits[i] = static_cast<T>(seg_weight * dp * p * (1.0 - p));
  }

  double total = seg_weight * (seg.bce + seg.dice);
  if (align) {
    for (std::size_t k = 0; k < 4; ++k) {
      Tensor<T> g;
      out.breakdown.align[k] = align_loss(latents[k], targets->target[k], &g);
      const double lam = spec.lambdas[k + 1];
      total += lam * out.breakdown.align[k];
      g *= static_cast<T>(lam);
      out.grad_latents[k] = std::move(g);
    }
  }
  out.breakdown.total = total;
  return out;
}

/// Recomputes the total from logged components (used to audit training logs).
inline double recompose_total(const PhaseLossSpec& spec, const LossBreakdown& b) {
  if (!spec.uses_alignment()) return b.bce + b.dice;
  double t = spec.lambdas[0] * (b.bce + b.dice);
  for (std::size_t k = 0; k < 4; ++k) t += spec.lambdas[k + 1] * b.align[k];
  return t;
}

}  // namespace litebound

#endif  // LITEBOUND_LOSSES_HPP
