#pragma once

#include "cloudseg/tensor.hpp"

namespace cloudseg {

// Softmax probabilities plus a per-site one-hot (or all-zero = unlabeled)
// target of the same shape.
struct ProbabilityField {
    Tensor probs;
    Tensor target;
};

struct LossWeights {
    double cce_weight{0.7};
    double dice_weight{0.3};
};

struct LossResult {
    double loss{0.0};
    Tensor grad;
};

// Mean over contributing sites (target channel-sum > 0) of -sum_c y*log(p).
// Gradient is w.r.t. the logits that produced the probs via softmax:
// (p - y) / #contributing at contributing sites, 0 elsewhere.
// No contributing sites -> loss 0, gradient 0.
LossResult categorical_cross_entropy(const ProbabilityField& pt);

// Per class c over all sites: 1 - (2*sum(p*y) + smooth)/(sum(p) + sum(y) + smooth),
// averaged over classes. Gradient is w.r.t. the probabilities.
LossResult soft_dice_loss(const ProbabilityField& pt, double smooth = 1.0);

// softmax(logits) -> cce_weight*CCE + dice_weight*soft-dice. The softmax and
// both loss terms are evaluated in 64-bit end to end so the returned loss is
// smooth enough for 1e-5 finite-difference gradient checks. Gradient is
// w.r.t. the logits (soft-dice chained through the softmax Jacobian).
LossResult combined_loss(const Tensor& logits, const Tensor& target, const LossWeights& w = {});

} // namespace cloudseg
