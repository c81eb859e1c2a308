#pragma once

#include "cloudseg/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace cloudseg {

struct RAdamHyperparams {
    double lr{1e-3};
    double beta1{0.9};
    double beta2{0.999};
    double eps{1e-8};
};

struct RAdamState {
    std::int64_t t{0};
    std::vector<double> m;
    std::vector<double> v;
    double rho_inf{0.0};

    RAdamState() = default;
    RAdamState(std::size_t param_count, const RAdamHyperparams& hp);
};

double radam_rho_t(std::int64_t t, double beta2);
double radam_r_t(double rho_t, double rho_inf);

// One RAdam update in place. While rho_t <= 4 the un-rectified momentum
// branch is taken: params -= lr * m_hat.
void radam_step(RAdamState& state, std::span<double> params, std::span<const double> grads,
                const RAdamHyperparams& hp);

struct TrainHeadResult {
    ConvWeights head;                 // 1x1 conv, feature channels -> 4, with bias
    std::vector<double> loss_history; // combined loss per optimizer step
};

// Trains the 4-class 1x1 head on frozen features under the 0.7/0.3 combined
// loss with analytic gradients. Head starts at zero; shuffling is seeded, the
// whole run is sequential double-precision arithmetic, so the loss history is
// bitwise reproducible for a fixed seed.
TrainHeadResult train_head(const Tensor& features, const Tensor& targets, const RAdamHyperparams& hp,
                           int epochs, int batch, std::uint64_t seed);

} // namespace cloudseg
