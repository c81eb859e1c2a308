#include "cloudseg/radam.hpp"

#include "cloudseg/losses.hpp"
#include "cloudseg/mask.hpp"
#include "cloudseg/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cloudseg {

namespace {

void check_hyperparams(const RAdamHyperparams& hp) {
    // lr = 0 is allowed (freezes the parameters); negative is not
    if (!(hp.lr >= 0.0) || !(hp.eps > 0.0)) {
        throw std::invalid_argument("radam: need lr >= 0 and eps > 0");
    }
    if (hp.beta1 < 0.0 || hp.beta1 >= 1.0 || hp.beta2 < 0.0 || hp.beta2 >= 1.0) {
        throw std::invalid_argument("radam: betas must lie in [0, 1)");
    }
}

} // namespace

RAdamState::RAdamState(std::size_t param_count, const RAdamHyperparams& hp)
    : m(param_count, 0.0), v(param_count, 0.0), rho_inf(2.0 / (1.0 - hp.beta2) - 1.0) {
    check_hyperparams(hp);
}

double radam_rho_t(std::int64_t t, double beta2) {
    const double rho_inf = 2.0 / (1.0 - beta2) - 1.0;
    const double b2t = std::pow(beta2, static_cast<double>(t));
    return rho_inf - 2.0 * static_cast<double>(t) * b2t / (1.0 - b2t);
}

double radam_r_t(double rho_t, double rho_inf) {
    return std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
}

void radam_step(RAdamState& state, std::span<double> params, std::span<const double> grads,
                const RAdamHyperparams& hp) {
    check_hyperparams(hp);
    if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
        throw std::invalid_argument("radam_step: parameter/gradient/state lengths differ");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            throw std::invalid_argument("radam_step: non-finite gradient at parameter " + std::to_string(i));
        }
    }

    state.t += 1;
    const auto t = static_cast<double>(state.t);
    const double b1t = std::pow(hp.beta1, t);
    const double b2t = std::pow(hp.beta2, t);
    const double rho_t = state.rho_inf - 2.0 * t * b2t / (1.0 - b2t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * grads[i];
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * grads[i] * grads[i];
    }

    if (rho_t > 4.0) {
        const double r_t = radam_r_t(rho_t, state.rho_inf);
        const double v_corr = 1.0 / (1.0 - b2t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double m_hat = state.m[i] / (1.0 - b1t);
            params[i] -= hp.lr * r_t * m_hat / (std::sqrt(state.v[i] * v_corr) + hp.eps);
        }
    } else {
        for (std::size_t i = 0; i < params.size(); ++i) {
            params[i] -= hp.lr * state.m[i] / (1.0 - b1t);
        }
    }
}

TrainHeadResult train_head(const Tensor& features, const Tensor& targets, const RAdamHyperparams& hp,
                           int epochs, int batch, std::uint64_t seed) {
    const TensorShape fs = features.shape();
    const TensorShape ts = targets.shape();
    if (fs.n != ts.n || fs.h != ts.h || fs.w != ts.w) {
        throw std::invalid_argument("train_head: feature/target dims differ: " + fs.str() + " vs " + ts.str());
    }
    if (ts.c != kClassCount) {
        throw std::invalid_argument("train_head: targets must have " + std::to_string(kClassCount) + " channels");
    }
    if (fs.c < 1) {
        throw std::invalid_argument("train_head: need at least one feature channel");
    }
    if (epochs < 1 || batch < 1) {
        throw std::invalid_argument("train_head: epochs and batch must be >= 1");
    }

    const std::int64_t plane = fs.h * fs.w;
    const std::int64_t fc = fs.c;
    const std::size_t wcount = static_cast<std::size_t>(kClassCount * fc);
    std::vector<double> params(wcount + kClassCount, 0.0); // weights then biases
    RAdamState state(params.size(), hp);

    TrainHeadResult result;
    std::vector<std::int64_t> order(static_cast<std::size_t>(fs.n));
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> grads(params.size());
    for (int epoch = 0; epoch < epochs; ++epoch) {
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
        for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(batch)) {
            const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(batch));
            const auto bn = static_cast<std::int64_t>(hi - lo);

            // logits for the batch: 1x1 head applied per record
            Tensor logits({bn, kClassCount, fs.h, fs.w});
            Tensor target({bn, kClassCount, fs.h, fs.w});
            for (std::int64_t b = 0; b < bn; ++b) {
                const std::int64_t rec = order[lo + static_cast<std::size_t>(b)];
                for (std::int64_t oc = 0; oc < kClassCount; ++oc) {
                    float* out = logits.plane(b, oc);
                    const double bias = params[wcount + static_cast<std::size_t>(oc)];
                    std::vector<double> acc(static_cast<std::size_t>(plane), bias);
                    for (std::int64_t ic = 0; ic < fc; ++ic) {
                        const double w = params[static_cast<std::size_t>(oc * fc + ic)];
                        const float* f = features.plane(rec, ic);
                        for (std::int64_t i = 0; i < plane; ++i) {
                            acc[static_cast<std::size_t>(i)] += w * f[i];
                        }
                    }
                    for (std::int64_t i = 0; i < plane; ++i) {
                        out[i] = static_cast<float>(acc[static_cast<std::size_t>(i)]);
                    }
                    std::copy_n(targets.plane(rec, oc), plane, target.plane(b, oc));
                }
            }

            const LossResult loss = combined_loss(logits, target);
            result.loss_history.push_back(loss.loss);

            // chain rule: dL/dW[oc,ic] = sum over sites of g[oc] * x[ic],
            // dL/db[oc] = sum of g[oc]
            std::fill(grads.begin(), grads.end(), 0.0);
            for (std::int64_t b = 0; b < bn; ++b) {
                const std::int64_t rec = order[lo + static_cast<std::size_t>(b)];
                for (std::int64_t oc = 0; oc < kClassCount; ++oc) {
                    const float* g = loss.grad.plane(b, oc);
                    double gsum = 0.0;
                    for (std::int64_t ic = 0; ic < fc; ++ic) {
                        const float* f = features.plane(rec, ic);
                        double acc = 0.0;
                        for (std::int64_t i = 0; i < plane; ++i) {
                            acc += static_cast<double>(g[i]) * static_cast<double>(f[i]);
                        }
                        grads[static_cast<std::size_t>(oc * fc + ic)] += acc;
                    }
                    for (std::int64_t i = 0; i < plane; ++i) {
                        gsum += g[i];
                    }
                    grads[wcount + static_cast<std::size_t>(oc)] += gsum;
                }
            }
            radam_step(state, params, grads, hp);
        }
    }

    ConvWeights head;
    head.kernel = Tensor({kClassCount, fc, 1, 1});
    head.bias.emplace(kClassCount, 0.0f);
    for (std::int64_t oc = 0; oc < kClassCount; ++oc) {
        for (std::int64_t ic = 0; ic < fc; ++ic) {
            head.kernel.at(oc, ic, 0, 0) = static_cast<float>(params[static_cast<std::size_t>(oc * fc + ic)]);
        }
        (*head.bias)[static_cast<std::size_t>(oc)] = static_cast<float>(params[wcount + static_cast<std::size_t>(oc)]);
    }
    result.head = std::move(head);
    return result;
}

} // namespace cloudseg
