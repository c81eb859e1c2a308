#include "cloudseg/losses.hpp"

#include "cloudseg/mask.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cloudseg {

namespace {

constexpr double kLogFloor = 1e-12;

void check_pair(const TensorShape& a, const TensorShape& b, const char* who) {
    if (!(a == b)) {
        throw std::invalid_argument(std::string(who) + ": probs/target shapes differ: " + a.str() + " vs " + b.str());
    }
    if (a.c < 1) {
        throw std::invalid_argument(std::string(who) + ": need at least one channel");
    }
}

} // namespace

LossResult categorical_cross_entropy(const ProbabilityField& pt) {
    const TensorShape s = pt.probs.shape();
    check_pair(s, pt.target.shape(), "categorical_cross_entropy");

    const std::int64_t plane = s.h * s.w;
    const float* probs = pt.probs.data().data();
    const float* target = pt.target.data().data();

    std::int64_t contributing = 0;
    for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t i = 0; i < plane; ++i) {
            double ysum = 0.0;
            for (std::int64_t c = 0; c < s.c; ++c) {
                ysum += target[(n * s.c + c) * plane + i];
            }
            if (ysum > 0.0) {
                ++contributing;
            }
        }
    }

    LossResult out;
    out.grad = Tensor(s);
    if (contributing == 0) {
        return out;
    }

    float* grad = out.grad.data().data();
    const double inv_k = 1.0 / static_cast<double>(contributing);
    double loss = 0.0;
    for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t i = 0; i < plane; ++i) {
            double ysum = 0.0;
            for (std::int64_t c = 0; c < s.c; ++c) {
                ysum += target[(n * s.c + c) * plane + i];
            }
            if (ysum <= 0.0) {
                continue;
            }
            for (std::int64_t c = 0; c < s.c; ++c) {
                const std::int64_t at = (n * s.c + c) * plane + i;
                const double p = probs[at];
                const double y = target[at];
                if (y > 0.0) {
                    loss -= y * std::log(std::max(p, kLogFloor));
                }
                grad[at] = static_cast<float>((p - y) * inv_k);
            }
        }
    }
    out.loss = loss * inv_k;
    return out;
}

LossResult soft_dice_loss(const ProbabilityField& pt, double smooth) {
    const TensorShape s = pt.probs.shape();
    check_pair(s, pt.target.shape(), "soft_dice_loss");
    if (smooth < 0.0) {
        throw std::invalid_argument("soft_dice_loss: smooth must be >= 0");
    }

    const std::int64_t plane = s.h * s.w;
    const float* probs = pt.probs.data().data();
    const float* target = pt.target.data().data();
    const double inv_c = 1.0 / static_cast<double>(s.c);

    LossResult out;
    out.grad = Tensor(s);
    float* grad = out.grad.data().data();

    double loss = 0.0;
    for (std::int64_t c = 0; c < s.c; ++c) {
        double s_py = 0.0;
        double s_p = 0.0;
        double s_y = 0.0;
        for (std::int64_t n = 0; n < s.n; ++n) {
            const std::int64_t base = (n * s.c + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
                const double p = probs[base + i];
                const double y = target[base + i];
                s_py += p * y;
                s_p += p;
                s_y += y;
            }
        }
        const double num = 2.0 * s_py + smooth;
        const double den = s_p + s_y + smooth;
        if (den == 0.0) {
            continue; // smooth = 0 and an everywhere-zero class: loss term 0 in the limit
        }
        loss += 1.0 - num / den;
        const double inv_den2 = 1.0 / (den * den);
        for (std::int64_t n = 0; n < s.n; ++n) {
            const std::int64_t base = (n * s.c + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
                const double y = target[base + i];
                grad[base + i] = static_cast<float>(-(2.0 * y * den - num) * inv_den2 * inv_c);
            }
        }
    }
    out.loss = loss * inv_c;
    return out;
}

LossResult combined_loss(const Tensor& logits, const Tensor& target, const LossWeights& w) {
    const TensorShape s = logits.shape();
    check_pair(s, target.shape(), "combined_loss");
    if (s.c != kClassCount) {
        throw std::invalid_argument("combined_loss: expected " + std::to_string(kClassCount) + " channels, got " +
                                    std::to_string(s.c));
    }
    if (w.cce_weight < 0.0 || w.cce_weight > 1.0 || w.dice_weight < 0.0 || w.dice_weight > 1.0) {
        throw std::invalid_argument("combined_loss: weights must lie in [0,1]");
    }

    const std::int64_t plane = s.h * s.w;
    const std::int64_t cc = s.c;
    const float* lg = logits.data().data();
    const float* tg = target.data().data();

    // 64-bit softmax; everything downstream stays in double
    std::vector<double> probs(static_cast<std::size_t>(s.numel()));
    for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t i = 0; i < plane; ++i) {
            double mx = lg[(n * cc) * plane + i];
            for (std::int64_t c = 1; c < cc; ++c) {
                mx = std::max(mx, static_cast<double>(lg[(n * cc + c) * plane + i]));
            }
            double sum = 0.0;
            for (std::int64_t c = 0; c < cc; ++c) {
                const std::int64_t at = (n * cc + c) * plane + i;
                probs[static_cast<std::size_t>(at)] = std::exp(static_cast<double>(lg[at]) - mx);
                sum += probs[static_cast<std::size_t>(at)];
            }
            for (std::int64_t c = 0; c < cc; ++c) {
                probs[static_cast<std::size_t>((n * cc + c) * plane + i)] /= sum;
            }
        }
    }

    std::vector<double> grad(probs.size(), 0.0);

    // CCE over contributing sites, gradient w.r.t. logits
    double cce = 0.0;
    std::int64_t contributing = 0;
    for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t i = 0; i < plane; ++i) {
            double ysum = 0.0;
            for (std::int64_t c = 0; c < cc; ++c) {
                ysum += tg[(n * cc + c) * plane + i];
            }
            if (ysum > 0.0) {
                ++contributing;
            }
        }
    }
    if (contributing > 0) {
        const double inv_k = 1.0 / static_cast<double>(contributing);
        for (std::int64_t n = 0; n < s.n; ++n) {
            for (std::int64_t i = 0; i < plane; ++i) {
                double ysum = 0.0;
                for (std::int64_t c = 0; c < cc; ++c) {
                    ysum += tg[(n * cc + c) * plane + i];
                }
                if (ysum <= 0.0) {
                    continue;
                }
                for (std::int64_t c = 0; c < cc; ++c) {
                    const std::int64_t at = (n * cc + c) * plane + i;
                    const double p = probs[static_cast<std::size_t>(at)];
                    const double y = tg[at];
                    if (y > 0.0) {
                        cce -= y * std::log(std::max(p, kLogFloor));
                    }
                    grad[static_cast<std::size_t>(at)] += w.cce_weight * (p - y) * inv_k;
                }
            }
        }
        cce *= inv_k;
    }

    // soft-dice on the 64-bit probs, chained through the softmax Jacobian
    double dice = 0.0;
    std::vector<double> num(static_cast<std::size_t>(cc));
    std::vector<double> den(static_cast<std::size_t>(cc));
    const double inv_c = 1.0 / static_cast<double>(cc);
    for (std::int64_t c = 0; c < cc; ++c) {
        double s_py = 0.0;
        double s_p = 0.0;
        double s_y = 0.0;
        for (std::int64_t n = 0; n < s.n; ++n) {
            const std::int64_t base = (n * cc + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
                s_py += probs[static_cast<std::size_t>(base + i)] * tg[base + i];
                s_p += probs[static_cast<std::size_t>(base + i)];
                s_y += tg[base + i];
            }
        }
        num[static_cast<std::size_t>(c)] = 2.0 * s_py + 1.0;
        den[static_cast<std::size_t>(c)] = s_p + s_y + 1.0;
        dice += 1.0 - num[static_cast<std::size_t>(c)] / den[static_cast<std::size_t>(c)];
    }
    dice *= inv_c;

    for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t i = 0; i < plane; ++i) {
            std::array<double, kClassCount> gp{};
            double dot = 0.0;
            for (std::int64_t c = 0; c < cc; ++c) {
                const std::int64_t at = (n * cc + c) * plane + i;
                const double d = den[static_cast<std::size_t>(c)];
                gp[c] = -(2.0 * tg[at] * d - num[static_cast<std::size_t>(c)]) / (d * d) * inv_c;
                dot += gp[c] * probs[static_cast<std::size_t>(at)];
            }
            for (std::int64_t c = 0; c < cc; ++c) {
                const std::int64_t at = (n * cc + c) * plane + i;
                grad[static_cast<std::size_t>(at)] +=
                    w.dice_weight * probs[static_cast<std::size_t>(at)] * (gp[c] - dot);
            }
        }
    }

    LossResult out;
    out.loss = w.cce_weight * cce + w.dice_weight * dice;
    out.grad = Tensor(s);
    float* g = out.grad.data().data();
    for (std::size_t i = 0; i < grad.size(); ++i) {
        g[i] = static_cast<float>(grad[i]);
    }
    return out;
}

} // namespace cloudseg
