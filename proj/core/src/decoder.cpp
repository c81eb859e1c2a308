#include "cloudseg/decoder.hpp"

#include <cmath>
#include <stdexcept>

namespace cloudseg {

namespace {

// Channel counts of the five encoder taps, shallow (/2) to deep (/32).
std::array<std::int64_t, 5> tap_channels(const EncoderConfig& enc) {
    std::array<std::int64_t, 5> taps{};
    std::size_t level = 0;
    std::int64_t current = enc.stem_channels;
    for (const BlockSpec& b : expand_stages(enc)) {
        if (b.stride == 2) {
            if (level >= taps.size()) {
                throw std::invalid_argument("encoder config has more than 5 resolution levels");
            }
            taps[level++] = current;
        }
        current = b.out_channels;
    }
    if (level != taps.size() - 1) {
        throw std::invalid_argument("encoder config does not yield exactly 5 feature levels");
    }
    taps[level] = current;
    return taps;
}

ConvWeights make_conv3x3(std::int64_t oc, std::int64_t ic) {
    ConvWeights w;
    w.kernel = Tensor({oc, ic, 3, 3});
    w.stride = 1;
    w.padding = 1;
    return w;
}

BatchNormParams identity_bn(std::int64_t c) {
    BatchNormParams bn;
    bn.gamma.assign(static_cast<std::size_t>(c), 1.0f);
    bn.beta.assign(static_cast<std::size_t>(c), 0.0f);
    bn.mean.assign(static_cast<std::size_t>(c), 0.0f);
    bn.var.assign(static_cast<std::size_t>(c), 1.0f);
    return bn;
}

} // namespace

Tensor decoder_block(const Tensor& deep, const Tensor* skip, const DecoderBlockWeights& weights,
                     std::int64_t out_channels) {
    if (weights.convs.empty() || weights.convs.size() != weights.bns.size()) {
        throw std::invalid_argument("decoder_block: need matching conv and BN lists, at least one each");
    }

    Tensor x = bilinear_upsample2x(deep);
    if (skip != nullptr) {
        const TensorShape xs = x.shape();
        const TensorShape ss = skip->shape();
        if (xs.n != ss.n || xs.h != ss.h || xs.w != ss.w) {
            throw std::invalid_argument("decoder_block: skip " + ss.str() + " does not sit at 2x deep resolution " +
                                        deep.shape().str());
        }
        x = concat_channels(x, *skip);
    }
    for (std::size_t i = 0; i < weights.convs.size(); ++i) {
        x = activate(batchnorm_infer(conv2d(x, weights.convs[i]), weights.bns[i]), Activation::relu);
    }
    if (x.shape().c != out_channels) {
        throw std::invalid_argument("decoder_block: weights produce " + std::to_string(x.shape().c) +
                                    " channels, expected " + std::to_string(out_channels));
    }
    return x;
}

std::array<std::int64_t, 5> decoder_block_in_channels(const DecoderConfig& dec, const EncoderConfig& enc) {
    const auto taps = tap_channels(enc);
    std::array<std::int64_t, 5> in{};
    for (std::size_t i = 0; i < 5; ++i) {
        const std::int64_t deep = i == 0 ? taps[4] : dec.channels[i - 1];
        const std::int64_t skip = i < 4 ? taps[3 - i] : 0; // block 5 has no tap left
        in[i] = deep + skip;
    }
    return in;
}

std::int64_t decoder_parameter_count(const DecoderConfig& dec, const EncoderConfig& enc) {
    if (dec.convs_per_block < 1) {
        throw std::invalid_argument("decoder config: convs_per_block must be >= 1");
    }
    const auto ins = decoder_block_in_channels(dec, enc);
    std::int64_t total = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        std::int64_t ic = ins[i];
        for (int j = 0; j < dec.convs_per_block; ++j) {
            total += 3 * 3 * ic * dec.channels[i] + 4 * dec.channels[i];
            ic = dec.channels[i];
        }
    }
    return total;
}

DecoderWeights init_decoder_weights(const DecoderConfig& dec, const EncoderConfig& enc, InitMode mode, Rng& rng) {
    if (dec.convs_per_block < 1) {
        throw std::invalid_argument("decoder config: convs_per_block must be >= 1");
    }
    const auto ins = decoder_block_in_channels(dec, enc);
    DecoderWeights w;
    for (std::size_t i = 0; i < 5; ++i) {
        std::int64_t ic = ins[i];
        for (int j = 0; j < dec.convs_per_block; ++j) {
            ConvWeights conv = make_conv3x3(dec.channels[i], ic);
            if (mode == InitMode::random) {
                const double limit = std::sqrt(6.0 / static_cast<double>(ic * 9));
                for (float& v : conv.kernel.data()) {
                    v = static_cast<float>(rng.uniform(-limit, limit));
                }
            }
            w.blocks[i].convs.push_back(std::move(conv));
            w.blocks[i].bns.push_back(identity_bn(dec.channels[i]));
            ic = dec.channels[i];
        }
    }
    return w;
}

void decoder_to_store(const DecoderWeights& weights, WeightStore& store, const std::string& prefix) {
    for (std::size_t i = 0; i < weights.blocks.size(); ++i) {
        const DecoderBlockWeights& bw = weights.blocks[i];
        for (std::size_t j = 0; j < bw.convs.size(); ++j) {
            const std::string tag = prefix + "block" + std::to_string(i) + ".conv" + std::to_string(j);
            const TensorShape ks = bw.convs[j].kernel.shape();
            store.add(tag + ".kernel", {ks.n, ks.c, ks.h, ks.w},
                      std::vector<float>(bw.convs[j].kernel.data().begin(), bw.convs[j].kernel.data().end()));
            const auto c = static_cast<std::int64_t>(bw.bns[j].gamma.size());
            store.add(tag + ".bn.gamma", {c}, bw.bns[j].gamma);
            store.add(tag + ".bn.beta", {c}, bw.bns[j].beta);
            store.add(tag + ".bn.mean", {c}, bw.bns[j].mean);
            store.add(tag + ".bn.var", {c}, bw.bns[j].var);
        }
    }
}

DecoderWeights decoder_from_store(const DecoderConfig& dec, const EncoderConfig& enc, const WeightStore& store,
                                  const std::string& prefix) {
    Rng unused(0);
    DecoderWeights w = init_decoder_weights(dec, enc, InitMode::zeros, unused);
    for (std::size_t i = 0; i < w.blocks.size(); ++i) {
        DecoderBlockWeights& bw = w.blocks[i];
        for (std::size_t j = 0; j < bw.convs.size(); ++j) {
            const std::string tag = prefix + "block" + std::to_string(i) + ".conv" + std::to_string(j);
            const TensorShape ks = bw.convs[j].kernel.shape();
            const WeightEntry& e = store.get(tag + ".kernel");
            const std::vector<std::int64_t> want{ks.n, ks.c, ks.h, ks.w};
            if (e.shape != want) {
                throw std::invalid_argument("weight store entry '" + tag + ".kernel' has unexpected shape");
            }
            std::copy(e.values.begin(), e.values.end(), bw.convs[j].kernel.data().begin());
            const auto c = static_cast<std::int64_t>(bw.bns[j].gamma.size());
            auto pull = [&](const char* field) {
                const WeightEntry& v = store.get(tag + ".bn." + field);
                if (v.shape != std::vector<std::int64_t>{c}) {
                    throw std::invalid_argument("weight store entry '" + tag + ".bn." + field +
                                                "' has unexpected shape");
                }
                return v.values;
            };
            bw.bns[j].gamma = pull("gamma");
            bw.bns[j].beta = pull("beta");
            bw.bns[j].mean = pull("mean");
            bw.bns[j].var = pull("var");
        }
    }
    return w;
}

} // namespace cloudseg
