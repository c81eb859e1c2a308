#include "cloudseg/model.hpp"

#include "cloudseg/mask.hpp"
#include "cloudseg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cloudseg {

namespace {

ConvWeights make_head(std::int64_t in_channels) {
    ConvWeights head;
    head.kernel = Tensor({kClassCount, in_channels, 1, 1});
    head.bias.emplace(kClassCount, 0.0f);
    return head;
}

Tensor run_decoder(const SegmentationModel& m, const FeaturePyramid& pyramid) {
    Tensor x = pyramid.levels[4];
    for (std::size_t i = 0; i < 5; ++i) {
        const Tensor* skip = i < 4 ? &pyramid.levels[3 - i] : nullptr;
        x = decoder_block(x, skip, m.dec_weights.blocks[i], m.dec_config.channels[i]);
    }
    return x;
}

} // namespace

SegmentationModel build_efficientunet(Variant variant, const DecoderConfig& dec, InitMode init, std::uint64_t seed) {
    SegmentationModel m;
    m.enc_config = variant_config(variant);
    m.dec_config = dec;
    Rng rng(seed);
    m.enc_weights = init_encoder_weights(m.enc_config, init, rng);
    m.dec_weights = init_decoder_weights(dec, m.enc_config, init, rng);
    m.head = make_head(dec.channels[4]);
    if (init == InitMode::random) {
        const double limit = std::sqrt(6.0 / static_cast<double>(dec.channels[4]));
        for (float& v : m.head.kernel.data()) {
            v = static_cast<float>(rng.uniform(-limit, limit));
        }
    }
    return m;
}

SegmentationModel build_efficientunet(Variant variant, const DecoderConfig& dec, const WeightStore& store) {
    SegmentationModel m;
    m.enc_config = variant_config(variant);
    m.dec_config = dec;
    m.enc_weights = encoder_from_store(m.enc_config, store);
    m.dec_weights = decoder_from_store(dec, m.enc_config, store);
    m.head = make_head(dec.channels[4]);
    const WeightEntry& k = store.get("head.kernel");
    const TensorShape ks = m.head.kernel.shape();
    if (k.shape != std::vector<std::int64_t>{ks.n, ks.c, ks.h, ks.w}) {
        throw std::invalid_argument("weight store entry 'head.kernel' has unexpected shape");
    }
    std::copy(k.values.begin(), k.values.end(), m.head.kernel.data().begin());
    const WeightEntry& b = store.get("head.bias");
    if (b.shape != std::vector<std::int64_t>{kClassCount}) {
        throw std::invalid_argument("weight store entry 'head.bias' has unexpected shape");
    }
    *m.head.bias = b.values;
    return m;
}

Tensor model_trunk_forward(const SegmentationModel& model, const Tensor& input) {
    const TensorShape s = input.shape();
    if (s.c != 3) {
        throw std::invalid_argument("model_forward: input must have 3 channels, got " + s.str());
    }
    if (s.h % 32 != 0 || s.w % 32 != 0) {
        throw std::invalid_argument("model_forward: spatial dims must be divisible by 32, got " + s.str());
    }
    const FeaturePyramid pyramid = encoder_forward(input, model.enc_config, model.enc_weights);
    return run_decoder(model, pyramid);
}

Tensor model_forward(const SegmentationModel& model, const Tensor& input) {
    return conv2d(model_trunk_forward(model, input), model.head);
}

std::int64_t model_parameter_count(const SegmentationModel& model) {
    const std::int64_t head = model.head.parameter_count();
    return encoder_parameter_count(model.enc_config) +
           decoder_parameter_count(model.dec_config, model.enc_config) + head;
}

WeightStore model_to_store(const SegmentationModel& model) {
    WeightStore store;
    encoder_to_store(model.enc_config, model.enc_weights, store);
    decoder_to_store(model.dec_weights, store);
    const TensorShape ks = model.head.kernel.shape();
    store.add("head.kernel", {ks.n, ks.c, ks.h, ks.w},
              std::vector<float>(model.head.kernel.data().begin(), model.head.kernel.data().end()));
    store.add("head.bias", {kClassCount}, *model.head.bias);
    return store;
}

Tensor prepare_input(const Image& image, std::int64_t target_h, std::int64_t target_w) {
    if (image.height < 1 || image.width < 1) {
        throw std::invalid_argument("prepare_input: empty image");
    }
    if (target_h % 32 != 0 || target_w % 32 != 0 || target_h < 32 || target_w < 32) {
        throw std::invalid_argument("prepare_input: target dims must be positive multiples of 32, got " +
                                    std::to_string(target_h) + "x" + std::to_string(target_w));
    }
    Tensor t = image_to_tensor(image);
    if (t.shape().c == 1) {
        Tensor rgb({1, 3, t.shape().h, t.shape().w});
        for (std::int64_t c = 0; c < 3; ++c) {
            std::copy_n(t.plane(0, 0), t.shape().h * t.shape().w, rgb.plane(0, c));
        }
        t = std::move(rgb);
    }
    if (t.shape().h == target_h && t.shape().w == target_w) {
        return t;
    }
    return bilinear_resize(t, target_h, target_w);
}

std::pair<std::int64_t, std::int64_t> default_target(std::int64_t h, std::int64_t w) {
    if (h == 1400 && w == 2100) {
        return {1312, 2080};
    }
    return {std::max<std::int64_t>(32, h / 32 * 32), std::max<std::int64_t>(32, w / 32 * 32)};
}

} // namespace cloudseg
