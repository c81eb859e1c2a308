#include "cloudseg/encoder.hpp"

#include "cloudseg/rng.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace cloudseg {

namespace {

constexpr std::int64_t kImageChannels = 3;

const std::array<std::string, 6> kVariantNames{"b0", "b1", "b2", "b3", "b4", "b5"};

Tensor channel_scale(const Tensor& x, const Tensor& gates) {
    const TensorShape s = x.shape();
    const TensorShape g = gates.shape();
    if (g.n != s.n || g.c != s.c || g.h != 1 || g.w != 1) {
        throw std::invalid_argument("channel gate shape " + g.str() + " does not match input " + s.str());
    }
    Tensor out(s);
    const std::int64_t plane = s.h * s.w;
    for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t c = 0; c < s.c; ++c) {
            const float gate = gates.at(n, c, 0, 0);
            const float* src = x.plane(n, c);
            float* dst = out.plane(n, c);
            for (std::int64_t i = 0; i < plane; ++i) {
                dst[i] = src[i] * gate;
            }
        }
    }
    return out;
}

ConvWeights make_conv(std::int64_t oc, std::int64_t icpg, int k, int stride, int padding, int groups, bool with_bias) {
    ConvWeights w;
    w.kernel = Tensor({oc, icpg, k, k});
    if (with_bias) {
        w.bias.emplace(static_cast<std::size_t>(oc), 0.0f);
    }
    w.stride = stride;
    w.padding = padding;
    w.groups = groups;
    return w;
}

BatchNormParams make_bn(std::int64_t c) {
    BatchNormParams bn;
    bn.gamma.assign(static_cast<std::size_t>(c), 1.0f);
    bn.beta.assign(static_cast<std::size_t>(c), 0.0f);
    bn.mean.assign(static_cast<std::size_t>(c), 0.0f);
    bn.var.assign(static_cast<std::size_t>(c), 1.0f);
    return bn;
}

// Zero-weight skeleton with the exact geometry the config implies.
EncoderWeights make_skeleton(const EncoderConfig& config) {
    EncoderWeights w;
    w.stem = make_conv(config.stem_channels, kImageChannels, 3, 2, 1, 1, false);
    w.stem_bn = make_bn(config.stem_channels);
    for (const BlockSpec& b : expand_stages(config)) {
        MBConvWeights mw;
        const std::int64_t ec = expanded_channels(b);
        if (b.expansion_ratio > 1) {
            mw.expand = make_conv(ec, b.in_channels, 1, 1, 0, 1, false);
            mw.expand_bn = make_bn(ec);
        }
        mw.depthwise = make_conv(ec, 1, b.kernel_size, b.stride, b.kernel_size / 2, static_cast<int>(ec), false);
        mw.depthwise_bn = make_bn(ec);
        const std::int64_t sc = se_channels(b);
        if (sc > 0) {
            mw.se_reduce = make_conv(sc, ec, 1, 1, 0, 1, true);
            mw.se_expand = make_conv(ec, sc, 1, 1, 0, 1, true);
        }
        mw.project = make_conv(b.out_channels, ec, 1, 1, 0, 1, false);
        mw.project_bn = make_bn(b.out_channels);
        w.blocks.push_back(std::move(mw));
    }
    return w;
}

void he_uniform_fill(Tensor& kernel, std::int64_t fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (float& v : kernel.data()) {
        v = static_cast<float>(rng.uniform(-limit, limit));
    }
}

void check_spec(const BlockSpec& b) {
    if (b.repeats != 1) {
        throw std::invalid_argument("mbconv_forward: spec has repeats " + std::to_string(b.repeats) +
                                    "; unroll stages with expand_stages first");
    }
    if (b.expansion_ratio < 1 || b.kernel_size < 1 || b.kernel_size % 2 == 0 ||
        (b.stride != 1 && b.stride != 2) || b.in_channels < 1 || b.out_channels < 1) {
        throw std::invalid_argument("mbconv_forward: malformed block spec");
    }
}

} // namespace

const std::string& variant_name(Variant v) {
    return kVariantNames[static_cast<std::size_t>(v)];
}

Variant variant_from_name(const std::string& name) {
    std::string low = name;
    for (char& ch : low) {
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
        if (kVariantNames[i] == low) {
            return static_cast<Variant>(i);
        }
    }
    throw std::invalid_argument("unknown variant '" + name + "' (expected b0..b5)");
}

ScalingCoefficients variant_coefficients(Variant v) {
    switch (v) {
    case Variant::b0: return {1.0, 1.0, 224};
    case Variant::b1: return {1.0, 1.1, 240};
    case Variant::b2: return {1.1, 1.2, 260};
    case Variant::b3: return {1.2, 1.4, 300};
    case Variant::b4: return {1.4, 1.8, 380};
    case Variant::b5: return {1.6, 2.2, 456};
    }
    throw std::invalid_argument("unknown variant");
}

EncoderConfig baseline_b0_config() {
    EncoderConfig cfg;
    cfg.stem_channels = 32;
    cfg.variant = Variant::b0;
    // (expansion, kernel, stride, out_channels, repeats), in chained from stem
    const std::array<std::array<int, 5>, 7> table{{
        {1, 3, 1, 16, 1},
        {6, 3, 2, 24, 2},
        {6, 5, 2, 40, 2},
        {6, 3, 2, 80, 3},
        {6, 5, 1, 112, 3},
        {6, 5, 2, 192, 4},
        {6, 3, 1, 320, 1},
    }};
    std::int64_t in = cfg.stem_channels;
    for (const auto& row : table) {
        BlockSpec b;
        b.expansion_ratio = row[0];
        b.kernel_size = row[1];
        b.stride = row[2];
        b.in_channels = in;
        b.out_channels = row[3];
        b.repeats = row[4];
        b.se_ratio = 0.25;
        cfg.blocks.push_back(b);
        in = b.out_channels;
    }
    return cfg;
}

std::int64_t round_channels(std::int64_t c, double width_mult) {
    if (c < 1 || width_mult <= 0.0) {
        throw std::invalid_argument("round_channels: need c >= 1 and width_mult > 0");
    }
    const double scaled = static_cast<double>(c) * width_mult;
    auto snapped = std::max<std::int64_t>(8, static_cast<std::int64_t>(scaled + 4.0) / 8 * 8);
    if (static_cast<double>(snapped) < 0.9 * scaled) {
        snapped += 8;
    }
    return snapped;
}

int round_repeats(int r, double depth_mult) {
    if (r < 1 || depth_mult <= 0.0) {
        throw std::invalid_argument("round_repeats: need r >= 1 and depth_mult > 0");
    }
    return static_cast<int>(std::ceil(static_cast<double>(r) * depth_mult));
}

EncoderConfig scale_config(const EncoderConfig& base, const ScalingCoefficients& coeffs, Variant label) {
    EncoderConfig cfg;
    cfg.stem_channels = round_channels(base.stem_channels, coeffs.width_mult);
    cfg.variant = label;
    std::int64_t in = cfg.stem_channels;
    for (const BlockSpec& b : base.blocks) {
        BlockSpec s = b;
        s.in_channels = in;
        s.out_channels = round_channels(b.out_channels, coeffs.width_mult);
        s.repeats = round_repeats(b.repeats, coeffs.depth_mult);
        cfg.blocks.push_back(s);
        in = s.out_channels;
    }
    return cfg;
}

EncoderConfig variant_config(Variant v) {
    return scale_config(baseline_b0_config(), variant_coefficients(v), v);
}

std::vector<BlockSpec> expand_stages(const EncoderConfig& config) {
    std::vector<BlockSpec> out;
    for (const BlockSpec& stage : config.blocks) {
        if (stage.repeats < 1) {
            throw std::invalid_argument("expand_stages: stage repeats must be >= 1");
        }
        BlockSpec first = stage;
        first.repeats = 1;
        out.push_back(first);
        for (int r = 1; r < stage.repeats; ++r) {
            BlockSpec inner = first;
            inner.stride = 1;
            inner.in_channels = stage.out_channels;
            out.push_back(inner);
        }
    }
    return out;
}

std::int64_t expanded_channels(const BlockSpec& block) {
    return block.in_channels * block.expansion_ratio;
}

std::int64_t se_channels(const BlockSpec& block) {
    if (!block.se_ratio) {
        return 0;
    }
    if (*block.se_ratio <= 0.0 || *block.se_ratio > 1.0) {
        throw std::invalid_argument("se_ratio must lie in (0, 1]");
    }
    return std::max<std::int64_t>(1, std::llround(*block.se_ratio * static_cast<double>(expanded_channels(block))));
}

Tensor mbconv_forward(const Tensor& input, const BlockSpec& spec, const MBConvWeights& weights) {
    check_spec(spec);
    if (input.shape().c != spec.in_channels) {
        throw std::invalid_argument("mbconv_forward: input has " + std::to_string(input.shape().c) +
                                    " channels, spec wants " + std::to_string(spec.in_channels));
    }

    Tensor x = input;
    if (spec.expansion_ratio > 1) {
        if (!weights.expand || !weights.expand_bn) {
            throw std::invalid_argument("mbconv_forward: expansion weights missing");
        }
        x = activate(batchnorm_infer(conv2d(x, *weights.expand), *weights.expand_bn), Activation::swish);
    }
    x = activate(batchnorm_infer(depthwise_conv2d(x, weights.depthwise), weights.depthwise_bn), Activation::swish);

    if (se_channels(spec) > 0) {
        if (!weights.se_reduce || !weights.se_expand) {
            throw std::invalid_argument("mbconv_forward: SE weights missing");
        }
        const Tensor pooled = global_avg_pool(x);
        const Tensor squeezed = activate(conv2d(pooled, *weights.se_reduce), Activation::swish);
        const Tensor gates = activate(conv2d(squeezed, *weights.se_expand), Activation::sigmoid);
        x = channel_scale(x, gates);
    }

    x = batchnorm_infer(conv2d(x, weights.project), weights.project_bn);

    if (spec.stride == 1 && spec.in_channels == spec.out_channels) {
        const auto in = input.data();
        auto out = x.data();
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += in[i];
        }
    }
    return x;
}

FeaturePyramid encoder_forward(const Tensor& input, const EncoderConfig& config, const EncoderWeights& weights) {
    const TensorShape s = input.shape();
    if (s.h % 32 != 0 || s.w % 32 != 0) {
        throw std::invalid_argument("encoder_forward: spatial dims must be divisible by 32, got " + s.str());
    }
    const std::vector<BlockSpec> blocks = expand_stages(config);
    if (weights.blocks.size() != blocks.size()) {
        throw std::invalid_argument("encoder_forward: weights carry " + std::to_string(weights.blocks.size()) +
                                    " blocks, config wants " + std::to_string(blocks.size()));
    }

    FeaturePyramid pyramid;
    std::size_t level = 0;
    Tensor current = activate(batchnorm_infer(conv2d(input, weights.stem), weights.stem_bn), Activation::swish);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].stride == 2) {
            if (level >= pyramid.levels.size()) {
                throw std::invalid_argument("encoder_forward: more than 5 resolution levels in config");
            }
            pyramid.levels[level++] = current;
        }
        current = mbconv_forward(current, blocks[i], weights.blocks[i]);
    }
    if (level != pyramid.levels.size() - 1) {
        throw std::invalid_argument("encoder_forward: config does not yield exactly 5 feature levels");
    }
    pyramid.levels[level] = std::move(current);
    return pyramid;
}

std::int64_t encoder_parameter_count(const EncoderConfig& config) {
    std::int64_t total = 3 * 3 * kImageChannels * config.stem_channels + 4 * config.stem_channels;
    for (const BlockSpec& b : expand_stages(config)) {
        const std::int64_t ec = expanded_channels(b);
        if (b.expansion_ratio > 1) {
            total += b.in_channels * ec + 4 * ec;
        }
        total += static_cast<std::int64_t>(b.kernel_size) * b.kernel_size * ec + 4 * ec;
        const std::int64_t sc = se_channels(b);
        if (sc > 0) {
            total += ec * sc + sc + sc * ec + ec;
        }
        total += ec * b.out_channels + 4 * b.out_channels;
    }
    return total;
}

EncoderWeights init_encoder_weights(const EncoderConfig& config, InitMode mode, std::uint64_t seed) {
    Rng rng(seed);
    return init_encoder_weights(config, mode, rng);
}

EncoderWeights init_encoder_weights(const EncoderConfig& config, InitMode mode, Rng& rng) {
    EncoderWeights w = make_skeleton(config);
    if (mode == InitMode::zeros) {
        return w;
    }
    he_uniform_fill(w.stem.kernel, kImageChannels * 3 * 3, rng);
    for (MBConvWeights& mw : w.blocks) {
        if (mw.expand) {
            he_uniform_fill(mw.expand->kernel, mw.expand->in_channels(), rng);
        }
        he_uniform_fill(mw.depthwise.kernel, mw.depthwise.kh() * mw.depthwise.kw(), rng);
        if (mw.se_reduce) {
            he_uniform_fill(mw.se_reduce->kernel, mw.se_reduce->in_channels(), rng);
            he_uniform_fill(mw.se_expand->kernel, mw.se_expand->in_channels(), rng);
        }
        he_uniform_fill(mw.project.kernel, mw.project.in_channels(), rng);
    }
    return w;
}

namespace {

std::vector<std::int64_t> kernel_shape(const ConvWeights& w) {
    const TensorShape s = w.kernel.shape();
    return {s.n, s.c, s.h, s.w};
}

void push_conv(WeightStore& store, const std::string& name, const ConvWeights& w) {
    store.add(name + ".kernel", kernel_shape(w),
              std::vector<float>(w.kernel.data().begin(), w.kernel.data().end()));
    if (w.bias) {
        store.add(name + ".bias", {static_cast<std::int64_t>(w.bias->size())}, *w.bias);
    }
}

void push_bn(WeightStore& store, const std::string& name, const BatchNormParams& bn) {
    const auto c = static_cast<std::int64_t>(bn.gamma.size());
    store.add(name + ".gamma", {c}, bn.gamma);
    store.add(name + ".beta", {c}, bn.beta);
    store.add(name + ".mean", {c}, bn.mean);
    store.add(name + ".var", {c}, bn.var);
}

std::vector<float> fetch(const WeightStore& store, const std::string& name,
                         const std::vector<std::int64_t>& shape) {
    const WeightEntry& e = store.get(name);
    if (e.shape != shape) {
        std::string want;
        std::string got;
        for (const auto d : shape) {
            want += (want.empty() ? "" : "x") + std::to_string(d);
        }
        for (const auto d : e.shape) {
            got += (got.empty() ? "" : "x") + std::to_string(d);
        }
        throw std::invalid_argument("weight store entry '" + name + "': shape " + got + " does not match expected " +
                                    want);
    }
    return e.values;
}

void pull_conv(const WeightStore& store, const std::string& name, ConvWeights& w) {
    const auto values = fetch(store, name + ".kernel", kernel_shape(w));
    std::copy(values.begin(), values.end(), w.kernel.data().begin());
    if (w.bias) {
        *w.bias = fetch(store, name + ".bias", {static_cast<std::int64_t>(w.bias->size())});
    }
}

void pull_bn(const WeightStore& store, const std::string& name, BatchNormParams& bn) {
    const auto c = static_cast<std::int64_t>(bn.gamma.size());
    bn.gamma = fetch(store, name + ".gamma", {c});
    bn.beta = fetch(store, name + ".beta", {c});
    bn.mean = fetch(store, name + ".mean", {c});
    bn.var = fetch(store, name + ".var", {c});
}

std::string block_tag(std::size_t i) {
    return i < 10 ? "block0" + std::to_string(i) : "block" + std::to_string(i);
}

} // namespace

void encoder_to_store(const EncoderConfig& config, const EncoderWeights& weights, WeightStore& store,
                      const std::string& prefix) {
    (void)config;
    push_conv(store, prefix + "stem.conv", weights.stem);
    push_bn(store, prefix + "stem.bn", weights.stem_bn);
    for (std::size_t i = 0; i < weights.blocks.size(); ++i) {
        const MBConvWeights& mw = weights.blocks[i];
        const std::string tag = prefix + block_tag(i);
        if (mw.expand) {
            push_conv(store, tag + ".expand", *mw.expand);
            push_bn(store, tag + ".expand_bn", *mw.expand_bn);
        }
        push_conv(store, tag + ".depthwise", mw.depthwise);
        push_bn(store, tag + ".depthwise_bn", mw.depthwise_bn);
        if (mw.se_reduce) {
            push_conv(store, tag + ".se_reduce", *mw.se_reduce);
            push_conv(store, tag + ".se_expand", *mw.se_expand);
        }
        push_conv(store, tag + ".project", mw.project);
        push_bn(store, tag + ".project_bn", mw.project_bn);
    }
}

EncoderWeights encoder_from_store(const EncoderConfig& config, const WeightStore& store, const std::string& prefix) {
    EncoderWeights w = make_skeleton(config);
    pull_conv(store, prefix + "stem.conv", w.stem);
    pull_bn(store, prefix + "stem.bn", w.stem_bn);
    for (std::size_t i = 0; i < w.blocks.size(); ++i) {
        MBConvWeights& mw = w.blocks[i];
        const std::string tag = prefix + block_tag(i);
        if (mw.expand) {
            pull_conv(store, tag + ".expand", *mw.expand);
            pull_bn(store, tag + ".expand_bn", *mw.expand_bn);
        }
        pull_conv(store, tag + ".depthwise", mw.depthwise);
        pull_bn(store, tag + ".depthwise_bn", mw.depthwise_bn);
        if (mw.se_reduce) {
            pull_conv(store, tag + ".se_reduce", *mw.se_reduce);
            pull_conv(store, tag + ".se_expand", *mw.se_expand);
        }
        pull_conv(store, tag + ".project", mw.project);
        pull_bn(store, tag + ".project_bn", mw.project_bn);
    }
    return w;
}

} // namespace cloudseg
