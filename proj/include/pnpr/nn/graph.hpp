#pragma once

// Small static graph of the primitive layers with channel and scale-level
// propagation at build time, named output heads, and named parameters that a
// weight file binds to. Execution is a straight pass over the node list.

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "pnpr/errors.hpp"
#include "pnpr/nn/ops.hpp"
#include "pnpr/nn/tensor.hpp"
#include "pnpr/rng.hpp"

namespace pnpr {

struct ParamSpec {
    std::string name;
    std::vector<int> shape;

    size_t elems() const {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        return n;
    }
};

class NetGraph {
  public:
    enum class Op { Input, Conv, TConv, ReLU, Sigmoid, Add, Mul, Slice };

    struct Node {
        Op op;
        int a = -1, b = -1;     // input node ids
        int out_ch = 0;
        int kh = 0, kw = 0, stride = 1, pad = 0, groups = 1;
        int begin = 0;          // Slice
        std::string param;      // Conv/TConv parameter base name
        int level = 0;          // downsampling depth (spatial size = input / 2^level)
    };

    // ---- construction ----

    int input(int channels) {
        if (!nodes_.empty()) throw DataError("NetGraph: input must be the first node");
        if (channels < 1) throw DataError("NetGraph: input channels must be >= 1");
        in_channels_ = channels;
        Node n;
        n.op = Op::Input;
        n.out_ch = channels;
        nodes_.push_back(n);
        return 0;
    }

    int conv(int src, int out_ch, int k, int stride, int pad, int groups,
             const std::string& name) {
        const Node& s = at(src);
        if (out_ch < 1) throw DataError("NetGraph: conv out_ch must be >= 1");
        if (groups < 1 || s.out_ch % groups != 0 || out_ch % groups != 0)
            throw DataError("NetGraph: conv '" + name + "' group mismatch");
        if (stride == 1) {
            if (pad != (k - 1) / 2 || k % 2 != 1)
                throw DataError("NetGraph: stride-1 conv '" + name +
                                "' must use odd kernel with symmetric padding");
        } else if (stride == 2) {
            if (k != 2 || pad != 0)
                throw DataError("NetGraph: stride-2 conv '" + name + "' must be 2x2 unpadded");
        } else {
            throw DataError("NetGraph: unsupported stride");
        }
        Node n;
        n.op = Op::Conv;
        n.a = src;
        n.out_ch = out_ch;
        n.kh = n.kw = k;
        n.stride = stride;
        n.pad = pad;
        n.groups = groups;
        n.param = name;
        n.level = s.level + (stride == 2 ? 1 : 0);
        declare_param(name + ".w", {out_ch, s.out_ch / groups, k, k});
        declare_param(name + ".b", {out_ch});
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    int tconv2x2(int src, int out_ch, const std::string& name) {
        const Node& s = at(src);
        if (s.level < 1) throw DataError("NetGraph: tconv '" + name + "' above input resolution");
        Node n;
        n.op = Op::TConv;
        n.a = src;
        n.out_ch = out_ch;
        n.param = name;
        n.level = s.level - 1;
        declare_param(name + ".w", {s.out_ch, out_ch, 2, 2});
        declare_param(name + ".b", {out_ch});
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    int relu(int src) { return unary(Op::ReLU, src); }
    int sigmoid(int src) { return unary(Op::Sigmoid, src); }

    int add(int a, int b) { return binary(Op::Add, a, b); }
    int mul(int a, int b) { return binary(Op::Mul, a, b); }

    int slice(int src, int begin, int count) {
        const Node& s = at(src);
        if (begin < 0 || count < 1 || begin + count > s.out_ch)
            throw DataError("NetGraph: slice out of channel range");
        Node n;
        n.op = Op::Slice;
        n.a = src;
        n.begin = begin;
        n.out_ch = count;
        n.level = s.level;
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    void mark_head(const std::string& name, int node) {
        at(node);
        if (heads_.count(name)) throw DataError("NetGraph: duplicate head '" + name + "'");
        heads_[name] = node;
    }

    // ---- introspection ----

    int in_channels() const { return in_channels_; }
    int head_channels(const std::string& name) const { return at(head_node(name)).out_ch; }
    int max_level() const {
        int m = 0;
        for (const auto& n : nodes_) m = std::max(m, n.level);
        return m;
    }
    const std::vector<ParamSpec>& params() const { return params_; }
    const std::map<std::string, int>& heads() const { return heads_; }

    size_t param_count() const {
        size_t n = 0;
        for (const auto& p : params_) n += p.elems();
        return n;
    }

    bool predicts_residual = false;

    // ---- weights ----

    bool has_weights() const { return bound_.size() == params_.size(); }

    const std::vector<double>& weight(const std::string& name) const {
        auto it = bound_.find(name);
        if (it == bound_.end()) throw DataError("NetGraph: unbound parameter '" + name + "'");
        return it->second;
    }

    void bind(const std::string& name, std::vector<double> values) {
        const ParamSpec* spec = find_param(name);
        if (!spec) throw DataError("NetGraph: unknown parameter '" + name + "'");
        if (values.size() != spec->elems())
            throw DataError("NetGraph: parameter '" + name + "' has wrong element count");
        bound_[name] = std::move(values);
    }

    void zero_init() {
        for (const auto& p : params_) bound_[p.name] = std::vector<double>(p.elems(), 0.0);
    }

    // Fan-in-scaled uniform weights, zero biases; a pure function of the seed
    // and the parameter declaration order.
    void init_random(uint64_t seed) {
        uint64_t idx = 0;
        for (const auto& p : params_) {
            std::vector<double> v(p.elems(), 0.0);
            if (p.shape.size() == 4) {
                // conv [co, cig, kh, kw] or tconv [in, out, 2, 2]
                const size_t fan_in = static_cast<size_t>(p.shape[1]) * p.shape[2] * p.shape[3];
                const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
                for (auto& x : v)
                    x = bound * (2.0 * philox_uniform(seed, idx++, kStreamWeights) - 1.0);
            }
            bound_[p.name] = std::move(v);
        }
    }

    // ---- execution ----

    std::map<std::string, Tensor4> run(const Tensor4& in) const {
        if (heads_.empty()) throw DataError("NetGraph: no output heads declared");
        if (!has_weights()) throw DataError("NetGraph: weights not initialized");
        if (in.c != in_channels_) throw DataError("NetGraph: input channel mismatch");
        const int div = 1 << max_level();
        if (in.h % div != 0 || in.w % div != 0)
            throw DataError("NetGraph: input spatial size must be a multiple of " +
                            std::to_string(div));

        std::vector<Tensor4> vals(nodes_.size());
        vals[0] = in;
        for (size_t i = 1; i < nodes_.size(); ++i) {
            const Node& n = nodes_[i];
            switch (n.op) {
                case Op::Input:
                    throw DataError("NetGraph: unexpected second input node");
                case Op::Conv: {
                    ConvParams p{weight(n.param + ".w"), weight(n.param + ".b")};
                    vals[i] = conv2d(vals[n.a], p, n.out_ch, n.kh, n.kw, n.stride, n.pad,
                                     n.groups);
                    break;
                }
                case Op::TConv: {
                    ConvParams p{weight(n.param + ".w"), weight(n.param + ".b")};
                    vals[i] = tconv2x2_stride2(vals[n.a], p, n.out_ch);
                    break;
                }
                case Op::ReLU:
                    vals[i] = pnpr::relu(vals[n.a]);
                    break;
                case Op::Sigmoid:
                    vals[i] = pnpr::sigmoid(vals[n.a]);
                    break;
                case Op::Add:
                    vals[i] = pnpr::add(vals[n.a], vals[n.b]);
                    break;
                case Op::Mul:
                    vals[i] = pnpr::mul(vals[n.a], vals[n.b]);
                    break;
                case Op::Slice:
                    vals[i] = channel_slice(vals[n.a], n.begin, n.out_ch);
                    break;
            }
        }
        std::map<std::string, Tensor4> out;
        for (const auto& [name, id] : heads_) {
            for (double v : vals[id].data)
                if (!std::isfinite(v))
                    throw NumericError("NetGraph: non-finite value in head '" + name + "'");
            out[name] = vals[id];
        }
        return out;
    }

  private:
    int unary(Op op, int src) {
        const Node& s = at(src);
        Node n;
        n.op = op;
        n.a = src;
        n.out_ch = s.out_ch;
        n.level = s.level;
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    int binary(Op op, int a, int b) {
        const Node& na = at(a);
        const Node& nb = at(b);
        if (na.out_ch != nb.out_ch || na.level != nb.level)
            throw DataError("NetGraph: binary op operands disagree in channels or scale");
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.out_ch = na.out_ch;
        n.level = na.level;
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    const Node& at(int id) const {
        if (id < 0 || id >= static_cast<int>(nodes_.size()))
            throw DataError("NetGraph: node id out of range");
        return nodes_[static_cast<size_t>(id)];
    }

    int head_node(const std::string& name) const {
        auto it = heads_.find(name);
        if (it == heads_.end()) throw DataError("NetGraph: no head named '" + name + "'");
        return it->second;
    }

    void declare_param(const std::string& name, std::vector<int> shape) {
        if (find_param(name)) throw DataError("NetGraph: duplicate parameter '" + name + "'");
        params_.push_back(ParamSpec{name, std::move(shape)});
    }

    const ParamSpec* find_param(const std::string& name) const {
        for (const auto& p : params_)
            if (p.name == name) return &p;
        return nullptr;
    }

    int in_channels_ = 0;
    std::vector<Node> nodes_;
    std::map<std::string, int> heads_;
    std::vector<ParamSpec> params_;
    std::map<std::string, std::vector<double>> bound_;
};

namespace detail {

// Appends `count` inverted-bottleneck residual blocks at width `ch`.
inline int cunet_blocks(NetGraph& g, int x, int ch, int count, const std::string& prefix) {
    for (int i = 0; i < count; ++i) {
        const std::string name = prefix + ".b" + std::to_string(i);
        int t = g.conv(x, ch, 7, 1, 3, ch, name + ".dw");
        t = g.conv(t, 4 * ch, 1, 1, 0, 1, name + ".pw1");
        t = g.relu(t);
        t = g.conv(t, ch, 1, 1, 0, 1, name + ".pw2");
        x = g.add(x, t);
    }
    return x;
}

struct CunetTrunk {
    int input = 0;
    int fused = 0;  // full-resolution features after the last skip connection
};

// Shared encoder-decoder trunk: head conv, three stride-2 descents with
// residual blocks, bottleneck, three transposed-conv ascents with additive
// skips. Decoder blocks at the two lower scales are included; the caller
// finishes the full-resolution stage.
inline CunetTrunk build_cunet_trunk(NetGraph& g, const std::vector<int>& widths,
                                    int in_channels, int blocks_per_scale) {
    if (widths.size() != 4) throw DataError("cunet: exactly 4 scale widths required");
    for (int w : widths)
        if (w < 1) throw DataError("cunet: widths must be >= 1");
    if (blocks_per_scale < 1) throw DataError("cunet: blocks_per_scale must be >= 1");

    CunetTrunk t;
    t.input = g.input(in_channels);
    int x = g.conv(t.input, widths[0], 3, 1, 1, 1, "head");
    const int e0 = cunet_blocks(g, x, widths[0], blocks_per_scale, "enc0");
    x = g.conv(e0, widths[1], 2, 2, 0, 1, "down0");
    const int e1 = cunet_blocks(g, x, widths[1], blocks_per_scale, "enc1");
    x = g.conv(e1, widths[2], 2, 2, 0, 1, "down1");
    const int e2 = cunet_blocks(g, x, widths[2], blocks_per_scale, "enc2");
    x = g.conv(e2, widths[3], 2, 2, 0, 1, "down2");
    x = cunet_blocks(g, x, widths[3], blocks_per_scale, "mid");
    x = g.tconv2x2(x, widths[2], "up2");
    x = g.add(x, e2);
    x = cunet_blocks(g, x, widths[2], blocks_per_scale, "dec2");
    x = g.tconv2x2(x, widths[1], "up1");
    x = g.add(x, e1);
    x = cunet_blocks(g, x, widths[1], blocks_per_scale, "dec1");
    x = g.tconv2x2(x, widths[0], "up0");
    t.fused = g.add(x, e0);
    return t;
}

}  // namespace detail

// Denoising network: input channels [image C | curvature C | noise level 1],
// curvature-gated attention before the final decoder stage, heads "image"
// (the denoised estimate) and "restored" (the attention module's auxiliary
// reconstruction).
inline NetGraph build_cunet_denoiser(const std::vector<int>& widths, int image_channels,
                                     int blocks_per_scale = 4) {
    if (image_channels < 1) throw DataError("cunet denoiser: image_channels must be >= 1");
    NetGraph g;
    const int c = image_channels;
    const auto trunk = detail::build_cunet_trunk(g, widths, 2 * c + 1, blocks_per_scale);

    const int img = g.slice(trunk.input, 0, c);
    const int curv = g.slice(trunk.input, c, c);
    const int restored = g.add(img, g.conv(trunk.fused, c, 1, 1, 0, 1, "csam.a"));
    const int gate = g.sigmoid(g.add(g.conv(restored, widths[0], 1, 1, 0, 1, "csam.b"),
                                     g.sigmoid(g.conv(curv, widths[0], 1, 1, 0, 1, "csam.c"))));
    const int refined = g.add(g.mul(trunk.fused, gate), trunk.fused);
    const int d0 = detail::cunet_blocks(g, refined, widths[0], blocks_per_scale, "dec0");
    const int out = g.conv(d0, c, 3, 1, 1, 1, "tail");

    g.mark_head("image", out);
    g.mark_head("restored", restored);
    return g;
}

// Noise estimation network: plain trunk on the image alone with two
// image-sized heads, "level" and "distribution".
inline NetGraph build_cunet_estimator(const std::vector<int>& widths, int image_channels,
                                      int blocks_per_scale = 4) {
    if (image_channels < 1) throw DataError("cunet estimator: image_channels must be >= 1");
    NetGraph g;
    const auto trunk = detail::build_cunet_trunk(g, widths, image_channels, blocks_per_scale);
    const int d0 = detail::cunet_blocks(g, trunk.fused, widths[0], blocks_per_scale, "dec0");
    g.mark_head("level", g.conv(d0, image_channels, 3, 1, 1, 1, "level_head"));
    g.mark_head("distribution", g.conv(d0, image_channels, 3, 1, 1, 1, "dist_head"));
    return g;
}

}  // namespace pnpr
