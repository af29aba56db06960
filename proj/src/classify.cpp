#include "ulgfbp/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "ulgfbp/errors.hpp"
#include "ulgfbp/rng.hpp"

namespace ulgfbp {

// --------------------------------------------------------------------------
// k-NN
// --------------------------------------------------------------------------

double chi_square_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ArgumentError("chi_square_distance: dimension mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff / (a[i] + b[i] + 1e-12);
    }
    return d;
}

KnnModel knn_fit(std::vector<std::vector<double>> features, std::vector<int> labels, int k) {
    if (features.empty()) throw ArgumentError("knn_fit: empty training set");
    if (features.size() != labels.size()) throw ArgumentError("knn_fit: feature/label size mismatch");
    if (k < 1) throw ArgumentError("knn_fit: k must be >= 1");
    if (static_cast<std::size_t>(k) > features.size())
        throw ArgumentError("knn_fit: k exceeds training-set size");
    for (const auto& f : features)
        if (f.size() != features.front().size())
            throw ArgumentError("knn_fit: inconsistent feature dimensions");
    return KnnModel{k, std::move(features), std::move(labels)};
}

int knn_predict(const KnnModel& model, const std::vector<double>& query) {
    if (model.features.empty()) throw ArgumentError("knn_predict: empty model");
    if (query.size() != model.features.front().size())
        throw ArgumentError("knn_predict: query dimension mismatch");

    std::vector<std::pair<double, std::size_t>> dist(model.features.size());
    for (std::size_t i = 0; i < model.features.size(); ++i)
        dist[i] = {chi_square_distance(model.features[i], query), i};
    const std::size_t k = static_cast<std::size_t>(model.k);
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

    const int n_classes = 1 + *std::max_element(model.labels.begin(), model.labels.end());
    std::vector<int> votes(n_classes, 0);
    std::vector<double> total(n_classes, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const int label = model.labels[dist[i].second];
        ++votes[label];
        total[label] += dist[i].first;
    }
    int best = 0;
    for (int c = 1; c < n_classes; ++c) {
        if (votes[c] > votes[best] || (votes[c] == votes[best] && total[c] < total[best]))
            best = c;
    }
    return best;
}

// --------------------------------------------------------------------------
// Tensors and layers
// --------------------------------------------------------------------------

Tensor Tensor::zeros(std::vector<int> shape) {
    Tensor t;
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ArgumentError("Tensor: non-positive dimension");
        n *= static_cast<std::size_t>(d);
    }
    t.shape = std::move(shape);
    t.v.assign(n, 0.0);
    return t;
}

namespace {

int conv_out_size(int s, int stride) { return (s - 1) / stride + 1; } // 3x3 kernel, pad 1

ConvLayer make_conv(int in_c, int out_c, int stride) {
    ConvLayer l;
    l.in_channels = in_c;
    l.out_channels = out_c;
    l.stride = stride;
    l.w = Tensor::zeros({out_c, in_c, 3, 3});
    l.b = Tensor::zeros({out_c});
    return l;
}

FcLayer make_fc(int in_dim, int out_dim) {
    FcLayer l;
    l.in_dim = in_dim;
    l.out_dim = out_dim;
    l.w = Tensor::zeros({out_dim, in_dim});
    l.b = Tensor::zeros({out_dim});
    return l;
}

void init_he_uniform(Tensor& w, int fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (double& x : w.v) x = rng.uniform(-limit, limit);
}

// Copies src (C x S x S) into dst with a one-pixel zero border per plane.
void zero_pad(const double* src, int channels, int s, std::vector<double>& dst) {
    const int p = s + 2;
    dst.assign(static_cast<std::size_t>(channels) * p * p, 0.0);
    for (int c = 0; c < channels; ++c) {
        const double* in_plane = src + static_cast<std::size_t>(c) * s * s;
        double* out_plane = dst.data() + static_cast<std::size_t>(c) * p * p;
        for (int y = 0; y < s; ++y)
            std::memcpy(out_plane + static_cast<std::size_t>(y + 1) * p + 1,
                        in_plane + static_cast<std::size_t>(y) * s, sizeof(double) * s);
    }
}

// out[oc] = b[oc] + sum_ic conv3x3(in[ic]); input is consumed pre-padded.
void conv_forward(const std::vector<double>& padded, int in_s, const ConvLayer& l,
                  std::vector<double>& out) {
    const int p = in_s + 2;
    const int out_s = conv_out_size(in_s, l.stride);
    out.assign(static_cast<std::size_t>(l.out_channels) * out_s * out_s, 0.0);

    for (int oc = 0; oc < l.out_channels; ++oc) {
        double* out_plane = out.data() + static_cast<std::size_t>(oc) * out_s * out_s;
        const double bias = l.b.v[oc];
        for (int i = 0; i < out_s * out_s; ++i) out_plane[i] = bias;
        for (int ic = 0; ic < l.in_channels; ++ic) {
            const double* in_plane = padded.data() + static_cast<std::size_t>(ic) * p * p;
            const double* wk = l.w.v.data() + (static_cast<std::size_t>(oc) * l.in_channels + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const double wv = wk[ky * 3 + kx];
                    for (int oy = 0; oy < out_s; ++oy) {
                        const double* src = in_plane + static_cast<std::size_t>(oy * l.stride + ky) * p + kx;
                        double* dst = out_plane + static_cast<std::size_t>(oy) * out_s;
                        if (l.stride == 1) {
                            for (int ox = 0; ox < out_s; ++ox) dst[ox] += wv * src[ox];
                        } else {
                            for (int ox = 0; ox < out_s; ++ox) dst[ox] += wv * src[ox * l.stride];
                        }
                    }
                }
            }
        }
    }
}

// Accumulates dW/dB and (optionally) the gradient w.r.t. the layer input.
// d_padded, when present, must be a zeroed (C x (S+2)^2) buffer; the caller
// crops the interior afterwards.
void conv_backward(const std::vector<double>& padded, int in_s, const ConvLayer& l,
                   const std::vector<double>& d_out, Tensor& dw, Tensor& db,
                   std::vector<double>* d_padded) {
    const int p = in_s + 2;
    const int out_s = conv_out_size(in_s, l.stride);

    for (int oc = 0; oc < l.out_channels; ++oc) {
        const double* dout_plane = d_out.data() + static_cast<std::size_t>(oc) * out_s * out_s;
        double acc = 0.0;
        for (int i = 0; i < out_s * out_s; ++i) acc += dout_plane[i];
        db.v[oc] += acc;

        for (int ic = 0; ic < l.in_channels; ++ic) {
            const double* in_plane = padded.data() + static_cast<std::size_t>(ic) * p * p;
            double* dwk = dw.v.data() + (static_cast<std::size_t>(oc) * l.in_channels + ic) * 9;
            double* din_plane =
                d_padded ? d_padded->data() + static_cast<std::size_t>(ic) * p * p : nullptr;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const double wv = l.w.v[(static_cast<std::size_t>(oc) * l.in_channels + ic) * 9 +
                                            ky * 3 + kx];
                    double wsum = 0.0;
                    for (int oy = 0; oy < out_s; ++oy) {
                        const double* src = in_plane + static_cast<std::size_t>(oy * l.stride + ky) * p + kx;
                        const double* do_row = dout_plane + static_cast<std::size_t>(oy) * out_s;
                        if (l.stride == 1) {
                            for (int ox = 0; ox < out_s; ++ox) wsum += do_row[ox] * src[ox];
                        } else {
                            for (int ox = 0; ox < out_s; ++ox) wsum += do_row[ox] * src[ox * l.stride];
                        }
                        if (din_plane) {
                            double* dst = din_plane + static_cast<std::size_t>(oy * l.stride + ky) * p + kx;
                            if (l.stride == 1) {
                                for (int ox = 0; ox < out_s; ++ox) dst[ox] += wv * do_row[ox];
                            } else {
                                for (int ox = 0; ox < out_s; ++ox) dst[ox * l.stride] += wv * do_row[ox];
                            }
                        }
                    }
                    dwk[ky * 3 + kx] += wsum;
                }
            }
        }
    }
}

void crop_padded(const std::vector<double>& d_padded, int channels, int s, std::vector<double>& out) {
    const int p = s + 2;
    out.assign(static_cast<std::size_t>(channels) * s * s, 0.0);
    for (int c = 0; c < channels; ++c) {
        const double* in_plane = d_padded.data() + static_cast<std::size_t>(c) * p * p;
        double* out_plane = out.data() + static_cast<std::size_t>(c) * s * s;
        for (int y = 0; y < s; ++y)
            std::memcpy(out_plane + static_cast<std::size_t>(y) * s,
                        in_plane + static_cast<std::size_t>(y + 1) * p + 1, sizeof(double) * s);
    }
}

void relu(const std::vector<double>& in, std::vector<double>& out) {
    out.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const std::vector<double>& pre, std::vector<double>& grad) {
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (pre[i] <= 0.0) grad[i] = 0.0;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

} // namespace

std::vector<Tensor*> ResidualNet::parameters() {
    std::vector<Tensor*> out = {&conv1.w,    &conv1.b,    &block1_a.w, &block1_a.b,
                                &block1_b.w, &block1_b.b, &conv2.w,    &conv2.b,
                                &block2_a.w, &block2_a.b, &block2_b.w, &block2_b.b};
    for (auto& fc : head) {
        out.push_back(&fc.w);
        out.push_back(&fc.b);
    }
    return out;
}

std::vector<const Tensor*> ResidualNet::parameters() const {
    auto mut = const_cast<ResidualNet*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

ResidualNet make_residual_net(int input_size, int n_classes, int head_depth, std::uint64_t seed) {
    if (input_size < 4) throw ArgumentError("make_residual_net: input size must be >= 4");
    if (n_classes < 2) throw ArgumentError("make_residual_net: need at least 2 classes");
    if (head_depth != 1 && head_depth != 2)
        throw ArgumentError("make_residual_net: head depth must be 1 or 2");

    ResidualNet net;
    net.input_size = input_size;
    net.n_classes = n_classes;
    net.head_depth = head_depth;
    net.conv1 = make_conv(3, 8, 2);
    net.block1_a = make_conv(8, 8, 1);
    net.block1_b = make_conv(8, 8, 1);
    net.conv2 = make_conv(8, 16, 2);
    net.block2_a = make_conv(16, 16, 1);
    net.block2_b = make_conv(16, 16, 1);

    Rng rng(seed);
    init_he_uniform(net.conv1.w, 3 * 9, rng);
    init_he_uniform(net.block1_a.w, 8 * 9, rng);
    init_he_uniform(net.block1_b.w, 8 * 9, rng);
    init_he_uniform(net.conv2.w, 8 * 9, rng);
    init_he_uniform(net.block2_a.w, 16 * 9, rng);
    init_he_uniform(net.block2_b.w, 16 * 9, rng);

    replace_head(net, n_classes, rng.next_u64());
    return net;
}

void replace_head(ResidualNet& net, int n_classes, std::uint64_t seed) {
    if (n_classes < 2) throw ArgumentError("replace_head: need at least 2 classes");
    net.n_classes = n_classes;
    net.head.clear();
    if (net.head_depth == 2) {
        net.head.push_back(make_fc(16, 16));
        net.head.push_back(make_fc(16, n_classes));
    } else {
        net.head.push_back(make_fc(16, n_classes));
    }
    Rng rng(seed);
    for (auto& fc : net.head)
        for (double& x : fc.w.v) x = rng.uniform(-0.05, 0.05);
    // biases stay zero
}

namespace {

struct NetDims {
    int s0, s1, s2; // input, after conv1, after conv2
};

NetDims dims_of(const ResidualNet& net) {
    NetDims d;
    d.s0 = net.input_size;
    d.s1 = conv_out_size(d.s0, 2);
    d.s2 = conv_out_size(d.s1, 2);
    return d;
}

std::vector<double> forward_one(const ResidualNet& net, const float* map, ForwardCache& c) {
    const NetDims d = dims_of(net);
    const std::size_t in_n = static_cast<std::size_t>(3) * d.s0 * d.s0;
    c.input.resize(in_n);
    for (std::size_t i = 0; i < in_n; ++i) c.input[i] = map[i];

    std::vector<double> padded;
    zero_pad(c.input.data(), 3, d.s0, padded);
    conv_forward(padded, d.s0, net.conv1, c.z1);
    relu(c.z1, c.a1);

    zero_pad(c.a1.data(), 8, d.s1, padded);
    conv_forward(padded, d.s1, net.block1_a, c.u1);
    relu(c.u1, c.r1);
    zero_pad(c.r1.data(), 8, d.s1, padded);
    conv_forward(padded, d.s1, net.block1_b, c.a2);
    for (std::size_t i = 0; i < c.a2.size(); ++i) c.a2[i] += c.a1[i]; // skip connection

    zero_pad(c.a2.data(), 8, d.s1, padded);
    conv_forward(padded, d.s1, net.conv2, c.z2);
    relu(c.z2, c.a3);

    zero_pad(c.a3.data(), 16, d.s2, padded);
    conv_forward(padded, d.s2, net.block2_a, c.u2);
    relu(c.u2, c.r2);
    zero_pad(c.r2.data(), 16, d.s2, padded);
    conv_forward(padded, d.s2, net.block2_b, c.a4);
    for (std::size_t i = 0; i < c.a4.size(); ++i) c.a4[i] += c.a3[i];

    // global average pool
    c.pooled.assign(16, 0.0);
    const int area = d.s2 * d.s2;
    for (int ch = 0; ch < 16; ++ch) {
        const double* plane = c.a4.data() + static_cast<std::size_t>(ch) * area;
        double sum = 0.0;
        for (int i = 0; i < area; ++i) sum += plane[i];
        c.pooled[ch] = sum / area;
    }

    const std::vector<double>* head_in = &c.pooled;
    if (net.head_depth == 2) {
        const FcLayer& fc1 = net.head[0];
        c.fc1_pre.assign(fc1.out_dim, 0.0);
        for (int o = 0; o < fc1.out_dim; ++o) {
            double acc = fc1.b.v[o];
            const double* wrow = fc1.w.v.data() + static_cast<std::size_t>(o) * fc1.in_dim;
            for (int i = 0; i < fc1.in_dim; ++i) acc += wrow[i] * (*head_in)[i];
            c.fc1_pre[o] = acc;
        }
        relu(c.fc1_pre, c.fc1_act);
        head_in = &c.fc1_act;
    }

    const FcLayer& out_fc = net.head.back();
    std::vector<double> logits(out_fc.out_dim, 0.0);
    for (int o = 0; o < out_fc.out_dim; ++o) {
        double acc = out_fc.b.v[o];
        const double* wrow = out_fc.w.v.data() + static_cast<std::size_t>(o) * out_fc.in_dim;
        for (int i = 0; i < out_fc.in_dim; ++i) acc += wrow[i] * (*head_in)[i];
        logits[o] = acc;
    }
    return softmax(logits);
}

// Accumulates the (unscaled) cross-entropy gradient of one sample into g.
void backward_one(const ResidualNet& net, const ForwardCache& c,
                  const std::vector<double>& probs, int target, Gradients& g) {
    const NetDims d = dims_of(net);
    std::vector<double> dlogits = probs;
    dlogits[target] -= 1.0;

    std::size_t pi = 12; // head parameters start after the six conv layers
    Tensor* dw_fc1 = nullptr;
    Tensor* db_fc1 = nullptr;
    if (net.head_depth == 2) {
        dw_fc1 = &g.tensors[pi];
        db_fc1 = &g.tensors[pi + 1];
        pi += 2;
    }
    Tensor& dw_out = g.tensors[pi];
    Tensor& db_out = g.tensors[pi + 1];

    const FcLayer& out_fc = net.head.back();
    const std::vector<double>& out_in = net.head_depth == 2 ? c.fc1_act : c.pooled;
    std::vector<double> d_out_in(out_fc.in_dim, 0.0);
    for (int o = 0; o < out_fc.out_dim; ++o) {
        const double dv = dlogits[o];
        db_out.v[o] += dv;
        double* dwrow = dw_out.v.data() + static_cast<std::size_t>(o) * out_fc.in_dim;
        const double* wrow = out_fc.w.v.data() + static_cast<std::size_t>(o) * out_fc.in_dim;
        for (int i = 0; i < out_fc.in_dim; ++i) {
            dwrow[i] += dv * out_in[i];
            d_out_in[i] += dv * wrow[i];
        }
    }

    std::vector<double> d_pooled;
    if (net.head_depth == 2) {
        relu_backward(c.fc1_pre, d_out_in);
        const FcLayer& fc1 = net.head[0];
        d_pooled.assign(fc1.in_dim, 0.0);
        for (int o = 0; o < fc1.out_dim; ++o) {
            const double dv = d_out_in[o];
            db_fc1->v[o] += dv;
            double* dwrow = dw_fc1->v.data() + static_cast<std::size_t>(o) * fc1.in_dim;
            const double* wrow = fc1.w.v.data() + static_cast<std::size_t>(o) * fc1.in_dim;
            for (int i = 0; i < fc1.in_dim; ++i) {
                dwrow[i] += dv * c.pooled[i];
                d_pooled[i] += dv * wrow[i];
            }
        }
    } else {
        d_pooled = std::move(d_out_in);
    }

    // pool backward: every spatial position shares the channel gradient
    const int area = d.s2 * d.s2;
    std::vector<double> d_a4(static_cast<std::size_t>(16) * area);
    for (int ch = 0; ch < 16; ++ch) {
        const double dv = d_pooled[ch] / area;
        double* plane = d_a4.data() + static_cast<std::size_t>(ch) * area;
        for (int i = 0; i < area; ++i) plane[i] = dv;
    }

    std::vector<double> padded, d_padded, d_tmp;

    // block2: a4 = a3 + block2_b(relu(block2_a(a3)))
    std::vector<double> d_r2; // via conv path
    zero_pad(c.r2.data(), 16, d.s2, padded);
    d_padded.assign(padded.size(), 0.0);
    conv_backward(padded, d.s2, net.block2_b, d_a4, g.tensors[10], g.tensors[11], &d_padded);
    crop_padded(d_padded, 16, d.s2, d_r2);
    relu_backward(c.u2, d_r2);

    std::vector<double> d_a3 = d_a4; // skip connection
    zero_pad(c.a3.data(), 16, d.s2, padded);
    d_padded.assign(padded.size(), 0.0);
    conv_backward(padded, d.s2, net.block2_a, d_r2, g.tensors[8], g.tensors[9], &d_padded);
    crop_padded(d_padded, 16, d.s2, d_tmp);
    for (std::size_t i = 0; i < d_a3.size(); ++i) d_a3[i] += d_tmp[i];

    relu_backward(c.z2, d_a3); // d_a3 becomes d_z2
    std::vector<double> d_a2;
    zero_pad(c.a2.data(), 8, d.s1, padded);
    d_padded.assign(padded.size(), 0.0);
    conv_backward(padded, d.s1, net.conv2, d_a3, g.tensors[6], g.tensors[7], &d_padded);
    crop_padded(d_padded, 8, d.s1, d_a2);

    // block1
    std::vector<double> d_r1;
    zero_pad(c.r1.data(), 8, d.s1, padded);
    d_padded.assign(padded.size(), 0.0);
    conv_backward(padded, d.s1, net.block1_b, d_a2, g.tensors[4], g.tensors[5], &d_padded);
    crop_padded(d_padded, 8, d.s1, d_r1);
    relu_backward(c.u1, d_r1);

    std::vector<double> d_a1 = d_a2; // skip connection
    zero_pad(c.a1.data(), 8, d.s1, padded);
    d_padded.assign(padded.size(), 0.0);
    conv_backward(padded, d.s1, net.block1_a, d_r1, g.tensors[2], g.tensors[3], &d_padded);
    crop_padded(d_padded, 8, d.s1, d_tmp);
    for (std::size_t i = 0; i < d_a1.size(); ++i) d_a1[i] += d_tmp[i];

    relu_backward(c.z1, d_a1); // d_a1 becomes d_z1
    zero_pad(c.input.data(), 3, d.s0, padded);
    conv_backward(padded, d.s0, net.conv1, d_a1, g.tensors[0], g.tensors[1], nullptr);
}

Gradients zero_gradients(const ResidualNet& net) {
    Gradients g;
    for (const Tensor* p : net.parameters()) g.tensors.push_back(Tensor::zeros(p->shape));
    return g;
}

void check_batch(const ResidualNet& net, const MapBatch& batch) {
    if (batch.size != net.input_size)
        throw DimensionError("forward: map size does not match network input size");
    for (const float* m : batch.maps)
        if (m == nullptr) throw ArgumentError("forward: null map pointer");
}

} // namespace

std::vector<std::vector<double>> forward(const ResidualNet& net, const MapBatch& batch,
                                         std::vector<ForwardCache>* caches) {
    check_batch(net, batch);
    std::vector<std::vector<double>> probs(batch.maps.size());
    if (caches) caches->resize(batch.maps.size());
    ForwardCache scratch;
    for (std::size_t i = 0; i < batch.maps.size(); ++i) {
        ForwardCache& c = caches ? (*caches)[i] : scratch;
        probs[i] = forward_one(net, batch.maps[i], c);
    }
    return probs;
}

Gradients backward(const ResidualNet& net, const MapBatch& batch, const std::vector<int>& targets,
                   const std::vector<ForwardCache>& caches,
                   const std::vector<std::vector<double>>& probs) {
    check_batch(net, batch);
    if (batch.maps.size() != targets.size() || caches.size() != targets.size() ||
        probs.size() != targets.size())
        throw ArgumentError("backward: batch/cache/target size mismatch");
    Gradients g = zero_gradients(net);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] < 0 || targets[i] >= net.n_classes)
            throw ArgumentError("backward: target out of range");
        backward_one(net, caches[i], probs[i], targets[i], g);
    }
    const double inv_n = 1.0 / static_cast<double>(targets.size());
    for (Tensor& t : g.tensors)
        for (double& x : t.v) x *= inv_n;
    return g;
}

double mean_cross_entropy(const std::vector<std::vector<double>>& probs,
                          const std::vector<int>& targets) {
    if (probs.size() != targets.size()) throw ArgumentError("mean_cross_entropy: size mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::max(probs[i][targets[i]], 1e-300);
        loss -= std::log(p);
    }
    return loss / static_cast<double>(probs.size());
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ArgumentError("train: batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw ArgumentError("train: learning rate must be positive");
    if (epochs < 1) throw ArgumentError("train: epochs must be >= 1");
}

AdamState make_adam_state(const ResidualNet& net) {
    AdamState s;
    for (const Tensor* p : net.parameters()) {
        s.m.push_back(Tensor::zeros(p->shape));
        s.v.push_back(Tensor::zeros(p->shape));
    }
    return s;
}

void adam_step(ResidualNet& net, const Gradients& grads, AdamState& state, const TrainConfig& cfg,
               int t) {
    if (t < 1) throw ArgumentError("adam_step: step index must be >= 1");
    auto params = net.parameters();
    if (grads.tensors.size() != params.size() || state.m.size() != params.size())
        throw ArgumentError("adam_step: parameter/state shape mismatch");

    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        const Tensor& g = grads.tensors[pi];
        Tensor& m = state.m[pi];
        Tensor& v = state.v[pi];
        if (g.v.size() != p.v.size()) throw ArgumentError("adam_step: gradient shape mismatch");
        for (std::size_t i = 0; i < p.v.size(); ++i) {
            m.v[i] = cfg.beta1 * m.v[i] + (1.0 - cfg.beta1) * g.v[i];
            v.v[i] = cfg.beta2 * v.v[i] + (1.0 - cfg.beta2) * g.v[i] * g.v[i];
            const double m_hat = m.v[i] / bc1;
            const double v_hat = v.v[i] / bc2;
            p.v[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

TrainTrace train(ResidualNet& net, const TrainSet& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.maps.empty()) throw ArgumentError("train: empty dataset");
    if (data.maps.size() != data.labels.size())
        throw ArgumentError("train: map/label size mismatch");

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(data.maps.size());
    std::iota(order.begin(), order.end(), 0);

    TrainTrace trace;
    AdamState state = make_adam_state(net);
    int t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            MapBatch batch;
            batch.size = data.map_size;
            std::vector<int> targets;
            for (std::size_t i = start; i < end; ++i) {
                batch.maps.push_back(data.maps[order[i]]);
                targets.push_back(data.labels[order[i]]);
            }
            std::vector<ForwardCache> caches;
            auto probs = forward(net, batch, &caches);
            Gradients grads = backward(net, batch, targets, caches, probs);

            int correct = 0;
            for (std::size_t i = 0; i < probs.size(); ++i) {
                const auto arg = std::max_element(probs[i].begin(), probs[i].end());
                if (static_cast<int>(arg - probs[i].begin()) == targets[i]) ++correct;
            }
            ++t;
            adam_step(net, grads, state, cfg, t);
            trace.iteration.push_back(t);
            trace.loss.push_back(mean_cross_entropy(probs, targets));
            trace.accuracy.push_back(static_cast<double>(correct) / probs.size());
        }
    }
    return trace;
}

std::vector<int> predict(const ResidualNet& net, const MapBatch& batch) {
    auto probs = forward(net, batch);
    std::vector<int> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const auto arg = std::max_element(probs[i].begin(), probs[i].end());
        out[i] = static_cast<int>(arg - probs[i].begin());
    }
    return out;
}

double evaluate_accuracy(const ResidualNet& net, const TrainSet& data) {
    if (data.maps.empty()) throw ArgumentError("evaluate_accuracy: empty dataset");
    MapBatch batch;
    batch.size = data.map_size;
    batch.maps = data.maps;
    auto preds = predict(net, batch);
    int correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == data.labels[i]) ++correct;
    return static_cast<double>(correct) / preds.size();
}

// --------------------------------------------------------------------------
// Persistence
// --------------------------------------------------------------------------

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw DataError("model file: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(os, bits);
}

float get_f32(std::istream& is) {
    const std::uint32_t bits = get_u32(is);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

constexpr std::uint32_t kModelVersion = 1;

} // namespace

void save_model(const ResidualNet& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_model: cannot open " + path);
    os.write("ULGF", 4);
    put_u32(os, kModelVersion);
    put_u32(os, static_cast<std::uint32_t>(net.input_size));
    put_u32(os, static_cast<std::uint32_t>(net.n_classes));
    put_u32(os, static_cast<std::uint32_t>(net.head_depth));
    auto params = net.parameters();
    put_u32(os, static_cast<std::uint32_t>(params.size()));
    for (const Tensor* t : params) {
        put_u32(os, static_cast<std::uint32_t>(t->shape.size()));
        for (int d : t->shape) put_u32(os, static_cast<std::uint32_t>(d));
    }
    for (const Tensor* t : params)
        for (double x : t->v) put_f32(os, static_cast<float>(x));
    if (!os) throw IoError("save_model: write failed for " + path);
}

ResidualNet load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_model: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "ULGF", 4) != 0)
        throw DataError("load_model: bad magic in " + path);
    if (get_u32(is) != kModelVersion) throw DataError("load_model: unsupported version");
    const int input_size = static_cast<int>(get_u32(is));
    const int n_classes = static_cast<int>(get_u32(is));
    const int head_depth = static_cast<int>(get_u32(is));

    ResidualNet net = make_residual_net(input_size, n_classes, head_depth, 0);
    auto params = net.parameters();
    const std::uint32_t n_tensors = get_u32(is);
    if (n_tensors != params.size()) throw DataError("load_model: tensor count mismatch");
    for (Tensor* t : params) {
        const std::uint32_t ndim = get_u32(is);
        if (ndim != t->shape.size()) throw DataError("load_model: tensor rank mismatch");
        for (int d : t->shape)
            if (get_u32(is) != static_cast<std::uint32_t>(d))
                throw DataError("load_model: tensor dimension mismatch");
    }
    for (Tensor* t : params)
        for (double& x : t->v) x = static_cast<double>(get_f32(is));
    if (!is) throw DataError("load_model: truncated parameter data");
    return net;
}

} // namespace ulgfbp
