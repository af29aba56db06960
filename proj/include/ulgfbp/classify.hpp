#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ulgfbp {

// --------------------------------------------------------------------------
// k-NN over histogram features
// --------------------------------------------------------------------------

// d(a, b) = sum (a_i - b_i)^2 / (a_i + b_i + 1e-12)
double chi_square_distance(const std::vector<double>& a, const std::vector<double>& b);

struct KnnModel {
    int k = 1;
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
};

KnnModel knn_fit(std::vector<std::vector<double>> features, std::vector<int> labels, int k);

// Majority vote over the k nearest stored vectors; ties resolved by the
// smaller summed distance among tied classes, then the smaller class index.
int knn_predict(const KnnModel& model, const std::vector<double>& query);

// --------------------------------------------------------------------------
// Small residual convolutional network over 3-channel square maps
// --------------------------------------------------------------------------

struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    static Tensor zeros(std::vector<int> shape);
    std::size_t size() const { return v.size(); }
};

struct ConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
    Tensor w; // [out, in, 3, 3]
    Tensor b; // [out]
};

struct FcLayer {
    int in_dim = 0;
    int out_dim = 0;
    Tensor w; // [out, in]
    Tensor b; // [out]
};

// conv(3x3, 8, stride 2) + ReLU -> residual block (8) -> conv(3x3, 16,
// stride 2) + ReLU -> residual block (16) -> global average pool -> head.
// Residual blocks compute x + conv_b(relu(conv_a(x))); all-zero block
// weights give the identity map.
struct ResidualNet {
    int input_size = 224; // square, 3 channels
    int n_classes = 0;
    int head_depth = 1; // 1 or 2 fully-connected layers

    ConvLayer conv1;
    ConvLayer block1_a, block1_b;
    ConvLayer conv2;
    ConvLayer block2_a, block2_b;
    std::vector<FcLayer> head;

    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
};

ResidualNet make_residual_net(int input_size, int n_classes, int head_depth, std::uint64_t seed);

// Replaces the classification head for a new class count; every other weight
// is untouched. Head weights are seeded uniform in [-0.05, 0.05], biases 0.
void replace_head(ResidualNet& net, int n_classes, std::uint64_t seed);

// Per-sample activations kept for the backward pass.
struct ForwardCache {
    std::vector<double> input;
    std::vector<double> z1, a1;
    std::vector<double> u1, r1, a2;
    std::vector<double> z2, a3;
    std::vector<double> u2, r2, a4;
    std::vector<double> pooled;
    std::vector<double> fc1_pre, fc1_act; // head depth 2 only
};

// maps[i] points at a planar 3 x size x size float buffer.
struct MapBatch {
    int size = 0;
    std::vector<const float*> maps;
};

// Softmax class probabilities per sample, each summing to 1.
std::vector<std::vector<double>> forward(const ResidualNet& net, const MapBatch& batch,
                                         std::vector<ForwardCache>* caches = nullptr);

struct Gradients {
    std::vector<Tensor> tensors; // aligned with ResidualNet::parameters()
};

// Gradient of the mean cross-entropy over the batch for every parameter.
Gradients backward(const ResidualNet& net, const MapBatch& batch, const std::vector<int>& targets,
                   const std::vector<ForwardCache>& caches,
                   const std::vector<std::vector<double>>& probs);

double mean_cross_entropy(const std::vector<std::vector<double>>& probs,
                          const std::vector<int>& targets);

struct TrainConfig {
    int batch_size = 20;
    double learning_rate = 1e-4; // initial learning rate, held constant
    int epochs = 5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AdamState {
    std::vector<Tensor> m, v;
};

AdamState make_adam_state(const ResidualNet& net);

// Standard Adam with bias correction; t is the 1-based step index.
void adam_step(ResidualNet& net, const Gradients& grads, AdamState& state, const TrainConfig& cfg,
               int t);

struct TrainTrace {
    std::vector<int> iteration;   // 1-based
    std::vector<double> loss;     // mini-batch mean cross-entropy
    std::vector<double> accuracy; // mini-batch fraction correct
};

struct TrainSet {
    int map_size = 0;
    std::vector<const float*> maps;
    std::vector<int> labels;
};

// Shuffles once per epoch with a generator seeded from cfg.seed, keeps the
// last partial batch, records one trace entry per iteration.
TrainTrace train(ResidualNet& net, const TrainSet& data, const TrainConfig& cfg);

// Fraction of samples whose argmax probability matches the label.
double evaluate_accuracy(const ResidualNet& net, const TrainSet& data);

std::vector<int> predict(const ResidualNet& net, const MapBatch& batch);

// Binary format: "ULGF", u32 version, topology header, per-tensor dimension
// table, then parameters as little-endian 32-bit floats in parameter order.
void save_model(const ResidualNet& net, const std::string& path);
ResidualNet load_model(const std::string& path);

} // namespace ulgfbp
