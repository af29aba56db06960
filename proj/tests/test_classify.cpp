#include "doctest.h"

#include <cmath>

#include "testutil.hpp"
#include "ulgfbp/classify.hpp"

using namespace ulgfbp;

namespace {

std::vector<std::vector<float>> random_maps(int n, int size, Rng& rng) {
    std::vector<std::vector<float>> maps(n, std::vector<float>(static_cast<std::size_t>(3) * size * size));
    for (auto& m : maps)
        for (float& v : m) v = static_cast<float>(rng.uniform());
    return maps;
}

MapBatch batch_of(const std::vector<std::vector<float>>& maps, int size) {
    MapBatch b;
    b.size = size;
    for (const auto& m : maps) b.maps.push_back(m.data());
    return b;
}

void zero_head(ResidualNet& net) {
    for (auto& fc : net.head) {
        for (double& x : fc.w.v) x = 0.0;
        for (double& x : fc.b.v) x = 0.0;
    }
}

} // namespace

TEST_CASE("chi-square distance and nearest-neighbor vote") {
    const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0}, q{0.9, 0.1};
    CHECK(chi_square_distance(a, a) == 0.0);
    CHECK(chi_square_distance(q, a) == doctest::Approx(0.01 / 1.9 + 0.01 / 0.1).epsilon(1e-9));
    CHECK(chi_square_distance(q, a) < chi_square_distance(q, b));
    CHECK_THROWS_AS(chi_square_distance(a, {1.0}), ArgumentError);

    KnnModel model = knn_fit({a, b}, {0, 1}, 1);
    CHECK(knn_predict(model, q) == 0);
    CHECK(knn_predict(model, a) == 0); // exact stored vector
    CHECK(knn_predict(model, b) == 1);
}

TEST_CASE("knn_fit contract checks") {
    CHECK_THROWS_AS(knn_fit({}, {}, 1), ArgumentError);
    CHECK_THROWS_AS(knn_fit({{1.0}}, {0}, 0), ArgumentError);
    CHECK_THROWS_AS(knn_fit({{1.0}}, {0}, 2), ArgumentError);
    CHECK_THROWS_AS(knn_fit({{1.0}, {1.0, 2.0}}, {0, 1}, 1), ArgumentError);
    // duplicates permitted
    KnnModel dup = knn_fit({{1.0}, {1.0}, {2.0}}, {0, 0, 1}, 2);
    CHECK(dup.features.size() == 3);
    CHECK_THROWS_AS(knn_predict(dup, {1.0, 2.0}), ArgumentError);
}

TEST_CASE("knn k=1 reproduces its own training set") {
    Rng rng(41);
    std::vector<std::vector<double>> feats;
    std::vector<int> labels;
    for (int i = 0; i < 25; ++i) {
        std::vector<double> f(10);
        for (double& v : f) v = rng.uniform();
        feats.push_back(f);
        labels.push_back(static_cast<int>(rng.below(3)));
    }
    KnnModel model = knn_fit(feats, labels, 1);
    for (int i = 0; i < 25; ++i) CHECK(knn_predict(model, feats[i]) == labels[i]);
}

TEST_CASE("forward produces valid distributions; zero head is uniform") {
    Rng rng(42);
    ResidualNet net = make_residual_net(8, 3, 1, 99);
    auto maps = random_maps(4, 8, rng);
    auto probs = forward(net, batch_of(maps, 8));
    REQUIRE(probs.size() == 4);
    for (const auto& p : probs) {
        REQUIRE(p.size() == 3);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }

    zero_head(net);
    probs = forward(net, batch_of(maps, 8));
    for (const auto& p : probs)
        for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax is shift invariant in the logits") {
    Rng rng(43);
    ResidualNet net = make_residual_net(8, 4, 1, 5);
    auto maps = random_maps(2, 8, rng);
    auto before = forward(net, batch_of(maps, 8));
    for (double& b : net.head.back().b.v) b += 3.7; // shift every logit
    auto after = forward(net, batch_of(maps, 8));
    for (std::size_t i = 0; i < before.size(); ++i)
        for (std::size_t c = 0; c < before[i].size(); ++c)
            CHECK(before[i][c] == doctest::Approx(after[i][c]).epsilon(1e-9));
}

TEST_CASE("residual blocks with zero weights are identity maps") {
    Rng rng(44);
    ResidualNet net = make_residual_net(8, 2, 1, 17);
    for (ConvLayer* l : {&net.block1_a, &net.block1_b, &net.block2_a, &net.block2_b}) {
        for (double& x : l->w.v) x = 0.0;
        for (double& x : l->b.v) x = 0.0;
    }
    auto maps = random_maps(1, 8, rng);
    std::vector<ForwardCache> caches;
    forward(net, batch_of(maps, 8), &caches);
    CHECK(caches[0].a2 == caches[0].a1);
    CHECK(caches[0].a4 == caches[0].a3);
}

TEST_CASE("zero-weight head gives bias gradient softmax minus one-hot") {
    Rng rng(45);
    ResidualNet net = make_residual_net(8, 3, 1, 3);
    zero_head(net);
    auto maps = random_maps(1, 8, rng);
    MapBatch batch = batch_of(maps, 8);
    std::vector<ForwardCache> caches;
    auto probs = forward(net, batch, &caches);
    Gradients g = backward(net, batch, {1}, caches, probs);
    const Tensor& db = g.tensors.back(); // head bias is the final parameter
    CHECK(db.v[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(db.v[1] == doctest::Approx(1.0 / 3.0 - 1.0).epsilon(1e-12));
    CHECK(db.v[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("duplicated samples contribute linearly to the mean gradient") {
    Rng rng(46);
    ResidualNet net = make_residual_net(8, 2, 1, 23);
    auto maps = random_maps(2, 8, rng);

    auto grads_for = [&](const std::vector<const float*>& ptrs, const std::vector<int>& targets) {
        MapBatch b;
        b.size = 8;
        b.maps = ptrs;
        std::vector<ForwardCache> caches;
        auto probs = forward(net, b, &caches);
        return backward(net, b, targets, caches, probs);
    };
    Gradients ga = grads_for({maps[0].data()}, {0});
    Gradients gb = grads_for({maps[1].data()}, {1});
    Gradients gdup = grads_for({maps[0].data(), maps[0].data(), maps[1].data()}, {0, 0, 1});
    for (std::size_t t = 0; t < gdup.tensors.size(); ++t)
        for (std::size_t i = 0; i < gdup.tensors[t].v.size(); ++i) {
            const double expected = (2.0 * ga.tensors[t].v[i] + gb.tensors[t].v[i]) / 3.0;
            CHECK(gdup.tensors[t].v[i] == doctest::Approx(expected).epsilon(1e-9));
        }
}

TEST_CASE("analytic gradients match central finite differences") {
    for (int head_depth : {1, 2}) {
        ResidualNet net = make_residual_net(8, 3, head_depth, 1234);
        Rng rng(head_depth);
        auto maps = random_maps(4, 8, rng);
        MapBatch batch = batch_of(maps, 8);
        std::vector<int> targets{0, 2, 1, 2};

        std::vector<ForwardCache> caches;
        auto probs = forward(net, batch, &caches);
        Gradients grads = backward(net, batch, targets, caches, probs);

        auto loss = [&]() { return mean_cross_entropy(forward(net, batch), targets); };
        auto params = net.parameters();
        const double h = 1e-6;
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < params[pi]->v.size(); ++i) {
                const double orig = params[pi]->v[i];
                params[pi]->v[i] = orig + h;
                const double lp = loss();
                params[pi]->v[i] = orig - h;
                const double lm = loss();
                params[pi]->v[i] = orig;
                const double fd = (lp - lm) / (2.0 * h);
                const double an = grads.tensors[pi].v[i];
                num += (an - fd) * (an - fd);
                den += std::max(an * an, fd * fd);
            }
            CHECK(std::sqrt(num / std::max(den, 1e-300)) < 1e-4);
        }
    }
}

TEST_CASE("adam first step moves by about lr in the gradient direction") {
    ResidualNet net = make_residual_net(8, 2, 1, 7);
    const std::vector<double> before = net.conv1.w.v;

    Gradients g;
    for (const Tensor* p : net.parameters()) g.tensors.push_back(Tensor::zeros(p->shape));
    g.tensors[0].v[0] = 0.5;
    g.tensors[0].v[1] = -0.25;
    g.tensors[0].v[2] = 0.5; // equal to slot 0

    TrainConfig cfg;
    AdamState state = make_adam_state(net);
    adam_step(net, g, state, cfg, 1);

    const double lr = cfg.learning_rate;
    CHECK(std::abs((net.conv1.w.v[0] - before[0]) + lr) < 0.5 * 1e-6);
    CHECK(std::abs((net.conv1.w.v[1] - before[1]) - lr) < 0.25 * 1e-6);
    CHECK(net.conv1.w.v[0] - before[0] == doctest::Approx(net.conv1.w.v[2] - before[2]));
    // untouched parameters stay put under zero gradient
    CHECK(net.conv1.w.v[3] == before[3]);
    CHECK_THROWS_AS(adam_step(net, g, state, cfg, 0), ArgumentError);
}

TEST_CASE("training trace length and determinism") {
    Rng rng(48);
    const int n = 100;
    auto maps = random_maps(n, 8, rng);
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) labels.push_back(i % 2);

    TrainSet ts;
    ts.map_size = 8;
    for (const auto& m : maps) ts.maps.push_back(m.data());
    ts.labels = labels;

    TrainConfig cfg; // BS 20, 5 epochs
    cfg.seed = 77;
    ResidualNet n1 = make_residual_net(8, 2, 1, 55);
    TrainTrace t1 = train(n1, ts, cfg);
    CHECK(t1.iteration.size() == 25); // 5 x ceil(100/20)

    ResidualNet n2 = make_residual_net(8, 2, 1, 55);
    TrainTrace t2 = train(n2, ts, cfg);
    CHECK(t1.loss == t2.loss);
    CHECK(t1.accuracy == t2.accuracy);
    auto p1 = n1.parameters();
    auto p2 = n2.parameters();
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i]->v == p2[i]->v);

    TrainSet empty;
    empty.map_size = 8;
    CHECK_THROWS_AS(train(n1, empty, cfg), ArgumentError);
}

TEST_CASE("separable toy training reduces the loss") {
    const int size = 8, n = 40;
    std::vector<std::vector<float>> maps(n, std::vector<float>(3ull * size * size, 0.0f));
    std::vector<int> labels(n);
    Rng rng(49);
    for (int i = 0; i < n; ++i) {
        labels[i] = i % 2;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const bool lit = labels[i] == 0 ? x < size / 2 : x >= size / 2;
                for (int c = 0; c < 3; ++c)
                    maps[i][static_cast<std::size_t>(c) * size * size + y * size + x] =
                        lit ? 1.0f : static_cast<float>(0.05 * rng.uniform());
            }
    }
    TrainSet ts;
    ts.map_size = size;
    for (const auto& m : maps) ts.maps.push_back(m.data());
    ts.labels = labels;

    TrainConfig cfg;
    cfg.seed = 3;
    ResidualNet net = make_residual_net(size, 2, 1, 19);
    TrainTrace trace = train(net, ts, cfg);
    REQUIRE(trace.loss.size() == 10); // 5 x ceil(40/20)
    const double first_epoch = (trace.loss[0] + trace.loss[1]) / 2.0;
    const double last_epoch = (trace.loss[8] + trace.loss[9]) / 2.0;
    CHECK(last_epoch < first_epoch);
}

TEST_CASE("replace_head changes only the head") {
    ResidualNet net = make_residual_net(8, 3, 1, 31);
    const std::vector<double> conv_w = net.conv1.w.v;
    const std::vector<double> block_w = net.block2_b.w.v;
    replace_head(net, 2, 99);
    CHECK(net.n_classes == 2);
    CHECK(net.head.back().out_dim == 2);
    CHECK(net.conv1.w.v == conv_w);
    CHECK(net.block2_b.w.v == block_w);
    for (double b : net.head.back().b.v) CHECK(b == 0.0);

    Rng rng(50);
    auto maps = random_maps(1, 8, rng);
    auto probs = forward(net, batch_of(maps, 8));
    CHECK(probs[0].size() == 2);

    replace_head(net, 3, 100);
    probs = forward(net, batch_of(maps, 8));
    CHECK(probs[0].size() == 3);
    CHECK_THROWS_AS(replace_head(net, 1, 0), ArgumentError);
}

TEST_CASE("model files round-trip through float32 parameters") {
    testutil::TempDir dir("model");
    ResidualNet net = make_residual_net(8, 3, 2, 61);
    const std::string path = (dir.path() / "net.bin").string();
    save_model(net, path);

    ResidualNet loaded = load_model(path);
    CHECK(loaded.input_size == 8);
    CHECK(loaded.n_classes == 3);
    CHECK(loaded.head_depth == 2);

    Rng rng(51);
    auto maps = random_maps(2, 8, rng);
    auto p1 = forward(net, batch_of(maps, 8));
    auto p2 = forward(loaded, batch_of(maps, 8));
    for (std::size_t i = 0; i < p1.size(); ++i)
        for (std::size_t c = 0; c < p1[i].size(); ++c)
            CHECK(p1[i][c] == doctest::Approx(p2[i][c]).epsilon(1e-5));

    // a second save of the loaded net is byte-identical
    const std::string path2 = (dir.path() / "net2.bin").string();
    save_model(loaded, path2);
    CHECK(testutil::slurp(path) == testutil::slurp(path2));

    CHECK_THROWS_AS(load_model((dir.path() / "missing.bin").string()), IoError);
}

TEST_CASE("batch shape validation") {
    ResidualNet net = make_residual_net(8, 2, 1, 1);
    Rng rng(52);
    auto maps = random_maps(1, 16, rng);
    CHECK_THROWS_AS(forward(net, batch_of(maps, 16)), DimensionError);
}
