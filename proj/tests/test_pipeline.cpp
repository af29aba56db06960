#include "doctest.h"

#include <cstring>

#include "testutil.hpp"
#include "ulgfbp/image_io.hpp"
#include "ulgfbp/pipeline.hpp"

using namespace ulgfbp;

namespace {

PipelineConfig small_config() {
    PipelineConfig cfg;
    cfg.resize_width = 48;
    cfg.resize_height = 48;
    cfg.map_size = 16;
    return cfg;
}

LabelImage constant_labels(int w, int h, std::uint8_t value) {
    LabelImage li;
    li.width = w;
    li.height = h;
    li.labels.assign(static_cast<std::size_t>(w) * h, value);
    return li;
}

} // namespace

TEST_CASE("compose_map trivial and derived cases") {
    std::vector<LabelImage> six;
    for (int i = 0; i < 6; ++i) six.push_back(constant_labels(10, 10, 0));
    auto map = compose_map(six, 8);
    REQUIRE(map.size() == 8u * 8 * 3);
    for (float v : map) CHECK(v == 0.0f);

    for (auto& li : six) li = constant_labels(10, 10, 58);
    map = compose_map(six, 8);
    for (float v : map) CHECK(v == doctest::Approx(1.0f));

    // scale-0 pair at {0, 58}: channel 0 becomes 0.5, others stay 0
    six[0] = constant_labels(10, 10, 0);
    six[1] = constant_labels(10, 10, 58);
    for (int i = 2; i < 6; ++i) six[i] = constant_labels(10, 10, 0);
    map = compose_map(six, 8);
    for (int i = 0; i < 64; ++i) CHECK(map[i] == doctest::Approx(0.5f));
    for (int i = 64; i < 192; ++i) CHECK(map[i] == 0.0f);

    six.pop_back();
    CHECK_THROWS_AS(compose_map(six, 8), ArgumentError);
}

TEST_CASE("extract_ulgfbp feature geometry and determinism") {
    const PipelineConfig cfg = small_config();
    Rng rng(11);
    GrayImage img = testutil::random_gray(40, 40, rng);

    UlgfbpFeature f1 = extract_ulgfbp(img, cfg);
    CHECK(f1.histogram.size() == 3186); // 6 filters x 9 regions x 59 bins
    CHECK(f1.map.size() == static_cast<std::size_t>(cfg.map_size) * cfg.map_size * 3);

    for (std::size_t seg = 0; seg < f1.histogram.size(); seg += 59) {
        double sum = 0.0;
        bool zero = true;
        for (int i = 0; i < 59; ++i) {
            const double v = f1.histogram[seg + i];
            CHECK(v >= 0.0);
            sum += v;
            zero = zero && v == 0.0;
        }
        if (!zero) CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (float v : f1.map) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }

    UlgfbpFeature f2 = extract_ulgfbp(img, cfg);
    CHECK(f1.histogram == f2.histogram);
    CHECK(f1.map == f2.map);
}

TEST_CASE("extract_ulgfbp on a constant image is one-hot everywhere") {
    const PipelineConfig cfg = small_config();
    GrayImage img(32, 32, 170);
    UlgfbpFeature f = extract_ulgfbp(img, cfg);
    // all six label images are constant at u2_label(0xff) = 57
    for (std::size_t seg = 0; seg < f.histogram.size(); seg += 59) {
        CHECK(f.histogram[seg + 57] == doctest::Approx(1.0));
    }
}

TEST_CASE("riu2 mode shrinks the feature vector") {
    PipelineConfig cfg = small_config();
    cfg.mode = LbpMode::Riu2;
    CHECK(cfg.feature_length() == 6 * 9 * 10);
    Rng rng(12);
    GrayImage img = testutil::random_gray(40, 40, rng);
    UlgfbpFeature f = extract_ulgfbp(img, cfg);
    CHECK(f.histogram.size() == 540);
}

TEST_CASE("load_dataset walks class folders deterministically") {
    testutil::TempDir dir("dataset");
    namespace fs = std::filesystem;
    fs::create_directories(dir.path() / "COVID");
    fs::create_directories(dir.path() / "Normal");
    GrayImage img(8, 8, 100);
    for (const char* name : {"a.png", "b.png"})
        write_png_gray((dir.path() / "COVID" / name).string(), img);
    for (const char* name : {"c.png", "d.png", "e.png"})
        write_png_gray((dir.path() / "Normal" / name).string(), img);

    LabeledDataset ds = load_dataset(dir.str());
    REQUIRE(ds.class_names == std::vector<std::string>{"COVID", "Normal"});
    REQUIRE(ds.samples.size() == 5);
    CHECK(ds.class_counts() == std::vector<std::size_t>{2, 3});
    CHECK(ds.samples[0].id == "COVID/a.png");
    CHECK(ds.samples[4].id == "Normal/e.png");

    LabeledDataset again = load_dataset(dir.str());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(ds.samples[i].id == again.samples[i].id);
        CHECK(ds.samples[i].class_index == again.samples[i].class_index);
    }
}

TEST_CASE("load_dataset error paths") {
    testutil::TempDir dir("dataset_bad");
    CHECK_THROWS_AS(load_dataset(dir.str()), DataError); // no class folders

    GrayImage img(4, 4, 1);
    write_png_gray((dir.path() / "stray.png").string(), img);
    CHECK_THROWS_AS(load_dataset(dir.str()), DataError); // classless file

    CHECK_THROWS_AS(load_dataset((dir.path() / "missing").string()), DataError);
}

TEST_CASE("balance_by_rotation fills minority classes with rotations") {
    LabeledDataset ds;
    ds.class_names = {"A", "B"};
    Rng rng(13);
    for (int i = 0; i < 4; ++i) {
        Sample s;
        s.id = "A/" + std::to_string(i);
        s.raster = testutil::random_gray(6, 6, rng);
        s.class_index = 0;
        ds.samples.push_back(s);
    }
    for (int i = 0; i < 2; ++i) {
        Sample s;
        s.id = "B/" + std::to_string(i);
        s.raster = testutil::random_gray(6, 6, rng);
        s.class_index = 1;
        ds.samples.push_back(s);
    }

    BalanceReport report;
    LabeledDataset out = balance_by_rotation(ds, &report);
    CHECK(out.class_counts() == std::vector<std::size_t>{4, 4});
    CHECK(report.added_per_class == std::vector<std::size_t>{0, 2});
    CHECK_FALSE(report.duplicates_used);
    REQUIRE(out.samples.size() == 8);
    CHECK(out.samples[6].id == "B/0#r90");
    CHECK(out.samples[6].quarter_turns == 1);
    CHECK(out.samples[7].id == "B/1#r90");
    // originals untouched, in their original order
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(out.samples[i].id == ds.samples[i].id);
        CHECK(out.samples[i].quarter_turns == 0);
    }
}

TEST_CASE("balance_by_rotation no-op and duplicate-fill cases") {
    LabeledDataset even;
    even.class_names = {"A", "B"};
    Rng rng(14);
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 3; ++i) {
            Sample s;
            s.id = std::string(c == 0 ? "A/" : "B/") + std::to_string(i);
            s.raster = testutil::random_gray(5, 5, rng);
            s.class_index = c;
            even.samples.push_back(s);
        }
    BalanceReport report;
    LabeledDataset out = balance_by_rotation(even, &report);
    CHECK(out.samples.size() == 6);
    CHECK_FALSE(report.duplicates_used);

    LabeledDataset skew;
    skew.class_names = {"A", "B"};
    for (int i = 0; i < 9; ++i) {
        Sample s;
        s.id = "A/" + std::to_string(i);
        s.raster = testutil::random_gray(5, 5, rng);
        s.class_index = 0;
        skew.samples.push_back(s);
    }
    for (int i = 0; i < 2; ++i) {
        Sample s;
        s.id = "B/" + std::to_string(i);
        s.raster = testutil::random_gray(5, 5, rng);
        s.class_index = 1;
        skew.samples.push_back(s);
    }
    out = balance_by_rotation(skew, &report);
    CHECK(out.class_counts() == std::vector<std::size_t>{9, 9});
    CHECK(report.duplicates_used);
    CHECK_FALSE(report.notes.empty());
    // 2 originals -> 6 unique rotations -> one duplicated 90-degree fill
    CHECK(out.samples.back().id == "B/0#r90x2");

    LabeledDataset empty_class;
    empty_class.class_names = {"A", "B"};
    empty_class.samples = {skew.samples[0]};
    CHECK_THROWS_AS(balance_by_rotation(empty_class), ArgumentError);
}

TEST_CASE("extract_dataset output is independent of worker count") {
    const PipelineConfig cfg = small_config();
    LabeledDataset ds;
    ds.class_names = {"A", "B"};
    Rng rng(15);
    for (int i = 0; i < 6; ++i) {
        Sample s;
        s.id = "s" + std::to_string(i);
        s.raster = testutil::random_gray(30, 30, rng);
        s.class_index = i % 2;
        s.quarter_turns = i % 4;
        ds.samples.push_back(s);
    }
    auto loader = [](const std::string&) -> GrayImage {
        throw DataError("loader should not be called for raster samples");
    };
    auto seq = extract_dataset(ds, cfg, loader, 1);
    auto par = extract_dataset(ds, cfg, loader, 4);
    REQUIRE(seq.size() == par.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        CHECK(seq[i].id == par[i].id);
        CHECK(seq[i].histogram == par[i].histogram);
        CHECK(seq[i].map == par[i].map);
    }
}

TEST_CASE("pipeline config validation") {
    PipelineConfig cfg = small_config();
    cfg.omegas = {1.0, 0.5};
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
    cfg = small_config();
    cfg.resize_width = 2;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
    cfg = small_config();
    cfg.lbp.radius = 3;
    cfg.lbp.sampling_points = 24;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}
