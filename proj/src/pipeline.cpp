#include "ulgfbp/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <thread>

#include "ulgfbp/errors.hpp"
#include "ulgfbp/imaging.hpp"

namespace fs = std::filesystem;

namespace ulgfbp {

void PipelineConfig::validate() const {
    if (resize_width < 3 || resize_height < 3)
        throw ArgumentError("pipeline: resize target must be at least 3x3");
    if (map_size < 1) throw ArgumentError("pipeline: map size must be >= 1");
    lbp.validate();
    // Bank constraints (counts, ordering, ranges) are enforced on build.
    build_filter_bank(omegas, thetas);
}

std::vector<int> LabeledDataset::labels() const {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.class_index);
    return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (const auto& s : samples) {
        if (s.class_index < 0 || s.class_index >= static_cast<int>(class_names.size()))
            throw ArgumentError("dataset: class index out of range");
        ++counts[s.class_index];
    }
    return counts;
}

std::vector<float> compose_map(const std::vector<LabelImage>& label_images, int size) {
    if (label_images.size() != 6) throw ArgumentError("compose_map: exactly 6 label images required");
    if (size < 1) throw ArgumentError("compose_map: target size must be >= 1");

    std::vector<float> map(static_cast<std::size_t>(size) * size * 3);
    for (int scale = 0; scale < 3; ++scale) {
        const LabelImage& a = label_images[scale * 2];
        const LabelImage& b = label_images[scale * 2 + 1];
        if (a.width != b.width || a.height != b.height)
            throw DimensionError("compose_map: direction pair dimensions differ");

        FloatImage channel(a.width, a.height);
        for (std::size_t i = 0; i < channel.data.size(); ++i)
            channel.data[i] = 0.5 * (a.labels[i] + b.labels[i]) / 58.0;

        FloatImage resized = resize_bilinear(channel, size, size);
        float* dst = map.data() + static_cast<std::size_t>(scale) * size * size;
        for (std::size_t i = 0; i < resized.data.size(); ++i)
            dst[i] = static_cast<float>(resized.data[i]);
    }
    return map;
}

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

} // namespace

LabeledDataset load_dataset(const std::string& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec))
        throw DataError("load_dataset: not a directory: " + root);

    std::vector<std::string> class_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) {
            class_dirs.push_back(entry.path().filename().string());
        } else if (has_image_extension(entry.path())) {
            throw DataError("load_dataset: file outside any class folder: " + entry.path().string());
        }
    }
    if (class_dirs.empty()) throw DataError("load_dataset: no class folders under " + root);
    std::sort(class_dirs.begin(), class_dirs.end());

    LabeledDataset ds;
    ds.class_names = class_dirs;
    for (std::size_t ci = 0; ci < class_dirs.size(); ++ci) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(fs::path(root) / class_dirs[ci])) {
            if (entry.is_regular_file() && has_image_extension(entry.path()))
                files.push_back(entry.path().filename().string());
        }
        if (files.empty())
            throw DataError("load_dataset: class folder has no images: " + class_dirs[ci]);
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            Sample s;
            s.id = class_dirs[ci] + "/" + f;
            s.path = (fs::path(root) / class_dirs[ci] / f).string();
            s.class_index = static_cast<int>(ci);
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

LabeledDataset balance_by_rotation(const LabeledDataset& ds, BalanceReport* report) {
    const auto counts = ds.class_counts();
    if (counts.empty()) throw ArgumentError("balance_by_rotation: dataset has no classes");
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] == 0)
            throw ArgumentError("balance_by_rotation: class has no samples: " + ds.class_names[c]);
    const std::size_t majority = *std::max_element(counts.begin(), counts.end());

    LabeledDataset out = ds;
    BalanceReport local;
    local.added_per_class.assign(counts.size(), 0);

    for (std::size_t c = 0; c < counts.size(); ++c) {
        std::size_t need = majority - counts[c];
        if (need == 0) continue;

        std::vector<const Sample*> originals;
        for (const auto& s : ds.samples)
            if (s.class_index == static_cast<int>(c)) originals.push_back(&s);

        auto add_rotation = [&](const Sample& src, int turns, const std::string& suffix) {
            Sample rotated = src;
            rotated.quarter_turns = (src.quarter_turns + turns) % 4;
            rotated.id = src.id + suffix;
            out.samples.push_back(std::move(rotated));
            ++local.added_per_class[c];
        };

        static const int kTurns[3] = {1, 2, 3};
        static const char* kSuffix[3] = {"#r90", "#r180", "#r270"};
        for (int pass = 0; pass < 3 && need > 0; ++pass) {
            for (const Sample* s : originals) {
                if (need == 0) break;
                add_rotation(*s, kTurns[pass], kSuffix[pass]);
                --need;
            }
        }

        // Equality unreachable inside the 4x cap: keep cycling 90-degree
        // duplicates and flag it.
        int round = 2;
        while (need > 0) {
            local.duplicates_used = true;
            for (const Sample* s : originals) {
                if (need == 0) break;
                add_rotation(*s, 1, "#r90x" + std::to_string(round));
                --need;
            }
            ++round;
        }
        if (local.added_per_class[c] > 3 * originals.size()) {
            local.notes.push_back("class " + ds.class_names[c] +
                                  ": balancing needed repeated rotations beyond 4x originals");
        }
    }

    if (report) *report = std::move(local);
    return out;
}

UlgfbpExtractor::UlgfbpExtractor(PipelineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    bank_ = build_filter_bank(cfg_.omegas, cfg_.thetas);
}

UlgfbpFeature UlgfbpExtractor::extract(const GrayImage& img, const FilterTap* tap) const {
    if (img.empty()) throw DimensionError("extract: empty image");

    GrayImage resized = resize_bilinear(img, cfg_.resize_width, cfg_.resize_height);
    GrayImage equalized = equalize_histogram(resized);
    FloatImage normalized = normalize_zscore(equalized);

    const int bins = label_count(cfg_.mode);
    UlgfbpFeature feature;
    feature.histogram.reserve(static_cast<std::size_t>(cfg_.feature_length()));

    std::vector<LabelImage> label_images;
    label_images.reserve(bank_.kernels.size());
    for (std::size_t ki = 0; ki < bank_.kernels.size(); ++ki) {
        const auto& kernel = bank_.kernels[ki];
        ComplexImage response = apply_gabor(normalized, kernel);
        GaborMagnitudeImage gmi = magnitude(response, kernel.params);
        LabelImage coded = code_image(gmi.image, cfg_.lbp, cfg_.mode);
        RegionHistogramSet regions = region_histograms(coded, bins);
        for (const auto& h : regions.histograms)
            feature.histogram.insert(feature.histogram.end(), h.begin(), h.end());
        if (tap && *tap) (*tap)(static_cast<int>(ki), gmi, coded);
        label_images.push_back(std::move(coded));
    }

    feature.map = compose_map(label_images, cfg_.map_size);
    feature.map_size = cfg_.map_size;
    return feature;
}

UlgfbpFeature extract_ulgfbp(const GrayImage& img, const PipelineConfig& cfg) {
    return UlgfbpExtractor(cfg).extract(img);
}

std::vector<UlgfbpFeature> extract_dataset(const LabeledDataset& ds, const PipelineConfig& cfg,
                                           const ImageLoader& loader, int jobs) {
    UlgfbpExtractor extractor(cfg);
    std::vector<UlgfbpFeature> features(ds.samples.size());

    auto process = [&](std::size_t i) {
        const Sample& s = ds.samples[i];
        GrayImage img = s.path.empty() ? s.raster : loader(s.path);
        if (s.quarter_turns != 0) img = rotate_quarter(img, s.quarter_turns);
        features[i] = extractor.extract(img);
        features[i].id = s.id;
    };

    jobs = std::max(1, jobs);
    if (jobs == 1 || ds.samples.size() <= 1) {
        for (std::size_t i = 0; i < ds.samples.size(); ++i) process(i);
    } else {
        // Results land in per-index slots, so scheduling cannot affect output.
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mu;
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= ds.samples.size()) return;
                try {
                    process(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        const int n_threads = static_cast<int>(std::min<std::size_t>(jobs, ds.samples.size()));
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }
    return features;
}

} // namespace ulgfbp
