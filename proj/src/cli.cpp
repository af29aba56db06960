#include "ulgfbp/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include "ulgfbp/errors.hpp"
#include "ulgfbp/eval.hpp"
#include "ulgfbp/image_io.hpp"
#include "ulgfbp/imaging.hpp"

namespace fs = std::filesystem;

namespace ulgfbp {

namespace {

template <typename F>
int run_guarded(std::ostream& err, F&& f) {
    try {
        f();
        return kExitOk;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

RunConfig resolve_config(const CommonOptions& common) {
    RunConfig cfg = load_run_config(common.config_file);
    if (common.seed) {
        cfg.seed = *common.seed;
        cfg.train.seed = *common.seed;
    }
    return cfg;
}

int resolve_jobs(const CommonOptions& common) {
    if (common.jobs > 0) return common.jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string sig9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string map_png_name(const std::string& id) {
    std::string name = id;
    for (char& c : name)
        if (c == '/' || c == '\\' || c == '#') c = '_';
    for (const char* ext : {".png", ".jpg", ".jpeg"}) {
        const std::size_t n = std::strlen(ext);
        if (name.size() > n) {
            std::string tail = name.substr(name.size() - n);
            std::transform(tail.begin(), tail.end(), tail.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            if (tail == ext) {
                name.erase(name.size() - n);
                break;
            }
        }
    }
    return name + ".png";
}

void write_map_png(const std::string& path, const UlgfbpFeature& f) {
    const int s = f.map_size;
    RgbImage img(s, s);
    const std::size_t plane = static_cast<std::size_t>(s) * s;
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            std::uint8_t* px = img.pixel(x, y);
            for (int c = 0; c < 3; ++c) {
                const double v = f.map[plane * c + static_cast<std::size_t>(y) * s + x];
                px[c] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(v * 255.0), 0, 255));
            }
        }
    }
    write_png_rgb(path, img);
}

void export_kernels(const GaborBank& bank, const std::string& dir) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < bank.kernels.size(); ++i) {
        const auto& k = bank.kernels[i];
        for (int part = 0; part < 2; ++part) {
            double lo = 1e300, hi = -1e300;
            for (const auto& v : k.values) {
                const double x = part == 0 ? v.real() : v.imag();
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
            const double span = hi - lo < 1e-30 ? 1.0 : hi - lo;
            GrayImage img(k.side(), k.side());
            for (std::size_t j = 0; j < k.values.size(); ++j) {
                const double x = part == 0 ? k.values[j].real() : k.values[j].imag();
                img.data[j] = static_cast<std::uint8_t>(std::lround(255.0 * (x - lo) / span));
            }
            const std::string name =
                "kernel" + std::to_string(i) + (part == 0 ? "_re.png" : "_im.png");
            write_png_gray((fs::path(dir) / name).string(), img);
        }
    }
}

std::vector<UlgfbpFeature> extract_all(const LabeledDataset& ds, const RunConfig& cfg, int jobs) {
    return extract_dataset(ds, cfg.pipeline, [](const std::string& path) {
        return decode_image_gray(path);
    }, jobs);
}

GrayImage min_max_gray(const FloatImage& img) {
    double lo = 1e300, hi = -1e300;
    for (double v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo < 1e-30 ? 1.0 : hi - lo;
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = static_cast<std::uint8_t>(std::lround(255.0 * (img.data[i] - lo) / span));
    return out;
}

// Sequential debug pass over the dataset, writing per-filter intermediates.
std::vector<UlgfbpFeature> extract_with_debug_exports(const LabeledDataset& ds,
                                                      const RunConfig& cfg) {
    if (!cfg.export_gmis_dir.empty()) fs::create_directories(cfg.export_gmis_dir);
    if (!cfg.export_labels_dir.empty()) fs::create_directories(cfg.export_labels_dir);
    UlgfbpExtractor extractor(cfg.pipeline);
    std::vector<UlgfbpFeature> features(ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const Sample& s = ds.samples[i];
        GrayImage img = s.path.empty() ? s.raster : decode_image_gray(s.path);
        if (s.quarter_turns != 0) img = rotate_quarter(img, s.quarter_turns);

        std::string stem = map_png_name(s.id);
        stem.erase(stem.size() - 4); // drop ".png"
        FilterTap tap = [&](int ki, const GaborMagnitudeImage& gmi, const LabelImage& li) {
            const std::string suffix = "_f" + std::to_string(ki) + ".png";
            if (!cfg.export_gmis_dir.empty())
                write_png_gray((fs::path(cfg.export_gmis_dir) / (stem + suffix)).string(),
                               min_max_gray(gmi.image));
            if (!cfg.export_labels_dir.empty()) {
                GrayImage viz(li.width, li.height);
                for (std::size_t p = 0; p < li.labels.size(); ++p)
                    viz.data[p] = static_cast<std::uint8_t>(li.labels[p] * 4); // max 58*4 = 232
                write_png_gray((fs::path(cfg.export_labels_dir) / (stem + suffix)).string(), viz);
            }
        };
        features[i] = extractor.extract(img, &tap);
        features[i].id = s.id;
    }
    return features;
}

} // namespace

void write_feature_csv(const std::string& path, const std::vector<UlgfbpFeature>& features,
                       const std::vector<int>& labels) {
    if (features.size() != labels.size())
        throw ArgumentError("write_feature_csv: feature/label size mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open output file: " + path);

    const std::size_t dim = features.empty() ? 0 : features.front().histogram.size();
    os << "id,label";
    for (std::size_t i = 0; i < dim; ++i) os << ",f" << i;
    os << "\n";
    for (std::size_t r = 0; r < features.size(); ++r) {
        if (features[r].histogram.size() != dim)
            throw ArgumentError("write_feature_csv: inconsistent feature lengths");
        os << features[r].id << "," << labels[r];
        for (double v : features[r].histogram) os << "," << sig9(v);
        os << "\n";
    }
    if (!os) throw IoError("write failed for output file: " + path);
}

int cmd_extract(const ExtractOptions& opt, std::ostream& out, std::ostream& err) {
    (void)out;
    return run_guarded(err, [&] {
        const RunConfig cfg = resolve_config(opt.common);
        const int jobs = resolve_jobs(opt.common);

        LabeledDataset ds = load_dataset(opt.data_dir);
        err << "extracting " << ds.samples.size() << " samples from " << ds.class_names.size()
            << " classes\n";
        const bool debug_exports =
            !cfg.export_gmis_dir.empty() || !cfg.export_labels_dir.empty();
        auto features = debug_exports ? extract_with_debug_exports(ds, cfg)
                                      : extract_all(ds, cfg, jobs);
        write_feature_csv(opt.out_file, features, ds.labels());

        if (!opt.maps_dir.empty()) {
            fs::create_directories(opt.maps_dir);
            for (const auto& f : features)
                write_map_png((fs::path(opt.maps_dir) / map_png_name(f.id)).string(), f);
        }
        if (!cfg.export_kernels_dir.empty())
            export_kernels(build_filter_bank(cfg.pipeline.omegas, cfg.pipeline.thetas),
                           cfg.export_kernels_dir);
        err << "wrote " << features.size() << " feature rows to " << opt.out_file << "\n";
    });
}

namespace {

void write_knn_sidecar(const std::string& path, const RunConfig& cfg, std::size_t n,
                       std::size_t dim) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open output file: " + path);
    os << "k = " << cfg.knn_k << "\n"
       << "distance = chi-square\n"
       << "samples = " << n << "\n"
       << "feature_length = " << dim << "\n";
    if (!os) throw IoError("write failed for output file: " + path);
}

} // namespace

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        if (opt.classifier != "knn" && opt.classifier != "resnet")
            throw ArgumentError("train: classifier must be knn or resnet");
        const RunConfig cfg = resolve_config(opt.common);
        const int jobs = resolve_jobs(opt.common);

        LabeledDataset ds = load_dataset(opt.data_dir);
        BalanceReport balance;
        ds = balance_by_rotation(ds, &balance);
        for (const auto& note : balance.notes) err << "warning: " << note << "\n";

        err << "training on " << ds.samples.size() << " samples ("
            << ds.class_names.size() << " classes)\n";
        auto features = extract_all(ds, cfg, jobs);
        const std::vector<int> labels = ds.labels();

        if (opt.classifier == "knn") {
            std::vector<std::vector<double>> hists;
            for (const auto& f : features) hists.push_back(f.histogram);
            KnnModel model = knn_fit(hists, labels, cfg.knn_k); // validates k <= n
            write_feature_csv(opt.model_file, features, labels);
            write_knn_sidecar(opt.model_file + ".meta", cfg, features.size(),
                              features.front().histogram.size());
            std::size_t correct = 0;
            for (std::size_t i = 0; i < hists.size(); ++i)
                if (knn_predict(model, hists[i]) == labels[i]) ++correct;
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6f",
                          100.0 * static_cast<double>(correct) / hists.size());
            out << "train_accuracy " << buf << "\n";
        } else {
            const int n_classes = static_cast<int>(ds.class_names.size());
            if (n_classes < 2) throw ArgumentError("train: need at least 2 classes");
            ResidualNet net =
                make_residual_net(cfg.pipeline.map_size, n_classes, cfg.head_depth, cfg.seed);
            TrainSet ts;
            ts.map_size = cfg.pipeline.map_size;
            for (const auto& f : features) ts.maps.push_back(f.map.data());
            ts.labels = labels;
            TrainTrace trace = train(net, ts, cfg.train);
            save_model(net, opt.model_file);
            const double acc = evaluate_accuracy(net, ts);
            char buf[128];
            std::snprintf(buf, sizeof(buf), "final_loss %.6f train_accuracy %.6f",
                          trace.loss.back(), 100.0 * acc);
            out << buf << "\n";
        }
        err << "model written to " << opt.model_file << "\n";
    });
}

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        if (opt.classifier != "knn" && opt.classifier != "resnet")
            throw ArgumentError("eval: classifier must be knn or resnet");
        RunConfig cfg = resolve_config(opt.common);
        if (opt.folds) cfg.folds = *opt.folds;
        if (cfg.folds < 2) throw ArgumentError("eval: folds must be >= 2");
        const int jobs = resolve_jobs(opt.common);

        LabeledDataset ds = load_dataset(opt.data_dir);
        err << "evaluating " << ds.samples.size() << " samples with " << cfg.folds << "-fold CV\n";
        auto features = extract_all(ds, cfg, jobs);

        ClassifierSpec spec;
        if (opt.classifier == "knn") {
            spec = KnnSpec{cfg.knn_k};
        } else {
            ResNetSpec rs;
            rs.train = cfg.train;
            rs.head_depth = cfg.head_depth;
            spec = rs;
        }
        CvResult result = cross_validate(features, ds.labels(),
                                         static_cast<int>(ds.class_names.size()), spec, cfg.folds,
                                         cfg.seed);
        for (const auto& w : result.warnings) err << "warning: " << w << "\n";
        emit_reports(result, ds.class_names, opt.out_dir);

        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", result.aggregate.mean.accuracy);
        out << "mean_accuracy " << buf << "\n";
        err << "reports written to " << opt.out_dir << "\n";
    });
}

} // namespace ulgfbp
