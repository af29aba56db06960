#include "ulgfbp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ulgfbp/errors.hpp"
#include "ulgfbp/rng.hpp"

namespace fs = std::filesystem;

namespace ulgfbp {

FoldAssignment stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed,
                                std::vector<std::string>* warnings) {
    if (k < 2) throw ArgumentError("stratified_kfold: k must be >= 2");
    if (labels.empty()) throw ArgumentError("stratified_kfold: empty label list");
    const int n_classes = 1 + *std::max_element(labels.begin(), labels.end());

    FoldAssignment fa;
    fa.k = k;
    fa.fold_of.assign(labels.size(), -1);

    for (int c = 0; c < n_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) members.push_back(i);
        if (members.empty()) continue;
        if (members.size() < static_cast<std::size_t>(k) && warnings) {
            warnings->push_back("class " + std::to_string(c) + " has " +
                                std::to_string(members.size()) + " samples for " +
                                std::to_string(k) + " folds; spreading round-robin");
        }
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(c)));
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i)
            fa.fold_of[members[i]] = static_cast<int>(i % k);
    }
    return fa;
}

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (long long v : counts) t += v;
    return t;
}

long long ConfusionMatrix::tp(int c) const { return at(c, c); }

long long ConfusionMatrix::fp(int c) const {
    long long col = 0;
    for (int t = 0; t < n_classes; ++t) col += at(t, c);
    return col - tp(c);
}

long long ConfusionMatrix::fn(int c) const {
    long long row = 0;
    for (int p = 0; p < n_classes; ++p) row += at(c, p);
    return row - tp(c);
}

long long ConfusionMatrix::tn(int c) const { return total() - tp(c) - fp(c) - fn(c); }

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truth,
                          int n_classes) {
    if (preds.size() != truth.size()) throw ArgumentError("confusion: size mismatch");
    if (n_classes < 1) throw ArgumentError("confusion: class count must be >= 1");
    ConfusionMatrix cm;
    cm.n_classes = n_classes;
    cm.counts.assign(static_cast<std::size_t>(n_classes) * n_classes, 0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= n_classes || preds[i] < 0 || preds[i] >= n_classes)
            throw ArgumentError("confusion: label out of range");
        ++cm.at(truth[i], preds[i]);
    }
    return cm;
}

namespace {

double ratio_pct(long long num, long long den, bool& undefined) {
    if (den == 0) {
        undefined = true;
        return 0.0;
    }
    return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

MetricsReport metrics(const ConfusionMatrix& cm) {
    if (cm.n_classes < 1 || cm.total() == 0) throw ArgumentError("metrics: empty confusion matrix");
    MetricsReport r;
    r.per_class.resize(cm.n_classes);
    for (int c = 0; c < cm.n_classes; ++c) {
        const long long tp = cm.tp(c), fp = cm.fp(c), fn = cm.fn(c), tn = cm.tn(c);
        ClassMetrics& m = r.per_class[c];
        m.accuracy = ratio_pct(tn + tp, tn + tp + fn + fp, m.undefined);
        m.precision = ratio_pct(tp, fp + tp, m.undefined);
        m.sensitivity = ratio_pct(tp, fn + tp, m.undefined);
        if (m.precision + m.sensitivity > 0.0) {
            m.f1 = 2.0 * m.sensitivity * m.precision / (m.sensitivity + m.precision);
        } else {
            m.f1 = 0.0;
            m.undefined = true;
        }
        if (m.undefined) ++r.undefined_count;

        r.macro.accuracy += m.accuracy;
        r.macro.precision += m.precision;
        r.macro.sensitivity += m.sensitivity;
        r.macro.f1 += m.f1;
    }
    r.macro.accuracy /= cm.n_classes;
    r.macro.precision /= cm.n_classes;
    r.macro.sensitivity /= cm.n_classes;
    r.macro.f1 /= cm.n_classes;
    return r;
}

CvResult cross_validate(const std::vector<UlgfbpFeature>& features, const std::vector<int>& labels,
                        int n_classes, const ClassifierSpec& spec, int k, std::uint64_t seed) {
    if (features.empty()) throw ArgumentError("cross_validate: empty dataset");
    if (features.size() != labels.size())
        throw ArgumentError("cross_validate: feature/label size mismatch");

    CvResult result;
    const FoldAssignment fa = stratified_kfold(labels, k, seed, &result.warnings);

    for (int fold = 0; fold < k; ++fold) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t i = 0; i < features.size(); ++i)
            (fa.fold_of[i] == fold ? test_idx : train_idx).push_back(i);
        if (test_idx.empty() || train_idx.empty())
            throw ArgumentError("cross_validate: fold " + std::to_string(fold) +
                                " leaves an empty train or test split");

        FoldReport fr;
        fr.fold = fold;
        std::vector<int> preds, truth;
        truth.reserve(test_idx.size());
        for (std::size_t i : test_idx) truth.push_back(labels[i]);

        const std::uint64_t fold_seed = Rng::derive(seed, 0x1000 + static_cast<std::uint64_t>(fold));
        try {
            if (std::holds_alternative<KnnSpec>(spec)) {
                const auto& ks = std::get<KnnSpec>(spec);
                std::vector<std::vector<double>> train_feats;
                std::vector<int> train_labels;
                for (std::size_t i : train_idx) {
                    train_feats.push_back(features[i].histogram);
                    train_labels.push_back(labels[i]);
                }
                KnnModel model = knn_fit(std::move(train_feats), std::move(train_labels), ks.k);
                for (std::size_t i : test_idx)
                    preds.push_back(knn_predict(model, features[i].histogram));
            } else {
                const auto& rs = std::get<ResNetSpec>(spec);
                const int map_size = features.front().map_size;
                ResidualNet net = make_residual_net(map_size, n_classes, rs.head_depth, fold_seed);
                TrainSet ts;
                ts.map_size = map_size;
                for (std::size_t i : train_idx) {
                    ts.maps.push_back(features[i].map.data());
                    ts.labels.push_back(labels[i]);
                }
                TrainConfig cfg = rs.train;
                cfg.seed = fold_seed;
                fr.trace = train(net, ts, cfg);
                MapBatch batch;
                batch.size = map_size;
                for (std::size_t i : test_idx) batch.maps.push_back(features[i].map.data());
                preds = predict(net, batch);
            }
        } catch (const Error& e) {
            throw Error("fold " + std::to_string(fold) + ": " + e.what());
        }

        fr.cm = confusion(preds, truth, n_classes);
        fr.report = metrics(fr.cm);
        result.folds.push_back(std::move(fr));
    }

    // aggregate: mean and population stddev of the macro metrics
    CvAggregate agg;
    const double nf = static_cast<double>(result.folds.size());
    for (const auto& fr : result.folds) {
        agg.mean.accuracy += fr.report.macro.accuracy;
        agg.mean.precision += fr.report.macro.precision;
        agg.mean.sensitivity += fr.report.macro.sensitivity;
        agg.mean.f1 += fr.report.macro.f1;
        agg.accuracy_max = std::max(agg.accuracy_max, fr.report.macro.accuracy);
        agg.undefined_total += fr.report.undefined_count;
    }
    agg.mean.accuracy /= nf;
    agg.mean.precision /= nf;
    agg.mean.sensitivity /= nf;
    agg.mean.f1 /= nf;
    double ss = 0.0;
    for (const auto& fr : result.folds) {
        const double d = fr.report.macro.accuracy - agg.mean.accuracy;
        ss += d * d;
    }
    agg.accuracy_std = std::sqrt(ss / nf);
    result.aggregate = agg;
    return result;
}

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary); // binary keeps LF endings
    if (!os) throw IoError("emit_reports: cannot open " + path.string());
    os << content;
    if (!os) throw IoError("emit_reports: write failed for " + path.string());
}

} // namespace

void emit_reports(const CvResult& result, const std::vector<std::string>& class_names,
                  const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw IoError("emit_reports: cannot create directory " + out_dir);

    std::string csv = "fold,accuracy,precision,sensitivity,f1,undefined,accuracy_std,accuracy_max\n";
    for (const auto& fr : result.folds) {
        const auto& m = fr.report.macro;
        csv += std::to_string(fr.fold) + "," + fixed6(m.accuracy) + "," + fixed6(m.precision) +
               "," + fixed6(m.sensitivity) + "," + fixed6(m.f1) + "," +
               std::to_string(fr.report.undefined_count) + ",,\n";
    }
    const auto& a = result.aggregate;
    csv += "aggregate," + fixed6(a.mean.accuracy) + "," + fixed6(a.mean.precision) + "," +
           fixed6(a.mean.sensitivity) + "," + fixed6(a.mean.f1) + "," +
           std::to_string(a.undefined_total) + "," + fixed6(a.accuracy_std) + "," +
           fixed6(a.accuracy_max) + "\n";
    write_text_file(fs::path(out_dir) / "metrics.csv", csv);

    std::vector<std::string> names = class_names;
    for (std::size_t c = names.size();
         !result.folds.empty() && c < static_cast<std::size_t>(result.folds[0].cm.n_classes); ++c)
        names.push_back("class" + std::to_string(c));

    for (const auto& fr : result.folds) {
        // aligned integer grid, rows = true class
        std::size_t name_w = 4;
        for (const auto& n : names) name_w = std::max(name_w, n.size());
        std::size_t cell_w = 6;
        for (long long v : fr.cm.counts)
            cell_w = std::max(cell_w, std::to_string(v).size() + 1);
        for (const auto& n : names) cell_w = std::max(cell_w, n.size() + 1);

        std::string txt = "true\\pred";
        txt.append(name_w > 9 ? name_w - 9 : 0, ' ');
        for (const auto& n : names) {
            txt.append(cell_w - n.size(), ' ');
            txt += n;
        }
        txt += "\n";
        for (int t = 0; t < fr.cm.n_classes; ++t) {
            txt += names[t];
            txt.append(name_w - names[t].size(), ' ');
            for (int p = 0; p < fr.cm.n_classes; ++p) {
                const std::string cell = std::to_string(fr.cm.at(t, p));
                txt.append(cell_w - cell.size(), ' ');
                txt += cell;
            }
            txt += "\n";
        }
        write_text_file(fs::path(out_dir) / ("confusion_fold" + std::to_string(fr.fold) + ".txt"),
                        txt);

        std::string curves = "iteration,loss,accuracy\n";
        for (std::size_t i = 0; i < fr.trace.iteration.size(); ++i) {
            curves += std::to_string(fr.trace.iteration[i]) + "," + fixed6(fr.trace.loss[i]) + "," +
                      fixed6(fr.trace.accuracy[i]) + "\n";
        }
        write_text_file(fs::path(out_dir) / ("curves_fold" + std::to_string(fr.fold) + ".csv"),
                        curves);
    }
}

} // namespace ulgfbp
