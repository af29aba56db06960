#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ulgfbp/classify.hpp"
#include "ulgfbp/pipeline.hpp"

namespace ulgfbp {

struct FoldAssignment {
    int k = 0;
    std::vector<int> fold_of; // per-sample fold index in [0, k)
};

// Shuffles within each class with a seeded generator, then deals round-robin
// to folds; per-class fold counts differ by at most one. Classes smaller than
// k raise a warning and spread round-robin.
FoldAssignment stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed,
                                std::vector<std::string>* warnings = nullptr);

struct ConfusionMatrix {
    int n_classes = 0;
    std::vector<long long> counts; // rows = true class, columns = predicted

    long long at(int truth, int pred) const {
        return counts[static_cast<std::size_t>(truth) * n_classes + pred];
    }
    long long& at(int truth, int pred) {
        return counts[static_cast<std::size_t>(truth) * n_classes + pred];
    }
    long long total() const;
    long long tp(int c) const;
    long long fp(int c) const;
    long long fn(int c) const;
    long long tn(int c) const;
};

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truth,
                          int n_classes);

// One-vs-rest per class: Acc = (TN+TP)/total, Precision = TP/(FP+TP),
// Sensitivity = TP/(FN+TP), F1 = 2 P S / (P + S); all in percent. A 0/0
// metric is reported as 0 with the undefined flag set.
struct ClassMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double sensitivity = 0.0;
    double f1 = 0.0;
    bool undefined = false;
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    ClassMetrics macro; // unweighted mean over classes
    int undefined_count = 0;
};

MetricsReport metrics(const ConfusionMatrix& cm);

struct FoldReport {
    int fold = 0;
    ConfusionMatrix cm;
    MetricsReport report;
    TrainTrace trace; // empty for k-NN
};

struct CvAggregate {
    ClassMetrics mean;       // macro metrics averaged over folds
    double accuracy_std = 0.0; // population stddev of macro accuracy
    double accuracy_max = 0.0;
    int undefined_total = 0;
};

struct CvResult {
    std::vector<FoldReport> folds;
    CvAggregate aggregate;
    std::vector<std::string> warnings;
};

struct KnnSpec {
    int k = 1;
};

struct ResNetSpec {
    TrainConfig train;
    int head_depth = 1;
};

using ClassifierSpec = std::variant<KnnSpec, ResNetSpec>;

// For each fold: fit on the other k-1 folds, predict the held-out fold.
// Per-fold classifier seeds derive from (seed, fold index).
CvResult cross_validate(const std::vector<UlgfbpFeature>& features, const std::vector<int>& labels,
                        int n_classes, const ClassifierSpec& spec, int k, std::uint64_t seed);

// Writes metrics.csv (one row per fold plus an aggregate row),
// confusion_fold<i>.txt, and curves_fold<i>.csv. UTF-8, LF, fixed 6-decimal
// floats so identical inputs reproduce identical bytes.
void emit_reports(const CvResult& result, const std::vector<std::string>& class_names,
                  const std::string& out_dir);

} // namespace ulgfbp
