#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "ulgfbp/config.hpp"

namespace ulgfbp {

// Exit codes shared by every subcommand.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;    // bad flags or config
constexpr int kExitData = 2;     // dataset, decode, or output I/O problems
constexpr int kExitInternal = 3; // internal errors and oracle failures

struct CommonOptions {
    std::string config_file;
    std::optional<std::uint64_t> seed; // flag override
    int jobs = 0;                      // 0 = logical cores
};

struct ExtractOptions {
    std::string data_dir;
    std::string out_file;
    std::string maps_dir; // optional map PNG export
    CommonOptions common;
};

struct TrainOptions {
    std::string data_dir;
    std::string model_file;
    std::string classifier; // "knn" or "resnet"
    CommonOptions common;
};

struct EvalOptions {
    std::string data_dir;
    std::string classifier;
    std::string out_dir;
    std::optional<int> folds;
    CommonOptions common;
};

int cmd_extract(const ExtractOptions& opt, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err);

// Embedded oracle suites: ulbp-table, gabor-dc, conv-equivalence,
// gradient-check. Prints one line per suite; nonzero exit on any failure.
// ULGFBP_SELFCHECK_CORRUPT names a suite to fault-inject for testing.
int cmd_selfcheck(std::ostream& out, std::ostream& err);

// Feature CSV: header id,label,f0..f{D-1}; 9 significant digits per value.
void write_feature_csv(const std::string& path, const std::vector<UlgfbpFeature>& features,
                       const std::vector<int>& labels);

} // namespace ulgfbp
