#pragma once

#include <cstdint>
#include <string>

#include "ulgfbp/classify.hpp"
#include "ulgfbp/pipeline.hpp"

namespace ulgfbp {

// Everything a run needs, mirrored by the plain-text config file. Flags
// override file values; ULGFBP_SEED is the seed fallback when neither the
// file nor a flag sets one.
struct RunConfig {
    PipelineConfig pipeline;
    TrainConfig train;
    int head_depth = 1;
    int knn_k = 1;
    int folds = 10;
    std::uint64_t seed = 0;
    std::string export_kernels_dir; // optional debug dump of bank kernels
    std::string export_gmis_dir;     // per-sample filter magnitude images
    std::string export_labels_dir;   // per-sample coded label images

    void validate() const;
};

// Parses `key = value` lines with '#' comments. Unknown keys are rejected;
// every value is validated against the module invariants before returning.
RunConfig load_run_config(const std::string& path);

// Defaults plus the ULGFBP_SEED environment fallback.
RunConfig default_run_config();

} // namespace ulgfbp
