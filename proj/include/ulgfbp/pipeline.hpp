#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ulgfbp/gabor.hpp"
#include "ulgfbp/image.hpp"
#include "ulgfbp/ulbp.hpp"

namespace ulgfbp {

// End-to-end feature extraction settings. Feature length is
// n_filters * 9 * n_bins; with defaults 6 * 9 * 59 = 3186.
struct PipelineConfig {
    int resize_width = 256;
    int resize_height = 256;
    std::vector<double> omegas = default_omegas();
    std::vector<double> thetas = default_thetas();
    LbpConfig lbp;
    LbpMode mode = LbpMode::U2;
    int map_size = 224; // square 3-channel map

    int n_filters() const { return static_cast<int>(omegas.size() * thetas.size()); }
    int feature_length() const { return n_filters() * 9 * label_count(mode); }
    void validate() const;
};

struct UlgfbpFeature {
    std::string id;
    std::vector<double> histogram; // filter-major, 9 regions x n_bins each
    std::vector<float> map;        // planar, 3 channels of map_size^2, values in [0,1]
    int map_size = 0;
};

struct Sample {
    std::string id;
    std::string path;     // empty for in-memory samples
    GrayImage raster;     // used when path is empty
    int class_index = 0;
    int quarter_turns = 0; // applied clockwise after decoding
};

struct LabeledDataset {
    std::vector<Sample> samples;
    std::vector<std::string> class_names;

    std::vector<int> labels() const;
    std::vector<std::size_t> class_counts() const;
};

// Per-scale mean of the two direction label images, scaled by 1/58, resized
// bilinearly to size x size. Expects the 6 label images in scale-major order.
std::vector<float> compose_map(const std::vector<LabelImage>& label_images, int size);

// Scans root/<ClassName>/*.{png,jpg,jpeg} (case-insensitive extensions).
// Class names sort lexicographically to indices; samples ordered by class,
// then filename.
LabeledDataset load_dataset(const std::string& root);

struct BalanceReport {
    std::vector<std::size_t> added_per_class;
    bool duplicates_used = false;
    std::vector<std::string> notes;
};

// Augments minority classes with 90/180/270-degree rotations, one angle pass
// at a time over the class samples in order, until all counts match the
// majority. When 4x the originals still falls short, repeats 90-degree
// rotations over successive samples and flags it in the report.
LabeledDataset balance_by_rotation(const LabeledDataset& ds, BalanceReport* report = nullptr);

// Observes per-filter intermediates during extraction (debug exports).
using FilterTap =
    std::function<void(int filter_index, const GaborMagnitudeImage&, const LabelImage&)>;

// Holds the filter bank so repeated extractions share setup.
class UlgfbpExtractor {
public:
    explicit UlgfbpExtractor(PipelineConfig cfg);

    UlgfbpFeature extract(const GrayImage& img, const FilterTap* tap = nullptr) const;
    const PipelineConfig& config() const { return cfg_; }
    const GaborBank& bank() const { return bank_; }

private:
    PipelineConfig cfg_;
    GaborBank bank_;
};

UlgfbpFeature extract_ulgfbp(const GrayImage& img, const PipelineConfig& cfg);

using ImageLoader = std::function<GrayImage(const std::string& path)>;

// Extracts every sample; order of the result matches the dataset regardless
// of worker count. Samples with a raster skip the loader.
std::vector<UlgfbpFeature> extract_dataset(const LabeledDataset& ds, const PipelineConfig& cfg,
                                           const ImageLoader& loader, int jobs);

} // namespace ulgfbp
