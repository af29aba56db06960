#include "ulgfbp/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ulgfbp/errors.hpp"

namespace ulgfbp {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ArgumentError("config: bad numeric value for " + key + ": " + v);
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long n = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ArgumentError("config: bad integer value for " + key + ": " + v);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long n = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ArgumentError("config: bad unsigned value for " + key + ": " + v);
    }
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    return out;
}

} // namespace

void RunConfig::validate() const {
    pipeline.validate();
    train.validate();
    if (head_depth != 1 && head_depth != 2) throw ArgumentError("config: head_depth must be 1 or 2");
    if (knn_k < 1) throw ArgumentError("config: knn_k must be >= 1");
    if (folds < 2) throw ArgumentError("config: folds must be >= 2");
    if (pipeline.map_size < 4) throw ArgumentError("config: map_size must be >= 4");
}

RunConfig default_run_config() {
    RunConfig cfg;
    if (const char* env = std::getenv("ULGFBP_SEED")) {
        cfg.seed = parse_u64("ULGFBP_SEED", env);
        cfg.train.seed = cfg.seed;
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg = default_run_config();
    if (path.empty()) {
        cfg.validate();
        return cfg;
    }

    std::ifstream is(path);
    if (!is) throw ArgumentError("config: cannot open " + path);

    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ArgumentError("config: expected key = value at line " + std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "resize_width") {
            cfg.pipeline.resize_width = static_cast<int>(parse_int(key, value));
        } else if (key == "resize_height") {
            cfg.pipeline.resize_height = static_cast<int>(parse_int(key, value));
        } else if (key == "omegas") {
            cfg.pipeline.omegas = parse_list(key, value);
        } else if (key == "thetas") {
            cfg.pipeline.thetas = parse_list(key, value);
        } else if (key == "lbp_radius") {
            cfg.pipeline.lbp.radius = static_cast<int>(parse_int(key, value));
            cfg.pipeline.lbp.sampling_points = 4 * (2 * cfg.pipeline.lbp.radius);
        } else if (key == "mode") {
            if (value == "u2") {
                cfg.pipeline.mode = LbpMode::U2;
            } else if (value == "riu2") {
                cfg.pipeline.mode = LbpMode::Riu2;
            } else {
                throw ArgumentError("config: mode must be u2 or riu2, got " + value);
            }
        } else if (key == "map_size") {
            cfg.pipeline.map_size = static_cast<int>(parse_int(key, value));
        } else if (key == "knn_k") {
            cfg.knn_k = static_cast<int>(parse_int(key, value));
        } else if (key == "batch_size") {
            cfg.train.batch_size = static_cast<int>(parse_int(key, value));
        } else if (key == "learning_rate") {
            cfg.train.learning_rate = parse_double(key, value);
        } else if (key == "epochs") {
            cfg.train.epochs = static_cast<int>(parse_int(key, value));
        } else if (key == "head_depth") {
            cfg.head_depth = static_cast<int>(parse_int(key, value));
        } else if (key == "folds") {
            cfg.folds = static_cast<int>(parse_int(key, value));
        } else if (key == "seed") {
            cfg.seed = parse_u64(key, value);
            cfg.train.seed = cfg.seed;
        } else if (key == "export_kernels_dir") {
            cfg.export_kernels_dir = value;
        } else if (key == "export_gmis_dir") {
            cfg.export_gmis_dir = value;
        } else if (key == "export_labels_dir") {
            cfg.export_labels_dir = value;
        } else {
            throw ArgumentError("config: unknown key at line " + std::to_string(line_no) + ": " +
                                key);
        }
    }
    cfg.validate();
    return cfg;
}

} // namespace ulgfbp
