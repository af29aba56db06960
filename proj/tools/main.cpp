#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ulgfbp/cli.hpp"

namespace {

void add_common(CLI::App* cmd, ulgfbp::CommonOptions& common, std::uint64_t& seed_slot,
                bool& seed_set) {
    cmd->add_option("--config", common.config_file, "plain-text key = value configuration file");
    cmd->add_option("--jobs", common.jobs, "worker count (default: logical cores)");
    auto* s = cmd->add_option("--seed", seed_slot, "seed override");
    s->each([&seed_set](const std::string&) { seed_set = true; });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ULGFBP texture descriptor pipeline: Gabor bank + uniform LBP features with "
                 "k-NN and residual-network classification"};
    app.require_subcommand(1);

    ulgfbp::ExtractOptions ext;
    ulgfbp::TrainOptions trn;
    ulgfbp::EvalOptions evl;
    std::uint64_t seeds[3] = {0, 0, 0};
    bool seed_set[3] = {false, false, false};
    int folds = 10;
    bool folds_set = false;

    auto* extract = app.add_subcommand("extract", "extract features to a CSV (optional map PNGs)");
    extract->add_option("--data", ext.data_dir, "dataset root: <root>/<Class>/*.png|jpg|jpeg")
        ->required();
    extract->add_option("--out", ext.out_file, "output feature CSV")->required();
    extract->add_option("--maps", ext.maps_dir, "directory for per-sample map PNGs");
    add_common(extract, ext.common, seeds[0], seed_set[0]);

    auto* train = app.add_subcommand("train", "balance, extract, and fit a classifier");
    train->add_option("--data", trn.data_dir, "dataset root")->required();
    train->add_option("--model", trn.model_file, "output model file")->required();
    train->add_option("--classifier", trn.classifier, "knn or resnet")->required();
    add_common(train, trn.common, seeds[1], seed_set[1]);

    auto* eval = app.add_subcommand("eval", "stratified cross-validated evaluation");
    eval->add_option("--data", evl.data_dir, "dataset root")->required();
    eval->add_option("--classifier", evl.classifier, "knn or resnet")->required();
    eval->add_option("--out", evl.out_dir, "report output directory")->required();
    auto* f = eval->add_option("--folds", folds, "fold count (default 10)");
    f->each([&folds_set](const std::string&) { folds_set = true; });
    add_common(eval, evl.common, seeds[2], seed_set[2]);

    app.add_subcommand("selfcheck", "run the embedded oracle suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ulgfbp::kExitOk : ulgfbp::kExitUsage;
    }

    if (app.got_subcommand("extract")) {
        if (seed_set[0]) ext.common.seed = seeds[0];
        return ulgfbp::cmd_extract(ext, std::cout, std::cerr);
    }
    if (app.got_subcommand("train")) {
        if (seed_set[1]) trn.common.seed = seeds[1];
        return ulgfbp::cmd_train(trn, std::cout, std::cerr);
    }
    if (app.got_subcommand("eval")) {
        if (seed_set[2]) evl.common.seed = seeds[2];
        if (folds_set) evl.folds = folds;
        return ulgfbp::cmd_eval(evl, std::cout, std::cerr);
    }
    return ulgfbp::cmd_selfcheck(std::cout, std::cerr);
}
