// Command-line front end for the secl library: train a superensemble model,
// predict with it, rank features, and run the repeated benchmark.
//
// Exit codes: 0 ok, 1 usage error, 2 input/data error, 3 training failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "secl/secl.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsageError = 1;
constexpr int kDataError = 2;
constexpr int kTrainError = 3;

struct CommonOptions {
    std::string data_path;
    std::string schema_path;
    std::string model_path;
    std::uint64_t seed = 42;
    std::string criterion = "hellinger";
    double minsplit_frac = 0.1;
    std::optional<std::size_t> top_m;
    std::vector<std::size_t> hidden_grid = {2, 3, 5, 8, 12, 16, 20};
    double lr_w = 0.01, lr_c = 0.01, lr_sigma = 0.01;
    std::size_t iters = 100;
    std::size_t repeats = 5;
    std::string format = "table";
    std::string out_path;
};

secl::SplitCriterion parse_criterion_or_throw(const std::string& name) {
    const auto c = secl::parse_criterion(name);
    if (!c) throw CLI::ValidationError("--criterion", "unknown criterion '" + name + "'");
    return *c;
}

secl::PipelineConfig pipeline_config(const CommonOptions& opt) {
    secl::PipelineConfig cfg;
    cfg.criterion = parse_criterion_or_throw(opt.criterion);
    cfg.minsplit_frac = opt.minsplit_frac;
    cfg.top_m = opt.top_m;
    cfg.rbfn.lr_w = opt.lr_w;
    cfg.rbfn.lr_c = opt.lr_c;
    cfg.rbfn.lr_sigma = opt.lr_sigma;
    cfg.rbfn.max_iters = opt.iters;
    cfg.rbfn.k_grid = opt.hidden_grid;
    cfg.seed = opt.seed;
    return cfg;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
    if (path.empty()) return std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw secl::DataError("cannot open output file: " + path);
    return file;
}

// ---------------------------------------------------------------------------

int cmd_train(const CommonOptions& opt) {
    secl::Dataset ds;
    try {
        const auto schema = secl::Schema::load(opt.schema_path);
        ds = secl::load_csv(opt.data_path, schema);
        // fail before fitting if the model path is not writable
        std::ofstream probe(opt.model_path, std::ios::binary | std::ios::app);
        if (!probe) throw secl::DataError("model path is not writable: " + opt.model_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }

    try {
        const auto split = secl::stratified_split(ds, {}, opt.seed);
        const auto model = secl::fit_superensemble(ds, split.train, split.validation,
                                                   pipeline_config(opt));
        secl::save_model(model, opt.model_path);

        const auto val_preds = secl::predict_superensemble(model, ds, split.validation);
        std::vector<secl::ClassLabel> val_actual;
        for (auto i : split.validation) val_actual.push_back(ds.labels[i]);
        const double val_auc = secl::auc(secl::confusion(val_actual, val_preds));

        std::cout << "selected features:";
        for (const auto& name : model.selected_names) std::cout << " " << name;
        std::cout << "\n";
        std::printf("validation AUC: %.3f\n", val_auc);
        std::cout << "model written: " << opt.model_path << "\n";
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kTrainError;
    }
}

int cmd_predict(const CommonOptions& opt) {
    try {
        const auto schema = secl::Schema::load(opt.schema_path);
        const auto model = secl::load_model(opt.model_path);
        if (model.schema_fingerprint != schema.fingerprint())
            throw secl::DataError("schema does not match the model (fingerprint mismatch)");
        const auto ds = secl::load_prediction_csv(opt.data_path, schema);

        std::vector<std::size_t> rows(ds.n);
        for (std::size_t i = 0; i < ds.n; ++i) rows[i] = i;
        const auto preds = secl::predict_superensemble(model, ds, rows);

        std::array<std::string, 2> names = {"negative", "positive"};
        if (!ds.labels.empty()) {
            names = ds.label_names;
        } else if (schema.positive_value) {
            names[1] = *schema.positive_value;
            if (schema.negative_value) names[0] = *schema.negative_value;
        }

        std::ofstream file;
        auto& out = open_output(opt.out_path, file);
        for (auto p : preds) out << names[static_cast<std::size_t>(p)] << "\n";

        if (!ds.labels.empty()) {
            const auto cm = secl::confusion(ds.labels, preds);
            std::printf("confusion: TP=%zu FN=%zu FP=%zu TN=%zu\n", cm.tp, cm.fn, cm.fp, cm.tn);
            std::printf("AUC: %.3f\n", secl::auc(cm));
        }
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
}

int cmd_rank_features(const CommonOptions& opt) {
    try {
        const auto schema = secl::Schema::load(opt.schema_path);
        const auto ds = secl::load_csv(opt.data_path, schema);

        std::vector<std::size_t> rows(ds.n);
        for (std::size_t i = 0; i < ds.n; ++i) rows[i] = i;
        const auto minsplit = std::max<std::size_t>(
            2, static_cast<std::size_t>(
                   std::ceil(opt.minsplit_frac * static_cast<double>(ds.n))));
        const auto tree = secl::fit_tree(ds, rows, parse_criterion_or_throw(opt.criterion),
                                         minsplit);
        const auto ranked = secl::rank_features(tree, opt.top_m);
        if (ranked.empty()) {
            std::cout << "no splits were made; feature ranking is empty\n";
            return kOk;
        }
        for (auto f : ranked)
            std::printf("%s %.6f\n", ds.schema.features[f].name.c_str(),
                        tree.importances[f]);
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
}

int cmd_benchmark(const CommonOptions& opt, const std::vector<std::string>& data_paths,
                  const std::vector<std::string>& criteria) {
    std::vector<secl::BenchmarkClassifier> classifiers;
    try {
        for (const auto& name : criteria) {
            const auto crit = parse_criterion_or_throw(name);
            std::string label = crit == secl::SplitCriterion::hellinger
                                    ? "HDDT"
                                    : std::string("tree(") + name + ")";
            classifiers.push_back(secl::tree_classifier(label, crit, opt.minsplit_frac));
        }
        secl::RbfTrainConfig rbf;
        rbf.lr_w = opt.lr_w;
        rbf.lr_c = opt.lr_c;
        rbf.lr_sigma = opt.lr_sigma;
        rbf.max_iters = opt.iters;
        rbf.k_grid = opt.hidden_grid;
        classifiers.push_back(secl::rbfn_classifier("RBFN", rbf));

        CommonOptions first = opt;
        first.criterion = criteria.front();
        classifiers.push_back(
            secl::superensemble_classifier("superensemble", pipeline_config(first)));
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    }

    std::vector<secl::EvalReport> parts;
    bool any_failed = false;
    for (const auto& path : data_paths) {
        try {
            std::filesystem::path data(path);
            std::filesystem::path schema_path = data;
            schema_path.replace_extension(".schema");
            const auto schema = secl::Schema::load(schema_path);
            const auto ds = secl::load_csv(data, schema);
            parts.push_back(secl::run_benchmark(ds, data.stem().string(), classifiers,
                                                opt.repeats, opt.seed));
        } catch (const std::exception& e) {
            std::cerr << "error: dataset '" << path << "': " << e.what() << "\n";
            any_failed = true;
        }
    }
    if (parts.empty()) {
        std::cerr << "error: no dataset produced results\n";
        return kDataError;
    }

    try {
        const auto merged = secl::merge_reports(parts);
        const auto format = opt.format == "csv" ? secl::ReportFormat::csv
                                                : secl::ReportFormat::table;
        std::ofstream file;
        auto& out = open_output(opt.out_path, file);
        out << secl::emit_report(merged, format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
    return any_failed ? kDataError : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hellinger-tree + RBF-network superensemble classifier"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::vector<std::string> data_paths;
    std::vector<std::string> criteria;
    std::size_t top_m_raw = 0;

    auto add_tree_flags = [&](CLI::App* cmd) {
        cmd->add_option("--criterion", opt.criterion,
                        "split criterion: hellinger|hellinger-as-printed|gini|entropy")
            ->capture_default_str();
        cmd->add_option("--minsplit-frac", opt.minsplit_frac,
                        "minimum node size for splitting, as a fraction of the training rows")
            ->capture_default_str();
        cmd->add_option("--top-m", top_m_raw,
                        "keep only the top m ranked features (default: all with importance > 0)");
    };
    auto add_rbfn_flags = [&](CLI::App* cmd) {
        cmd->add_option("--hidden-grid", opt.hidden_grid,
                        "candidate hidden unit counts (capped at ceil(n_train/10))")
            ->delimiter(',')
            ->capture_default_str();
        cmd->add_option("--lr-w", opt.lr_w, "weight learning rate")->capture_default_str();
        cmd->add_option("--lr-c", opt.lr_c, "center learning rate")->capture_default_str();
        cmd->add_option("--lr-sigma", opt.lr_sigma, "width learning rate")
            ->capture_default_str();
        cmd->add_option("--iters", opt.iters, "gradient descent iterations")
            ->capture_default_str();
    };
    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", opt.seed, "seed for every random choice")
            ->capture_default_str();
    };

    auto* train = app.add_subcommand("train", "fit a superensemble model on a 50:25:25 split");
    train->add_option("--data", opt.data_path, "labeled CSV file")->required();
    train->add_option("--schema", opt.schema_path, "schema descriptor file")->required();
    train->add_option("--model", opt.model_path, "output model path (SECL1 format)")
        ->required();
    add_seed(train);
    add_tree_flags(train);
    add_rbfn_flags(train);

    auto* predict = app.add_subcommand("predict", "predict labels with a trained model");
    predict->add_option("--data", opt.data_path, "feature CSV (label column optional)")
        ->required();
    predict->add_option("--schema", opt.schema_path, "schema descriptor file")->required();
    predict->add_option("--model", opt.model_path, "trained SECL1 model file")->required();
    predict->add_option("--out", opt.out_path, "write predictions here (default: stdout)");

    auto* rank = app.add_subcommand("rank-features",
                                    "rank features by tree importance on the full dataset");
    rank->add_option("--data", opt.data_path, "labeled CSV file")->required();
    rank->add_option("--schema", opt.schema_path, "schema descriptor file")->required();
    add_tree_flags(rank);

    auto* bench = app.add_subcommand(
        "benchmark", "repeated-split AUC comparison of tree, RBFN and superensemble");
    bench->add_option("--data", data_paths,
                      "dataset CSV path(s); each needs a sibling .schema file")
        ->required()
        ->expected(-1);
    bench->add_option("--criterion", criteria, "tree criteria to benchmark (repeatable)")
        ->default_val(std::vector<std::string>{"hellinger"});
    bench->add_option("--minsplit-frac", opt.minsplit_frac, "tree minsplit fraction")
        ->capture_default_str();
    bench->add_option("--repeats", opt.repeats, "number of repeated splits")
        ->capture_default_str();
    bench->add_option("--format", opt.format, "report format: table|csv")
        ->capture_default_str();
    bench->add_option("--out", opt.out_path, "write the report here (default: stdout)");
    add_seed(bench);
    add_rbfn_flags(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    if (top_m_raw > 0) opt.top_m = top_m_raw;
    if (criteria.empty()) criteria.push_back("hellinger");

    try {
        if (train->parsed()) return cmd_train(opt);
        if (predict->parsed()) return cmd_predict(opt);
        if (rank->parsed()) return cmd_rank_features(opt);
        if (bench->parsed()) return cmd_benchmark(opt, data_paths, criteria);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    }
    return kUsageError;
}
