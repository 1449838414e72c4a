#include "hqfnn/cli.hpp"

#include "hqfnn/analysis.hpp"
#include "hqfnn/data.hpp"
#include "hqfnn/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

namespace hqfnn {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Options {
    std::string config_file;
    ModelConfig model;
    std::uint64_t seed = 0;
    std::map<std::string, std::uint64_t> seeds;  // per subcommand, copied into `seed` after parsing

    // data
    std::string data_dir = "data/mnist5k";
    std::string train_images, train_labels, test_images, test_labels;
    std::size_t train_n = 0;
    std::size_t test_n = 0;
    double val_fraction = 0.1;

    // training
    std::size_t epochs = 200;
    std::size_t batch_size = 500;
    double lr = 0.001;
    std::vector<std::size_t> milestones;
    std::string out_dir = "runs/latest";
    std::string checkpoint;
    bool quiet = false;

    // analysis
    std::string channel = "all";
    std::vector<double> probabilities = {0.01, 0.05, 0.10};
    std::size_t n_inputs = 50;
    std::size_t pairs = 5000;
    std::size_t bins = 75;
    std::size_t samples = 1000;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void add_config(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config_file, "key=value file; command-line flags take precedence");
}

void add_model_flags(CLI::App* sub, Options& o) {
    sub->add_option("--d", o.model.d, "stem feature width")->capture_default_str();
    sub->add_option("--m", o.model.m, "membership functions per feature")->capture_default_str();
    sub->add_option("--L_q,--layers", o.model.layers, "QMF re-uploading layers")->capture_default_str();
    sub->add_option("--q", o.model.q, "defuzzifier qubits")->capture_default_str();
    sub->add_option("--p", o.model.p, "defuzzifier head split (0: q/2)")->capture_default_str();
    sub->add_option("--hidden", o.model.hidden, "classifier hidden width")->capture_default_str();
}

void add_data_flags(CLI::App* sub, Options& o) {
    sub->add_option("--data-dir", o.data_dir, "directory holding train-*/t10k-* IDX files")->capture_default_str();
    sub->add_option("--train-images", o.train_images);
    sub->add_option("--train-labels", o.train_labels);
    sub->add_option("--test-images", o.test_images);
    sub->add_option("--test-labels", o.test_labels);
    sub->add_option("--test-n", o.test_n, "seeded test subset size (0: all)")->capture_default_str();
}

void add_seed(CLI::App* sub, Options& o, std::uint64_t def) {
    auto& slot = o.seeds[sub->get_name()];
    slot = def;
    sub->add_option("--seed", slot)->capture_default_str();
}

std::unique_ptr<CLI::App> build_app(Options& o) {
    auto app = std::make_unique<CLI::App>("Hybrid quantum-fuzzy classifier: training, evaluation and circuit analysis",
                                          "hqfnn");
    app->require_subcommand(1);

    auto* train = app->add_subcommand("train", "train on IDX data; writes metrics.csv, checkpoint.bin, summary.json");
    add_config(train, o);
    add_model_flags(train, o);
    add_data_flags(train, o);
    add_seed(train, o, 0);
    train->add_option("--train-n", o.train_n, "seeded training subset size (0: all)")->capture_default_str();
    train->add_option("--val-fraction", o.val_fraction)->capture_default_str();
    train->add_option("--epochs", o.epochs)->capture_default_str();
    train->add_option("--batch-size", o.batch_size)->capture_default_str();
    train->add_option("--lr", o.lr)->capture_default_str();
    train->add_option("--milestones", o.milestones, "epochs after which lr is multiplied by 0.1 (default: 100 150, those within --epochs)");
    train->add_option("--out-dir", o.out_dir)->capture_default_str();
    train->add_flag("--quiet", o.quiet, "suppress per-epoch progress");

    auto* eval = app->add_subcommand("eval", "evaluate a checkpoint on the test set");
    add_config(eval, o);
    add_data_flags(eval, o);
    add_seed(eval, o, 0);
    eval->add_option("--checkpoint", o.checkpoint)->required();

    auto* noise = app->add_subcommand("noise-sweep", "fidelity of a QMF circuit under single-qubit noise channels");
    add_config(noise, o);
    add_seed(noise, o, NoiseSweepConfig{}.seed);
    o.model.layers = 4;
    noise->add_option("--channel", o.channel, "AD, DP, BF, PF or all")->capture_default_str();
    noise->add_option("--P", o.probabilities, "noise probabilities")->capture_default_str();
    noise->add_option("--n-inputs", o.n_inputs)->capture_default_str();
    noise->add_option("--L_q,--layers", o.model.layers)->capture_default_str();
    noise->add_option("--out-dir", o.out_dir);

    auto* expr = app->add_subcommand("expressibility", "KL divergence of circuit fidelities from the Haar law");
    add_config(expr, o);
    add_seed(expr, o, ExprEntConfig{}.seed);
    expr->add_option("--L_q,--layers", o.model.layers)->capture_default_str();
    expr->add_option("--q", o.model.q)->capture_default_str();
    expr->add_option("--pairs", o.pairs)->capture_default_str();
    expr->add_option("--bins", o.bins)->capture_default_str();

    auto* ent = app->add_subcommand("entangle", "mean Meyer-Wallach entanglement of the analysis circuit");
    add_config(ent, o);
    add_seed(ent, o, ExprEntConfig{}.seed);
    ent->add_option("--L_q,--layers", o.model.layers)->capture_default_str();
    ent->add_option("--q", o.model.q)->capture_default_str();
    ent->add_option("--samples", o.samples)->capture_default_str();

    auto* gates = app->add_subcommand("gates", "gate and parameter counts read from instantiated circuits");
    add_config(gates, o);
    add_model_flags(gates, o);
    return app;
}

CLI::App* active_subcommand(CLI::App& app) {
    const auto subs = app.get_subcommands();
    return subs.empty() ? nullptr : subs.front();
}

struct ConfigRef {
    std::string subcommand;
    std::string path;
};

ConfigRef find_config(const std::vector<std::string>& args) {
    ConfigRef r;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (r.subcommand.empty() && !a.empty() && a[0] != '-') r.subcommand = a;
        if (a == "--config" && i + 1 < args.size()) r.path = args[i + 1];
        if (a.rfind("--config=", 0) == 0) r.path = a.substr(9);
    }
    return r;
}

bool given_on_command_line(const CLI::Option& opt, const std::vector<std::string>& args) {
    for (const auto& a : args) {
        if (a.size() < 3 || a.rfind("--", 0) != 0) continue;
        const auto eq = a.find('=');
        if (opt.check_lname(a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2))) return true;
    }
    return false;
}

/// Inserts file entries as flags, right after the subcommand, for every
/// option the command line does not set itself.
std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App& app, const ConfigRef& ref) {
    if (!fs::exists(ref.path)) throw CLI::ValidationError("--config", "config file not found: " + ref.path);
    CLI::App* sub = app.get_subcommand(ref.subcommand);
    CLI::ConfigINI reader;
    std::vector<std::string> extra;
    for (const auto& item : reader.from_file(ref.path)) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        if (!item.parents.empty()) throw CLI::ValidationError("--config", "sections are not supported: " + item.fullname());
        if (item.name == "config") throw CLI::ValidationError("--config", "config files cannot nest");
        const std::string flag = "--" + item.name;
        const CLI::Option* opt = nullptr;
        try {
            opt = sub->get_option(flag);
        } catch (const CLI::OptionNotFound&) {
            throw CLI::ExtrasError("unknown config key: " + item.name, CLI::ExitCodes::ExtrasError);
        }
        if (given_on_command_line(*opt, args)) continue;
        if (opt->get_type_size() == 0) {
            if (!item.inputs.empty() && (item.inputs.front() == "true" || item.inputs.front() == "1")) {
                extra.push_back(flag);
            }
            continue;
        }
        extra.push_back(flag);
        extra.insert(extra.end(), item.inputs.begin(), item.inputs.end());
    }
    std::vector<std::string> merged;
    bool inserted = false;
    for (const auto& a : args) {
        merged.push_back(a);
        if (!inserted && a == ref.subcommand) {
            merged.insert(merged.end(), extra.begin(), extra.end());
            inserted = true;
        }
    }
    return merged;
}

void parse(CLI::App& app, std::vector<std::string> args) {
    std::reverse(args.begin(), args.end());
    app.parse(args);
}

struct IdxPaths {
    fs::path train_images, train_labels, test_images, test_labels;
};

IdxPaths resolve_paths(const Options& o) {
    const fs::path dir(o.data_dir);
    IdxPaths p;
    p.train_images = o.train_images.empty() ? dir / "train-images-idx3-ubyte" : fs::path(o.train_images);
    p.train_labels = o.train_labels.empty() ? dir / "train-labels-idx1-ubyte" : fs::path(o.train_labels);
    p.test_images = o.test_images.empty() ? dir / "t10k-images-idx3-ubyte" : fs::path(o.test_images);
    p.test_labels = o.test_labels.empty() ? dir / "t10k-labels-idx1-ubyte" : fs::path(o.test_labels);
    for (const auto* f : {&p.train_images, &p.train_labels, &p.test_images, &p.test_labels}) {
        if (!fs::exists(*f)) throw std::runtime_error("missing data file " + f->string());
    }
    return p;
}

ordered_json metrics_json(const MetricsRecord& r) {
    return {{"loss", r.loss}, {"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
}

ordered_json model_json(const ModelConfig& c) {
    return {{"d", c.d},           {"m", c.m},           {"L_q", c.layers},
            {"q", c.q},           {"p", c.head_split()}, {"hidden", c.hidden},
            {"n_classes", c.n_classes}, {"image_size", c.image_size}};
}

void print_metrics(std::ostream& out, const std::string& label, const MetricsRecord& r) {
    out << label << " loss=" << fmt_short(r.loss) << " acc=" << fmt_short(r.accuracy)
        << " precision=" << fmt_short(r.precision) << " recall=" << fmt_short(r.recall) << " f1=" << fmt_short(r.f1)
        << "\n";
}

void write_json(const fs::path& path, const ordered_json& j) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << "\n";
}

int cmd_train(const Options& o, std::ostream& out) {
    const IdxPaths paths = resolve_paths(o);
    const IdxData train_raw = read_idx(paths.train_images, paths.train_labels);
    const Normalization stats = pixel_statistics(train_raw.pixels);
    const Dataset full_train = make_dataset(train_raw, "train", stats);
    const Dataset test = random_subset(load_idx(paths.test_images, paths.test_labels, stats), o.test_n, o.seed + 2);
    const Dataset train_pool = random_subset(full_train, o.train_n, o.seed + 1);
    const Split split = split_validation(train_pool, o.val_fraction, o.seed + 3);

    TrainConfig tc;
    tc.batch_size = o.batch_size;
    tc.lr0 = o.lr;
    tc.epochs = o.epochs;
    tc.seed = o.seed;
    if (o.milestones.empty()) {
        std::erase_if(tc.milestones, [&](std::size_t ms) { return ms > o.epochs; });
    } else {
        tc.milestones = std::set<std::size_t>(o.milestones.begin(), o.milestones.end());
    }
    tc.validate();

    ModelConfig mc = o.model;
    mc.image_size = kIdxSide;
    mc.validate();
    const ModelParams init = init_params(mc, o.seed);

    out << "train=" << split.train.size() << " val=" << split.validation.size() << " test=" << test.size()
        << " params=" << init.parameter_count() << "\n";
    const auto result = train(split.train, split.validation, init, tc, [&](const MetricsRecord& r) {
        if (!o.quiet) print_metrics(out, "epoch " + std::to_string(r.epoch), r);
    });
    const MetricsRecord test_metrics = evaluate(result.best, test, o.batch_size);
    print_metrics(out, "test (best epoch " + std::to_string(result.best_epoch) + ")", test_metrics);

    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    write_metrics_csv(dir / "metrics.csv", result.history);
    save_checkpoint(dir / "checkpoint.bin", result.best);

    ordered_json lrs = ordered_json::array();
    for (double lr : result.lr_history) lrs.push_back(lr);
    write_json(dir / "summary.json", {{"command", "train"},
                                      {"seed", o.seed},
                                      {"model", model_json(mc)},
                                      {"epochs", tc.epochs},
                                      {"batch_size", tc.batch_size},
                                      {"lr0", tc.lr0},
                                      {"milestones", tc.milestones},
                                      {"lr_history", lrs},
                                      {"train_samples", split.train.size()},
                                      {"val_samples", split.validation.size()},
                                      {"test_samples", test.size()},
                                      {"normalization", {{"mean", stats.mean}, {"std", stats.std}}},
                                      {"best_epoch", result.best_epoch},
                                      {"best_val_accuracy", result.best_val_accuracy},
                                      {"test", metrics_json(test_metrics)}});
    out << "wrote " << (dir / "metrics.csv").string() << ", " << (dir / "checkpoint.bin").string() << ", "
        << (dir / "summary.json").string() << "\n";
    return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
    const ModelParams params = load_checkpoint(o.checkpoint);
    const IdxPaths paths = resolve_paths(o);
    const Normalization stats = pixel_statistics(read_idx(paths.train_images, paths.train_labels).pixels);
    const Dataset test = random_subset(load_idx(paths.test_images, paths.test_labels, stats), o.test_n, o.seed + 2);
    const MetricsRecord r = evaluate(params, test);
    print_metrics(out, "test", r);
    return 0;
}

int cmd_noise(const Options& o, std::ostream& out) {
    std::vector<qsim::ChannelKind> kinds;
    if (o.channel == "all") {
        kinds = {qsim::ChannelKind::AmplitudeDamping, qsim::ChannelKind::Depolarizing, qsim::ChannelKind::BitFlip,
                 qsim::ChannelKind::PhaseFlip};
    } else {
        kinds = {qsim::parse_channel(o.channel)};
    }
    NoiseSweepConfig cfg;
    cfg.layers = o.model.layers;
    cfg.n_inputs = o.n_inputs;
    cfg.seed = o.seed;

    std::string csv = "channel,P,input,fidelity\n";
    ordered_json rows = ordered_json::array();
    out << "channel P mean_fidelity\n";
    for (auto kind : kinds) {
        for (const auto& r : noise_sweep(kind, o.probabilities, cfg)) {
            const std::string tag = qsim::channel_name(kind);
            out << tag << " " << r.probability << " " << fmt_short(r.mean_fidelity) << "\n";
            rows.push_back({{"channel", tag}, {"P", r.probability}, {"mean_fidelity", r.mean_fidelity}});
            for (std::size_t k = 0; k < r.inputs.size(); ++k) {
                csv += tag + "," + fmt(r.probability) + "," + fmt(r.inputs[k]) + "," + fmt(r.fidelities[k]) + "\n";
            }
        }
    }
    if (!o.out_dir.empty()) {
        const fs::path dir(o.out_dir);
        fs::create_directories(dir);
        std::ofstream(dir / "noise_sweep.csv", std::ios::trunc) << csv;
        write_json(dir / "noise_sweep.json", {{"command", "noise-sweep"},
                                              {"seed", o.seed},
                                              {"L_q", cfg.layers},
                                              {"n_inputs", cfg.n_inputs},
                                              {"results", rows}});
    }
    return 0;
}

ExprEntConfig expr_config(const Options& o) {
    ExprEntConfig c;
    c.layers = o.model.layers;
    c.q = o.model.q;
    c.n_pairs = o.pairs;
    c.n_bins = o.bins;
    c.n_samples = o.samples;
    c.seed = o.seed;
    return c;
}

int cmd_expr(const Options& o, std::ostream& out) {
    const ExprEntConfig c = expr_config(o);
    if (c.n_pairs < 1000) throw std::invalid_argument("--pairs must be at least 1000");
    if (c.n_bins < 10) throw std::invalid_argument("--bins must be at least 10");
    const double e = expressibility_score(c);
    out << "expressibility L_q=" << c.layers << " q=" << c.q << " pairs=" << c.n_pairs << " bins=" << c.n_bins
        << " seed=" << c.seed << ": " << fmt_short(e) << "\n";
    return 0;
}

int cmd_ent(const Options& o, std::ostream& out) {
    const ExprEntConfig c = expr_config(o);
    if (c.n_samples < 100) throw std::invalid_argument("--samples must be at least 100");
    const double e = entangling_score(c);
    out << "entanglement L_q=" << c.layers << " q=" << c.q << " samples=" << c.n_samples << " seed=" << c.seed
        << ": " << fmt_short(e) << "\n";
    return 0;
}

int cmd_gates(const Options& o, std::ostream& out) {
    const GateCountReport r = gate_count_report(o.model);
    out << "QMF single-qubit gates: " << r.qmf_single_qubit_gates << " (" << r.qmf_circuits << " circuits)\n"
        << "QD Rx gates: " << r.qd_rx_gates << "\n"
        << "QD cluster CNOTs: " << r.qd_cluster_cnots << "\n"
        << "QD wrap-around CNOTs: " << r.qd_wraparound_cnots << "\n"
        << "QMF parameters: " << r.qmf_params << "\n"
        << "rule-layer weights: " << r.rule_weights << "\n"
        << "QD projection weights: " << r.qd_projection_weights << "\n"
        << "classifier weights: " << r.classifier_weights << "\n"
        << "total parameters: " << r.total_params << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    auto app = build_app(o);
    try {
        const ConfigRef ref = find_config(args);
        if (!ref.path.empty() && app->get_subcommand_no_throw(ref.subcommand) != nullptr) {
            parse(*app, merge_config(args, *app, ref));
        } else {
            parse(*app, args);
        }
    } catch (const CLI::CallForHelp&) {
        out << app->help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app->help();
        return 2;
    }
    const std::string name = active_subcommand(*app)->get_name();
    if (const auto it = o.seeds.find(name); it != o.seeds.end()) o.seed = it->second;
    try {
        if (name == "train") return cmd_train(o, out);
        if (name == "eval") return cmd_eval(o, out);
        if (name == "noise-sweep") return cmd_noise(o, out);
        if (name == "expressibility") return cmd_expr(o, out);
        if (name == "entangle") return cmd_ent(o, out);
        return cmd_gates(o, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace hqfnn
