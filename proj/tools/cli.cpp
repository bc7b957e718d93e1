#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "bigcn/checkpoint.hpp"
#include "bigcn/trainer.hpp"

namespace bigcn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct LoadedDataset {
    AttributedGraph graph;
    SplitMasks masks;
    json provenance;
};

json synth_to_json(const SynthSpec& s) {
    return {{"n_per_class", s.n_per_class}, {"classes", s.classes},   {"features", s.features},
            {"intra_p", s.intra_p},         {"inter_p", s.inter_p},   {"separation", s.separation},
            {"seed", s.seed}};
}

LoadedDataset load_dataset(const DatasetSpec& spec) {
    LoadedDataset ds;
    if (spec.synth) {
        ds.graph = synth_graph(*spec.synth);
        ds.provenance = {{"synth", synth_to_json(*spec.synth)}};
    } else {
        if (spec.content.empty() || spec.cites.empty())
            throw ParseError("a dataset needs --content and --cites, or --synth");
        ds.graph = load_content_cites(spec.content, spec.cites);
        ds.provenance = {{"content", spec.content.string()},
                         {"content_sha256", file_sha256(spec.content)},
                         {"cites", spec.cites.string()},
                         {"cites_sha256", file_sha256(spec.cites)}};
    }
    if (!spec.split_json.empty()) {
        ds.masks = load_split_json(spec.split_json, ds.graph.n_nodes());
        ds.provenance["split"] = spec.split_json.string();
        ds.provenance["split_sha256"] = file_sha256(spec.split_json);
    } else {
        ds.masks = planetoid_split(ds.graph);
        ds.provenance["split"] = "planetoid";
    }
    const auto& st = ds.graph.load_stats;
    ds.provenance["stats"] = {{"nodes", ds.graph.n_nodes()},
                              {"features", ds.graph.n_features()},
                              {"classes", ds.graph.n_classes()},
                              {"edges_dedup", ds.graph.edges.size()},
                              {"edge_lines", st.raw_edge_lines},
                              {"dropped_unknown", st.dropped_unknown},
                              {"dropped_self_loops", st.dropped_self_loops},
                              {"dropped_duplicates", st.dropped_duplicates},
                              {"train", ds.masks.train.size()},
                              {"val", ds.masks.val.size()},
                              {"test", ds.masks.test.size()}};
    return ds;
}

json config_to_json(const BiGcnConfig& c) {
    return {{"layer_dims", c.layer_dims},
            {"mode", std::string(to_string(c.mode))},
            {"dropout_rate", c.dropout_rate},
            {"input_dropout", c.input_dropout},
            {"learning_rate", c.learning_rate},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"seed", c.seed},
            {"ste_variant", std::string(to_string(c.ste_variant))}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(fmt::format("cannot write {}", path.string()));
    out << text;
    if (!out) throw ParseError(fmt::format("short write to {}", path.string()));
}

std::pair<double, double> mean_and_sample_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

std::vector<std::size_t> parse_list(const std::string& text, char sep, const char* what) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, sep)) {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(tok, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument(fmt::format("malformed {} '{}'", what, text));
        }
        if (pos != tok.size() || v == 0 || tok.front() == '-')
            throw std::invalid_argument(fmt::format("malformed {} '{}'", what, text));
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw std::invalid_argument(fmt::format("malformed {} '{}'", what, text));
    return out;
}

}  // namespace

std::string file_sha256(const fs::path& path) {
    const auto bytes = read_file(path);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw ParseError("sha256 failed");
    std::string hex;
    for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

SynthSpec parse_synth_spec(const std::string& text) {
    SynthSpec s;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument(fmt::format("synth spec item '{}' lacks '='", item));
        const auto key = item.substr(0, eq);
        const auto val = item.substr(eq + 1);
        try {
            if (key == "n_per_class") s.n_per_class = std::stoul(val);
            else if (key == "classes") s.classes = std::stoul(val);
            else if (key == "features") s.features = std::stoul(val);
            else if (key == "intra_p") s.intra_p = std::stod(val);
            else if (key == "inter_p") s.inter_p = std::stod(val);
            else if (key == "separation") s.separation = std::stod(val);
            else if (key == "seed") s.seed = std::stoull(val);
            else throw std::invalid_argument(fmt::format("unknown synth key '{}'", key));
        } catch (const std::logic_error& e) {
            throw std::invalid_argument(fmt::format("synth spec '{}': {}", item, e.what()));
        }
    }
    return s;
}

std::vector<std::size_t> parse_size_triple(const std::string& text) {
    auto v = parse_list(text, 'x', "size spec (expected NxDxM)");
    if (v.size() != 3) throw std::invalid_argument(fmt::format("malformed size spec '{}' (expected NxDxM)", text));
    return v;
}

std::vector<std::size_t> parse_dims(const std::string& text) {
    auto v = parse_list(text, ',', "layer dims");
    if (v.size() < 2) throw std::invalid_argument("layer dims need at least two entries");
    return v;
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& text) {
    const auto dots = text.find("..");
    if (dots == std::string::npos) throw std::invalid_argument(fmt::format("malformed range '{}' (expected A..B)", text));
    const auto lo = parse_list(text.substr(0, dots), ',', "range");
    const auto hi = parse_list(text.substr(dots + 2), ',', "range");
    if (lo.size() != 1 || hi.size() != 1 || lo[0] > hi[0])
        throw std::invalid_argument(fmt::format("malformed range '{}'", text));
    return {lo[0], hi[0]};
}

// ---------------------------------------------------------------------- train

int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err) {
    if (config.repeat == 0) {
        err << "repeat must be >= 1\n";
        return kUsage;
    }
    LoadedDataset ds;
    try {
        ds = load_dataset(config.data);
        fs::create_directories(config.out_dir);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    BiGcnConfig base = config.model;
    if (base.layer_dims.size() >= 2) {
        if (base.layer_dims.front() == 0) base.layer_dims.front() = ds.graph.n_features();
        if (base.layer_dims.back() == 0) base.layer_dims.back() = ds.graph.n_classes();
    }

    json manifest = {{"command", "train"},
                     {"format_version", 1},
                     {"config", config_to_json(base)},
                     {"repeat", config.repeat},
                     {"dataset", ds.provenance}};
    json seeds = json::array();
    for (std::size_t r = 0; r < config.repeat; ++r) seeds.push_back(base.seed + r);
    manifest["seeds"] = seeds;

    std::string metrics, curves = "seed,epoch,train_loss,train_acc,val_loss,val_acc\n";
    json timing = json::array();
    std::vector<double> accs;
    bool diverged = false;
    try {
        write_text(config.out_dir / "manifest.json", manifest.dump(2) + "\n");
        for (std::size_t r = 0; r < config.repeat; ++r) {
            BiGcnConfig cfg = base;
            cfg.seed = base.seed + r;
            auto result = train(ds.graph, ds.masks, cfg);
            const auto& rep = result.report;
            auto line = rep.to_json();
            line.erase("curve");
            metrics += line.dump() + "\n";
            for (const auto& e : rep.epochs)
                curves += fmt::format("{},{},{},{},{},{}\n", cfg.seed, e.epoch, e.train_loss, e.train_accuracy,
                                      e.val_loss, e.val_accuracy);
            timing.push_back({{"seed", cfg.seed}, {"wall_seconds", rep.wall_seconds}, {"epochs", rep.epochs_run()}});
            if (rep.diverged) {
                diverged = true;
                err << fmt::format("seed {}: diverged at epoch {}: {}\n", cfg.seed, rep.epochs_run() + 1,
                                   rep.divergence_reason);
                continue;
            }
            accs.push_back(rep.test_accuracy);
            out << fmt::format("seed {:>4}  mode {:<12} epochs {:>4}  best {:>4}  val_acc {:.4f}  test_acc {:.4f}  ({:.1f}s)\n",
                               cfg.seed, to_string(cfg.mode), rep.epochs_run(), rep.best_epoch,
                               rep.best_val_accuracy, rep.test_accuracy, rep.wall_seconds);
            if (config.save_models) {
                write_file(config.out_dir / fmt::format("model_seed{}.bgcf", cfg.seed), serialize(result.model));
                if (cfg.mode == Mode::bin_both)
                    write_file(config.out_dir / fmt::format("model_seed{}.bgcn", cfg.seed),
                               serialize(pack_model(result.model.params, result.model.standardizer)));
            }
        }
        const auto [mean, sd] = mean_and_sample_std(accs);
        json summary = {{"mode", std::string(to_string(base.mode))},
                        {"runs", accs.size()},
                        {"test_acc_mean", mean},
                        {"test_acc_std", sd},
                        {"test_acc", accs},
                        {"diverged", diverged}};
        if (config.emit_json) {
            write_text(config.out_dir / "metrics.jsonl", metrics);
            write_text(config.out_dir / "summary.json", summary.dump(2) + "\n");
        }
        if (config.emit_csv) write_text(config.out_dir / "curves.csv", curves);
        write_text(config.out_dir / "timing.json", timing.dump(2) + "\n");
        out << fmt::format("test accuracy over {} run(s): {:.1f} ± {:.1f}\n", accs.size(), 100.0 * mean, 100.0 * sd);
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return diverged ? kDiverged : kOk;
}

// ----------------------------------------------------------------------- eval

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
    try {
        const auto ds = load_dataset(options.data);
        const auto bytes = read_file(options.model);
        const CsrMatrix adj = normalize_adjacency(ds.graph);
        DenseMatrix logits;
        std::string kind;
        if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "BGCF")) {
            const auto model = parse_trained_model(bytes);
            if (model.config.layer_dims.front() != ds.graph.n_features())
                throw DimensionError(fmt::format("model expects {} features, dataset has {}",
                                                 model.config.layer_dims.front(), ds.graph.n_features()));
            logits = predict_logits(model, ds.graph, adj);
            kind = fmt::format("checkpoint ({})", to_string(model.config.mode));
        } else {
            const auto model = parse_packed_model(bytes);
            logits = infer_binary_logits(ds.graph.features, adj, model);
            kind = "packed xnor";
        }
        if (logits.cols() != ds.graph.n_classes())
            throw DimensionError(fmt::format("model predicts {} classes, dataset has {}", logits.cols(),
                                             ds.graph.n_classes()));
        const double val = accuracy(logits, ds.graph.labels, ds.masks.val);
        const double test = accuracy(logits, ds.graph.labels, ds.masks.test);
        out << fmt::format("model {} [{}]: val_acc {:.4f}  test_acc {:.4f}\n", options.model.string(), kind, val, test);
        if (!options.predictions.empty()) {
            std::string text;
            const auto pred = argmax_rows(logits);
            for (std::size_t i = 0; i < pred.size(); ++i)
                text += fmt::format("{}\t{}\n", ds.graph.node_ids[i], ds.graph.class_names[static_cast<std::size_t>(pred[i])]);
            write_text(options.predictions, text);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kOk;
}

// -------------------------------------------------------------------- analyze

int cmd_analyze(const AnalyzeOptions& options, std::ostream& out, std::ostream& err) {
    auto dims_for = [&](std::size_t layers) {
        std::vector<std::size_t> dims{static_cast<std::size_t>(options.stats.features)};
        for (std::size_t l = 1; l < layers; ++l) dims.push_back(options.hidden);
        dims.push_back(options.classes);
        return dims;
    };
    try {
        if (options.stats.nodes == 0 || options.stats.features == 0)
            throw std::invalid_argument("nodes and features must be positive");
        const auto dims = options.layer_dims.empty() ? dims_for(options.layers) : options.layer_dims;
        if (dims.front() != options.stats.features)
            throw std::invalid_argument("first layer dimension must equal the feature count");
        const auto report = cost::analyze(dims, options.stats);
        out << cost::format_table(report);
        if (!options.csv.empty()) write_text(options.csv, cost::format_csv(report));
        if (options.depth_sweep) {
            const auto [lo, hi] = *options.depth_sweep;
            if (lo < 1) throw std::invalid_argument("depth sweep starts at 1 layer");
            std::string csv = "layers,model_bits_full,model_bits_binary,cycle_ops_full,cycle_ops_binary\n";
            out << fmt::format("\ndepth sweep (hidden {}):\n{:>6}{:>12}{:>12}{:>12}{:>12}\n", options.hidden, "layers",
                               "M.S. full", "M.S. bin", "C.O. full", "C.O. bin");
            for (std::size_t l = lo; l <= hi; ++l) {
                const auto d = dims_for(l);
                const auto mf = cost::model_size_bits(d, cost::Variant::full);
                const auto mb = cost::model_size_bits(d, cost::Variant::binary);
                const auto cf = cost::cycle_ops(d, options.stats.nodes, options.stats.edges, cost::Variant::full);
                const auto cb = cost::cycle_ops(d, options.stats.nodes, options.stats.edges, cost::Variant::binary);
                out << fmt::format("{:>6}{:>12}{:>12}{:>12}{:>12}\n", l, cost::format_size(mf), cost::format_size(mb),
                                   cost::format_ops(cf), cost::format_ops(cb));
                csv += fmt::format("{},{},{},{},{}\n", l, mf, mb, cf, cb);
            }
            if (!options.csv.empty()) {
                auto sweep = options.csv;
                sweep.replace_extension(".depth.csv");
                write_text(sweep, csv);
            }
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kOk;
}

// ---------------------------------------------------------------------- bench

int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err) {
    std::vector<std::vector<std::size_t>> shapes;
    try {
        if (options.reps == 0) throw std::invalid_argument("reps must be >= 1");
        for (const auto& s : options.sizes) shapes.push_back(parse_size_triple(s));
    } catch (const std::exception& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }
    using clock = std::chrono::steady_clock;
    out << "wall-clock timings are hardware-dependent; operation counts are exact\n";
    out << fmt::format("{:>18}{:>16}{:>14}{:>12}{:>12}{:>10}\n", "N x d x m", "binary ops", "dense MACs", "binary ms",
                       "dense ms", "speedup");
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal;
    for (const auto& shape : shapes) {
        const std::size_t n = shape[0], d = shape[1], m = shape[2];
        DenseMatrix h(n, d), w(d, m);
        for (auto& v : h.values()) v = normal(rng);
        for (auto& v : w.values()) v = normal(rng);
        const auto fb = binarize_feature_rows(h);
        const auto wb = binarize_weight_columns(w);
        const auto hq = dequantize(fb);
        const auto wq = dequantize(wb);

        double best_bin = 1e300, best_dense = 1e300, checksum = 0.0;
        for (std::size_t r = 0; r < options.reps; ++r) {
            auto t0 = clock::now();
            const auto zb = binary_matmul(fb.bits, fb.scales, wb.bits, wb.scales);
            auto t1 = clock::now();
            const auto zd = dense_matmul(hq, wq);
            auto t2 = clock::now();
            best_bin = std::min(best_bin, std::chrono::duration<double, std::milli>(t1 - t0).count());
            best_dense = std::min(best_dense, std::chrono::duration<double, std::milli>(t2 - t1).count());
            checksum += zb(0, 0) - zd(0, 0);
        }
        out << fmt::format("{:>18}{:>16}{:>14}{:>12.3f}{:>12.3f}{:>9.2f}x\n", fmt::format("{}x{}x{}", n, d, m),
                           n * d * m, n * d * m, best_bin, best_dense, best_dense / best_bin);
        if (std::abs(checksum) > 1e-6 * static_cast<double>(d)) err << "warning: binary and dense results disagree\n";
    }
    return kOk;
}

// ----------------------------------------------------------------------- pack

int cmd_pack(const fs::path& checkpoint, const fs::path& output, std::ostream& out, std::ostream& err) {
    try {
        const auto model = parse_trained_model(read_file(checkpoint));
        if (model.config.mode != Mode::bin_both)
            err << fmt::format("warning: checkpoint was trained in mode {}; packed inference binarizes "
                               "weights and features\n",
                               to_string(model.config.mode));
        const auto packed = pack_model(model.params, model.standardizer);
        const auto bytes = serialize(packed);
        write_file(output, bytes);
        out << fmt::format("wrote {} ({} bytes: header {}, parameters {}, standardization {})\n", output.string(),
                           bytes.size(), packed.header_bytes(), packed.parameter_payload_bytes(),
                           bytes.size() - packed.header_bytes() - packed.parameter_payload_bytes());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kOk;
}

// ---------------------------------------------------------------------- synth

int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err) {
    try {
        const auto g = synth_graph(options.spec);
        write_content_cites(g, options.content, options.cites);
        out << fmt::format("wrote {} nodes, {} edges, {} features, {} classes\n", g.n_nodes(), g.edges.size(),
                           g.n_features(), g.n_classes());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kOk;
}

// ------------------------------------------------------------------------ run

namespace {

void add_dataset_options(CLI::App* cmd, DatasetSpec& data, std::string& synth_text) {
    cmd->add_option("--content", data.content, "node content file (id, features, label; tab separated)");
    cmd->add_option("--cites", data.cites, "citation edges file (two ids per line)");
    cmd->add_option("--split", data.split_json, "JSON file with explicit train/val/test node indices");
    cmd->add_option("--synth", synth_text, "synthetic graph instead of files, e.g. n_per_class=40,classes=3");
}

// CLI11 only reads config files attached to the top-level app, so a train
// config is spliced in as --key=value arguments ahead of the command line.
std::vector<std::string> expand_train_config(const std::vector<std::string>& args) {
    if (args.size() < 2 || args[1] != "train") return args;
    std::string file;
    std::vector<std::string> rest;
    for (std::size_t i = 2; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            file = args[++i];
        else if (args[i].rfind("--config=", 0) == 0)
            file = args[i].substr(9);
        else
            rest.push_back(args[i]);
    }
    if (file.empty()) return args;
    std::ifstream in(file);
    if (!in) throw std::invalid_argument(fmt::format("cannot read config file '{}'", file));
    std::vector<std::string> expanded{args[0], args[1]};
    for (const auto& item : CLI::ConfigINI().from_config(in)) {
        if (!item.parents.empty() || item.name == "++" || item.name == "--")
            throw std::invalid_argument(fmt::format("config file '{}': sections are not supported", file));
        expanded.push_back(fmt::format("--{}={}", item.name, fmt::join(item.inputs, ",")));
    }
    expanded.insert(expanded.end(), rest.begin(), rest.end());
    return expanded;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Binarized graph convolutional networks: training, packed inference and cost analysis", "bigcn"};
    app.require_subcommand(1);

    RunConfig train_cfg;
    std::string train_synth, mode = "bin_both", ste = "grad_magnitude", dims_text;
    std::size_t layers = 2, hidden = 64;
    auto* train_cmd = app.add_subcommand("train", "train on a dataset, repeat over seeds");
    train_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string config_file;
    train_cmd->add_option("--config", config_file, "flat key=value file; command-line flags win");
    add_dataset_options(train_cmd, train_cfg.data, train_synth);
    train_cmd->add_option("--mode", mode, "full | bin_weights | bin_features | bin_both")->capture_default_str();
    train_cmd->add_option("--layers", layers, "graph convolution layers")->capture_default_str();
    train_cmd->add_option("--hidden", hidden, "hidden width")->capture_default_str();
    train_cmd->add_option("--dims", dims_text, "explicit layer dims, e.g. 1433,64,7");
    train_cmd->add_option("--dropout", train_cfg.model.dropout_rate)->capture_default_str();
    train_cmd->add_flag("--input-dropout", train_cfg.model.input_dropout, "also drop the first layer's input");
    train_cmd->add_option("--lr", train_cfg.model.learning_rate)->capture_default_str();
    train_cmd->add_option("--epochs", train_cfg.model.max_epochs, "maximum epochs")->capture_default_str();
    train_cmd->add_option("--patience", train_cfg.model.patience, "early-stopping patience")->capture_default_str();
    train_cmd->add_option("--seed", train_cfg.model.seed, "first seed")->capture_default_str();
    train_cmd->add_option("--ste", ste, "grad_magnitude | input_magnitude")->capture_default_str();
    train_cmd->add_option("--repeat", train_cfg.repeat, "number of seeds")->capture_default_str();
    train_cmd->add_option("--out", train_cfg.out_dir, "output directory")->capture_default_str();
    bool no_csv = false, no_json = false, no_models = false;
    train_cmd->add_flag("--no-csv", no_csv);
    train_cmd->add_flag("--no-json", no_json);
    train_cmd->add_flag("--no-models", no_models);

    EvalOptions eval_opts;
    std::string eval_synth;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a packed model (.bgcn) or checkpoint (.bgcf)");
    eval_cmd->add_option("model", eval_opts.model)->required();
    add_dataset_options(eval_cmd, eval_opts.data, eval_synth);
    eval_cmd->add_option("--predictions", eval_opts.predictions, "write per-node predictions here");

    AnalyzeOptions an;
    std::string an_dims, an_sweep;
    auto* an_cmd = app.add_subcommand("analyze", "model size, data size and cycle-operation analysis");
    an_cmd->add_option("--nodes", an.stats.nodes)->capture_default_str();
    an_cmd->add_option("--features", an.stats.features)->capture_default_str();
    an_cmd->add_option("--edges", an.stats.edges)->capture_default_str();
    an_cmd->add_option("--classes", an.classes)->capture_default_str();
    an_cmd->add_option("--hidden", an.hidden)->capture_default_str();
    an_cmd->add_option("--layers", an.layers)->capture_default_str();
    an_cmd->add_option("--dims", an_dims, "explicit layer dims");
    an_cmd->add_option("--depth-sweep", an_sweep, "layer range, e.g. 2..6");
    an_cmd->add_option("--csv", an.csv, "also write the table as CSV");
    bool pubmed = false;
    an_cmd->add_flag("--pubmed", pubmed, "use PubMed statistics (N=19711, d=500, |E|=44338, C=3)");

    BenchOptions bench;
    std::string bench_sizes;
    auto* bench_cmd = app.add_subcommand("bench", "time binary vs dense feature extraction");
    bench_cmd->add_option("--sizes", bench_sizes, "comma list of NxDxM shapes")->default_str("2708x1433x64");
    bench_cmd->add_option("--reps", bench.reps)->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed)->capture_default_str();

    std::filesystem::path pack_in, pack_out;
    auto* pack_cmd = app.add_subcommand("pack", "convert a training checkpoint into a packed binary model");
    pack_cmd->add_option("checkpoint", pack_in)->required();
    pack_cmd->add_option("output", pack_out)->required();

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic graph in content/cites format");
    synth_cmd->add_option("--n-per-class", synth.spec.n_per_class)->capture_default_str();
    synth_cmd->add_option("--classes", synth.spec.classes)->capture_default_str();
    synth_cmd->add_option("--features", synth.spec.features)->capture_default_str();
    synth_cmd->add_option("--intra-p", synth.spec.intra_p)->capture_default_str();
    synth_cmd->add_option("--inter-p", synth.spec.inter_p)->capture_default_str();
    synth_cmd->add_option("--separation", synth.spec.separation)->capture_default_str();
    synth_cmd->add_option("--seed", synth.spec.seed)->capture_default_str();
    synth_cmd->add_option("--content", synth.content)->required();
    synth_cmd->add_option("--cites", synth.cites)->required();

    try {
        const auto expanded = expand_train_config(args);
        std::vector<std::string> rev(expanded.rbegin(), expanded.rend() - (expanded.empty() ? 0 : 1));
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*train_cmd) {
            train_cfg.model.mode = parse_mode(mode);
            train_cfg.model.ste_variant = parse_ste_variant(ste);
            if (!dims_text.empty()) {
                train_cfg.model.layer_dims = parse_dims(dims_text);
            } else {
                if (layers == 0) throw std::invalid_argument("--layers must be >= 1");
                train_cfg.model.layer_dims.assign(1, 0);
                for (std::size_t l = 1; l < layers; ++l) train_cfg.model.layer_dims.push_back(hidden);
                train_cfg.model.layer_dims.push_back(0);
            }
            if (!train_synth.empty()) train_cfg.data.synth = parse_synth_spec(train_synth);
            train_cfg.emit_csv = !no_csv;
            train_cfg.emit_json = !no_json;
            train_cfg.save_models = !no_models;
            return cmd_train(train_cfg, out, err);
        }
        if (*eval_cmd) {
            if (!eval_synth.empty()) eval_opts.data.synth = parse_synth_spec(eval_synth);
            return cmd_eval(eval_opts, out, err);
        }
        if (*an_cmd) {
            if (pubmed) {
                an.stats = cost::kPubMed;
                an.classes = 3;
            }
            if (!an_dims.empty()) an.layer_dims = parse_dims(an_dims);
            if (!an_sweep.empty()) an.depth_sweep = parse_range(an_sweep);
            return cmd_analyze(an, out, err);
        }
        if (*bench_cmd) {
            if (!bench_sizes.empty()) {
                bench.sizes.clear();
                std::stringstream ss(bench_sizes);
                std::string s;
                while (std::getline(ss, s, ',')) bench.sizes.push_back(s);
            }
            return cmd_bench(bench, out, err);
        }
        if (*pack_cmd) return cmd_pack(pack_in, pack_out, out, err);
        if (*synth_cmd) return cmd_synth(synth, out, err);
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace bigcn::cli
