#pragma once

// Subcommands of the `bigcn` tool. Each returns a process exit code:
// 0 ok, 1 training diverged, 2 usage or I/O error.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bigcn/costmodel.hpp"
#include "bigcn/graph.hpp"
#include "bigcn/model.hpp"

namespace bigcn::cli {

enum ExitCode : int { kOk = 0, kDiverged = 1, kUsage = 2 };

struct DatasetSpec {
    std::filesystem::path content;
    std::filesystem::path cites;
    std::filesystem::path split_json;  // optional explicit masks
    std::optional<SynthSpec> synth;
};

struct RunConfig {
    DatasetSpec data;
    BiGcnConfig model;
    std::filesystem::path out_dir = "runs/latest";
    std::size_t repeat = 1;
    bool emit_csv = true;
    bool emit_json = true;
    bool save_models = true;
};

struct AnalyzeOptions {
    cost::GraphStats stats = cost::kCora;
    std::size_t classes = 7;
    std::size_t hidden = 64;
    std::size_t layers = 2;
    std::vector<std::size_t> layer_dims;  // overrides layers/hidden/classes when set
    std::optional<std::pair<std::size_t, std::size_t>> depth_sweep;
    std::filesystem::path csv;
};

struct BenchOptions {
    std::vector<std::string> sizes{"2708x1433x64"};
    std::size_t reps = 5;
    std::uint64_t seed = 0;
};

struct EvalOptions {
    std::filesystem::path model;
    DatasetSpec data;
    std::filesystem::path predictions;
};

struct SynthOptions {
    SynthSpec spec;
    std::filesystem::path content;
    std::filesystem::path cites;
};

int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_analyze(const AnalyzeOptions& options, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err);
int cmd_pack(const std::filesystem::path& checkpoint, const std::filesystem::path& output, std::ostream& out,
             std::ostream& err);
int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err);

/// "n_per_class=40,classes=3,features=16,intra_p=0.1,inter_p=0.01,separation=1,seed=7".
SynthSpec parse_synth_spec(const std::string& text);
/// "2708x1433x64" → {2708, 1433, 64}.
std::vector<std::size_t> parse_size_triple(const std::string& text);
/// "1433,64,7".
std::vector<std::size_t> parse_dims(const std::string& text);
/// "2..6".
std::pair<std::size_t, std::size_t> parse_range(const std::string& text);

/// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

/// Parses argv (argv[0] is the program name) and dispatches.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bigcn::cli
