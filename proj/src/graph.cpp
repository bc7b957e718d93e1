#include "bigcn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <string_view>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace bigcn {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view chomp(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.remove_suffix(1);
    return s;
}

std::ifstream open_or_throw(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ParseError(fmt::format("cannot open {}", p.string()));
    return in;
}

}  // namespace

void AttributedGraph::validate() const {
    if (labels.size() != n_nodes()) throw DimensionError("graph: one label per node required");
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= n_classes()) throw DimensionError("graph: label out of range");
    std::set<Edge> seen;
    for (const auto& [a, b] : edges) {
        if (a == b) throw DimensionError("graph: self-loop in edge list");
        if (a >= n_nodes() || b >= n_nodes()) throw DimensionError("graph: edge endpoint out of range");
        if (!seen.insert(std::minmax(a, b)).second) throw DimensionError("graph: duplicate undirected edge");
    }
}

void SplitMasks::validate(std::size_t n_nodes) const {
    if (train.empty()) throw DimensionError("split: train set is empty");
    std::vector<char> used(n_nodes, 0);
    for (const auto* set : {&train, &val, &test}) {
        for (auto i : *set) {
            if (i >= n_nodes) throw DimensionError(fmt::format("split: node {} out of range", i));
            if (used[i]) throw DimensionError(fmt::format("split: node {} in more than one set", i));
            used[i] = 1;
        }
    }
}

AttributedGraph load_content_cites(const std::filesystem::path& content_path,
                                   const std::filesystem::path& cites_path) {
    AttributedGraph g;
    std::vector<double> values;
    std::unordered_map<std::string, std::size_t> index_of;
    std::unordered_map<std::string, int> class_of;
    std::size_t d = 0;
    bool have_width = false;

    auto content = open_or_throw(content_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(content, line)) {
        ++line_no;
        const auto text = chomp(line);
        if (text.empty()) continue;
        const auto tok = split_tabs(text);
        if (tok.size() < 2) throw ParseError(fmt::format("{}:{}: expected id, features and label", content_path.string(), line_no));
        const std::size_t width = tok.size() - 2;
        if (!have_width) {
            d = width;
            have_width = true;
        } else if (width != d) {
            throw ParseError(fmt::format("{}:{}: {} features, expected {}", content_path.string(), line_no, width, d));
        }
        for (std::size_t k = 1; k + 1 < tok.size(); ++k) {
            double v = 0.0;
            const auto t = tok[k];
            const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
            if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v))
                throw ParseError(fmt::format("{}:{}: non-numeric feature '{}'", content_path.string(), line_no, t));
            values.push_back(v);
        }
        std::string id(tok.front());
        if (!index_of.emplace(id, g.node_ids.size()).second)
            throw ParseError(fmt::format("{}:{}: duplicate node id '{}'", content_path.string(), line_no, id));
        g.node_ids.push_back(std::move(id));
        std::string label(tok.back());
        auto [it, fresh] = class_of.emplace(label, static_cast<int>(g.class_names.size()));
        if (fresh) g.class_names.push_back(label);
        g.labels.push_back(it->second);
    }
    if (g.node_ids.empty()) throw ParseError(fmt::format("{}: no nodes", content_path.string()));
    g.features = DenseMatrix(g.node_ids.size(), d, std::move(values));

    auto cites = open_or_throw(cites_path);
    std::set<Edge> seen;
    line_no = 0;
    while (std::getline(cites, line)) {
        ++line_no;
        const auto text = chomp(line);
        if (text.empty()) continue;
        const auto tok = split_tabs(text);
        if (tok.size() != 2) throw ParseError(fmt::format("{}:{}: expected two ids", cites_path.string(), line_no));
        ++g.load_stats.raw_edge_lines;
        const auto a = index_of.find(std::string(tok[0]));
        const auto b = index_of.find(std::string(tok[1]));
        if (a == index_of.end() || b == index_of.end()) {
            ++g.load_stats.dropped_unknown;
            continue;
        }
        if (a->second == b->second) {
            ++g.load_stats.dropped_self_loops;
            continue;
        }
        const Edge e = std::minmax(a->second, b->second);
        if (!seen.insert(e).second) {
            ++g.load_stats.dropped_duplicates;
            continue;
        }
        g.edges.push_back(e);
    }
    return g;
}

void write_content_cites(const AttributedGraph& g, const std::filesystem::path& content_path,
                         const std::filesystem::path& cites_path) {
    std::ofstream content(content_path, std::ios::binary);
    std::ofstream cites(cites_path, std::ios::binary);
    if (!content || !cites) throw ParseError("cannot open output files for writing");
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        content << g.node_ids[i];
        for (double v : g.features.row(i)) content << '\t' << fmt::format("{}", v);
        content << '\t' << g.class_names[static_cast<std::size_t>(g.labels[i])] << '\n';
    }
    for (const auto& [a, b] : g.edges) cites << g.node_ids[a] << '\t' << g.node_ids[b] << '\n';
}

CsrMatrix normalize_adjacency(const AttributedGraph& g) {
    const std::size_t n = g.n_nodes();
    std::vector<std::vector<std::size_t>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i) nbrs[i].push_back(i);
    for (const auto& [a, b] : g.edges) {
        nbrs[a].push_back(b);
        nbrs[b].push_back(a);
    }
    std::vector<double> deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& row = nbrs[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        deg[i] = static_cast<double>(row.size());
    }
    CsrMatrix adj;
    adj.rows = adj.cols = n;
    adj.row_offsets.reserve(n + 1);
    adj.row_offsets.push_back(0);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto j : nbrs[i]) {
            adj.col_indices.push_back(j);
            adj.values.push_back(1.0 / std::sqrt(deg[i] * deg[j]));
        }
        adj.row_offsets.push_back(adj.col_indices.size());
    }
    return adj;
}

SplitMasks planetoid_split(const AttributedGraph& g, SplitSizes sizes) {
    const std::size_t n = g.n_nodes();
    std::vector<std::size_t> taken_per_class(g.n_classes(), 0);
    std::vector<char> in_train(n, 0);
    SplitMasks masks;
    for (std::size_t i = 0; i < n; ++i) {
        auto& taken = taken_per_class[static_cast<std::size_t>(g.labels[i])];
        if (taken < sizes.train_per_class) {
            ++taken;
            in_train[i] = 1;
            masks.train.push_back(i);
        }
    }
    for (std::size_t c = 0; c < g.n_classes(); ++c)
        if (taken_per_class[c] < sizes.train_per_class)
            throw DimensionError(fmt::format("planetoid_split: class '{}' has {} nodes, need {}", g.class_names[c],
                                             taken_per_class[c], sizes.train_per_class));
    for (std::size_t i = 0; i < n; ++i) {
        if (in_train[i]) continue;
        if (masks.val.size() < sizes.val)
            masks.val.push_back(i);
        else if (masks.test.size() < sizes.test)
            masks.test.push_back(i);
    }
    return masks;
}

SplitMasks load_split_json(const std::filesystem::path& path, std::size_t n_nodes) {
    std::ifstream in(path);
    if (!in) throw ParseError(fmt::format("cannot open {}", path.string()));
    SplitMasks masks;
    try {
        const auto j = nlohmann::json::parse(in);
        masks.train = j.at("train").get<std::vector<std::size_t>>();
        masks.val = j.value("val", std::vector<std::size_t>{});
        masks.test = j.value("test", std::vector<std::size_t>{});
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
    masks.validate(n_nodes);
    return masks;
}

Standardizer Standardizer::fit(const DenseMatrix& x, const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw DimensionError("Standardizer::fit: no rows");
    const std::size_t d = x.cols();
    Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    const double n = static_cast<double>(rows.size());
    for (auto r : rows)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += x(r, j);
    for (auto& m : s.mean) m /= n;
    std::vector<double> var(d, 0.0);
    for (auto r : rows)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = x(r, j) - s.mean[j];
            var[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) s.inv_std[j] = 1.0 / std::sqrt(var[j] / n + kEpsilon);
    return s;
}

DenseMatrix Standardizer::apply(const DenseMatrix& x) const {
    if (x.cols() != mean.size()) throw DimensionError("Standardizer::apply: feature count mismatch");
    DenseMatrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) * inv_std[j];
    return out;
}

DenseMatrix standardize_features(const AttributedGraph& g, const SplitMasks& masks) {
    return Standardizer::fit(g.features, masks.train).apply(g.features);
}

AttributedGraph synth_graph(const SynthSpec& spec) {
    if (spec.classes == 0 || spec.n_per_class == 0 || spec.features == 0)
        throw DimensionError("synth_graph: classes, n_per_class and features must be positive");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::size_t n = spec.n_per_class * spec.classes;
    DenseMatrix centroids(spec.classes, spec.features);
    for (auto& v : centroids.values()) v = spec.separation * normal(rng);

    AttributedGraph g;
    g.features = DenseMatrix(n, spec.features);
    for (std::size_t c = 0; c < spec.classes; ++c) g.class_names.push_back(fmt::format("class_{}", c));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % spec.classes;
        g.labels.push_back(static_cast<int>(c));
        g.node_ids.push_back(fmt::format("n{}", i));
        for (std::size_t j = 0; j < spec.features; ++j) g.features(i, j) = centroids(c, j) + normal(rng);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = (i % spec.classes == j % spec.classes) ? spec.intra_p : spec.inter_p;
            if (unit(rng) < p) g.edges.emplace_back(i, j);
        }
    return g;
}

}  // namespace bigcn
