#include "bigcn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

namespace bigcn {

namespace {

constexpr std::array<char, 4> kPackedMagic{'B', 'G', 'C', 'N'};
constexpr std::array<char, 4> kFullMagic{'B', 'G', 'C', 'F'};
constexpr std::uint16_t kFullVersion = 1;

class Writer {
public:
    void magic(const std::array<char, 4>& m) {
        for (char c : m) out_.push_back(static_cast<std::uint8_t>(c));
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::size_t v) {
        if (v > 0xffffffffu) throw DimensionError("checkpoint: dimension exceeds u32");
        put(v, 4);
    }
    void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

    void magic(const std::array<char, 4>& m) {
        const auto got = take(4);
        if (std::memcmp(got.data(), m.data(), 4) != 0)
            throw ParseError(fmt::format("bad magic, expected {}", std::string_view(m.data(), 4)));
    }
    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4))); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::span<const std::uint8_t> take(std::size_t n) {
        if (bytes_.size() - pos_ < n)
            throw ParseError(fmt::format("truncated file: need {} bytes at offset {}, {} left", n, pos_,
                                         bytes_.size() - pos_));
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    void expect_end() const {
        if (pos_ != bytes_.size()) throw ParseError(fmt::format("{} trailing bytes", bytes_.size() - pos_));
    }

private:
    std::uint64_t get(int n) {
        const auto s = take(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= std::uint64_t{s[static_cast<std::size_t>(i)]} << (8 * i);
        return v;
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::size_t layer_bit_bytes(std::size_t d_in, std::size_t d_out) { return (d_in * d_out + 7) / 8; }

void write_standardizer(Writer& w, const Standardizer& s) {
    w.u32(s.mean.size());
    for (double v : s.mean) w.f64(v);
    for (double v : s.inv_std) w.f64(v);
}

Standardizer read_standardizer(Reader& r) {
    const std::size_t d = r.u32();
    Standardizer s{std::vector<double>(d), std::vector<double>(d)};
    for (auto& v : s.mean) v = r.f64();
    for (auto& v : s.inv_std) v = r.f64();
    return s;
}

}  // namespace

std::size_t PackedModel::parameter_payload_bytes() const noexcept {
    std::size_t total = 0;
    for (const auto& l : layers) total += 4 * l.d_out() + layer_bit_bytes(l.d_in(), l.d_out());
    return total;
}

std::size_t PackedModel::header_bytes() const noexcept { return 4 + 2 + 4 + 8 * layers.size(); }

std::vector<std::size_t> PackedModel::layer_dims() const {
    std::vector<std::size_t> dims;
    if (layers.empty()) return dims;
    dims.push_back(layers.front().d_in());
    for (const auto& l : layers) dims.push_back(l.d_out());
    return dims;
}

PackedModel pack_model(const std::vector<LayerParams>& params, const Standardizer& standardizer) {
    PackedModel model;
    model.standardizer = standardizer;
    for (const auto& p : params) {
        auto sb = binarize_weight_columns(p.weight);
        PackedLayer layer;
        layer.alpha.reserve(sb.scales.size());
        for (double a : sb.scales) layer.alpha.push_back(static_cast<float>(a));
        layer.weight_columns = std::move(sb.bits);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

std::vector<std::uint8_t> serialize(const PackedModel& model) {
    Writer w;
    w.magic(kPackedMagic);
    w.u16(PackedModel::kVersion);
    w.u32(model.layers.size());
    for (const auto& l : model.layers) {
        w.u32(l.d_in());
        w.u32(l.d_out());
        for (float a : l.alpha) w.f32(a);
        std::vector<std::uint8_t> stream(layer_bit_bytes(l.d_in(), l.d_out()), 0);
        std::size_t bit = 0;
        for (std::size_t j = 0; j < l.d_out(); ++j)
            for (std::size_t i = 0; i < l.d_in(); ++i, ++bit)
                if (l.weight_columns.get(j, i)) stream[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
        w.bytes(stream);
    }
    write_standardizer(w, model.standardizer);
    return w.take();
}

PackedModel parse_packed_model(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.magic(kPackedMagic);
    if (const auto v = r.u16(); v != PackedModel::kVersion)
        throw ParseError(fmt::format("unsupported packed model version {}", v));
    const std::size_t count = r.u32();
    if (count == 0) throw ParseError("packed model has no layers");
    PackedModel model;
    for (std::size_t l = 0; l < count; ++l) {
        const std::size_t d_in = r.u32(), d_out = r.u32();
        if (d_in == 0 || d_out == 0) throw ParseError("packed model: zero layer dimension");
        if (!model.layers.empty() && model.layers.back().d_out() != d_in)
            throw ParseError(fmt::format("packed model: layer {} input {} does not chain", l, d_in));
        PackedLayer layer;
        layer.alpha.resize(d_out);
        for (auto& a : layer.alpha) a = r.f32();
        const auto stream = r.take(layer_bit_bytes(d_in, d_out));
        layer.weight_columns = BitMatrix(d_out, d_in);
        std::size_t bit = 0;
        for (std::size_t j = 0; j < d_out; ++j)
            for (std::size_t i = 0; i < d_in; ++i, ++bit)
                if ((stream[bit / 8] >> (bit % 8)) & 1u) layer.weight_columns.set(j, i, true);
        model.layers.push_back(std::move(layer));
    }
    model.standardizer = read_standardizer(r);
    if (model.standardizer.mean.size() != model.layers.front().d_in())
        throw ParseError("packed model: standardization width differs from input dimension");
    r.expect_end();
    return model;
}

std::vector<std::uint8_t> serialize(const TrainedModel& model) {
    Writer w;
    w.magic(kFullMagic);
    w.u16(kFullVersion);
    w.u8(static_cast<std::uint8_t>(model.config.mode));
    w.u32(model.params.size());
    for (auto d : model.config.layer_dims) w.u32(d);
    for (const auto& p : model.params)
        for (double v : p.weight.values()) w.f64(v);
    write_standardizer(w, model.standardizer);
    return w.take();
}

TrainedModel parse_trained_model(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.magic(kFullMagic);
    if (const auto v = r.u16(); v != kFullVersion) throw ParseError(fmt::format("unsupported checkpoint version {}", v));
    TrainedModel model;
    const auto mode = r.u8();
    if (mode > static_cast<std::uint8_t>(Mode::bin_both)) throw ParseError("checkpoint: unknown mode");
    model.config.mode = static_cast<Mode>(mode);
    const std::size_t count = r.u32();
    if (count == 0) throw ParseError("checkpoint has no layers");
    model.config.layer_dims.resize(count + 1);
    for (auto& d : model.config.layer_dims) {
        d = r.u32();
        if (d == 0) throw ParseError("checkpoint: zero layer dimension");
    }
    for (std::size_t l = 0; l < count; ++l) {
        const auto d_in = model.config.layer_dims[l], d_out = model.config.layer_dims[l + 1];
        LayerParams p{DenseMatrix(d_in, d_out), DenseMatrix(d_in, d_out), DenseMatrix(d_in, d_out)};
        for (auto& v : p.weight.values()) v = r.f64();
        model.params.push_back(std::move(p));
    }
    model.standardizer = read_standardizer(r);
    if (model.standardizer.mean.size() != model.config.layer_dims.front())
        throw ParseError("checkpoint: standardization width differs from input dimension");
    r.expect_end();
    return model;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(fmt::format("cannot open {}", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(fmt::format("cannot write {}", path.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ParseError(fmt::format("short write to {}", path.string()));
}

DenseMatrix infer_binary_logits(const DenseMatrix& raw_features, const CsrMatrix& adj, const PackedModel& model) {
    if (model.layers.empty()) throw DimensionError("infer_binary: model has no layers");
    if (raw_features.cols() != model.layers.front().d_in())
        throw DimensionError(fmt::format("infer_binary: model expects {} features, dataset has {}",
                                         model.layers.front().d_in(), raw_features.cols()));
    if (raw_features.rows() != adj.rows) throw DimensionError("infer_binary: feature rows differ from adjacency");
    DenseMatrix h = model.standardizer.apply(raw_features);
    for (const auto& layer : model.layers) {
        const auto fb = binarize_feature_rows(h);
        const std::vector<double> alpha(layer.alpha.begin(), layer.alpha.end());
        h = csr_dense_matmul(adj, binary_matmul(fb.bits, fb.scales, layer.weight_columns, alpha));
    }
    return h;
}

std::vector<int> infer_binary(const AttributedGraph& graph, const PackedModel& model) {
    return argmax_rows(infer_binary_logits(graph.features, normalize_adjacency(graph), model));
}

}  // namespace bigcn
