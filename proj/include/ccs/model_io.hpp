#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccs/comparison.hpp"

namespace ccs {

// Binary model container. All integers and floats are little-endian; float
// payloads are flat 64-bit arrays behind a shape directory, tree payloads a
// length-prefixed node encoding, so containers round-trip bit-exactly and
// are portable across platforms.
//
//   magic "CCSM" | version u32 | kind u8 | schema_hash u64 | seed u64
//   schema snapshot (length-prefixed canonical JSON)
//   standardization stats (flag u8, then mean/std arrays)
//   model config (length-prefixed canonical JSON)
//   payload (per kind)
inline constexpr char kContainerMagic[4] = {'C', 'C', 'S', 'M'};
inline constexpr std::uint32_t kContainerVersion = 1;

namespace detail {

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(const std::string& s) {
        u64(s.size());
        buf_.append(s);
    }
    void f64_array(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    const std::string& buffer() const { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::string data) : data_(std::move(data)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string bytes() {
        const std::uint64_t len = u64();
        need(len);
        std::string out = data_.substr(pos_, len);
        pos_ += len;
        return out;
    }
    std::vector<double> f64_array() {
        const std::uint64_t len = u64();
        std::vector<double> out(len);
        for (auto& x : out) x = f64();
        return out;
    }
    bool exhausted() const { return pos_ == data_.size(); }

private:
    void need(std::uint64_t n) {
        if (pos_ + n > data_.size()) throw FormatError("model container: truncated data");
    }
    std::string data_;
    std::size_t pos_ = 0;
};

// ---- named tensor directory (linear + neural payloads) ----

inline void write_tensor(ByteWriter& w, const nd::Tensor& t) {
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.u64(d);
    for (double v : t.data) w.f64(v);
}

inline nd::Tensor read_tensor(ByteReader& r) {
    const std::uint32_t rank = r.u32();
    if (rank > 4) throw FormatError("model container: implausible tensor rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = r.u64();
    const std::size_t n = nd::Tensor::numel_of(shape);
    std::vector<double> data(n);
    for (auto& v : data) v = r.f64();
    return nd::Tensor(std::move(shape), std::move(data));
}

inline void write_tensor_directory(ByteWriter& w, const std::vector<const nd::Parameter*>& params) {
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const nd::Parameter* p : params) write_tensor(w, p->value);
}

inline std::vector<nd::Tensor> read_tensor_directory(ByteReader& r) {
    const std::uint32_t count = r.u32();
    std::vector<nd::Tensor> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) out.push_back(read_tensor(r));
    return out;
}

// ---- tree payloads ----

inline void write_nodes(ByteWriter& w, const std::vector<TreeNode>& nodes) {
    w.u64(nodes.size());
    for (const TreeNode& n : nodes) {
        w.u8(n.is_leaf ? 1 : 0);
        if (n.is_leaf) {
            w.f64(n.prediction);
            w.u64(n.count);
        } else {
            w.u32(static_cast<std::uint32_t>(n.rule.feature));
            w.u8(n.rule.categorical ? 1 : 0);
            w.f64(n.rule.threshold);
            w.u64(n.rule.category);
            w.u64(n.left);
            w.u64(n.right);
            w.f64(n.prediction);
            w.u64(n.count);
        }
    }
}

inline std::vector<TreeNode> read_nodes(ByteReader& r) {
    const std::uint64_t count = r.u64();
    std::vector<TreeNode> out(count);
    for (auto& n : out) {
        n.is_leaf = r.u8() != 0;
        if (n.is_leaf) {
            n.prediction = r.f64();
            n.count = r.u64();
        } else {
            n.rule.feature = r.u32();
            n.rule.categorical = r.u8() != 0;
            n.rule.threshold = r.f64();
            n.rule.category = r.u64();
            n.left = r.u64();
            n.right = r.u64();
            n.prediction = r.f64();
            n.count = r.u64();
        }
    }
    return out;
}

inline void write_stats(ByteWriter& w, const StandardizationStats* stats) {
    if (!stats) {
        w.u8(0);
        return;
    }
    w.u8(1);
    w.f64_array(stats->mean);
    w.f64_array(stats->stddev);
}

inline std::optional<StandardizationStats> read_stats(ByteReader& r) {
    if (r.u8() == 0) return std::nullopt;
    StandardizationStats s;
    s.mean = r.f64_array();
    s.stddev = r.f64_array();
    return s;
}

} // namespace detail

struct ModelContainer {
    ModelKind kind = ModelKind::linear;
    std::uint64_t schema_hash = 0;
    std::uint64_t seed = 0;
    FeatureSchema schema;
    std::optional<StandardizationStats> stats;
    std::unique_ptr<Model> model;
};

inline std::string serialize_model(const Model& model, const FeatureSchema& schema, std::uint64_t seed) {
    detail::ByteWriter w;
    w.u8(static_cast<std::uint8_t>(kContainerMagic[0]));
    w.u8(static_cast<std::uint8_t>(kContainerMagic[1]));
    w.u8(static_cast<std::uint8_t>(kContainerMagic[2]));
    w.u8(static_cast<std::uint8_t>(kContainerMagic[3]));
    w.u32(kContainerVersion);
    w.u8(static_cast<std::uint8_t>(model.kind()));
    w.u64(schema.hash());
    w.u64(seed);
    w.bytes(schema.to_json().dump());

    switch (model.kind()) {
        case ModelKind::linear: {
            const auto& m = dynamic_cast<const LinearModel&>(model);
            detail::write_stats(w, nullptr);
            w.bytes(m.config().to_json().dump());
            w.f64_array(m.coefficients());
            w.f64(m.intercept());
            w.f64_array(m.column_mean());
            w.f64_array(m.column_stddev());
            break;
        }
        case ModelKind::tree: {
            const auto& m = dynamic_cast<const DecisionTree&>(model);
            detail::write_stats(w, nullptr);
            w.bytes(m.config().to_json().dump());
            detail::write_nodes(w, m.nodes());
            w.f64_array(m.raw_importance());
            break;
        }
        case ModelKind::forest: {
            const auto& m = dynamic_cast<const RandomForest&>(model);
            detail::write_stats(w, nullptr);
            w.bytes(m.config().to_json().dump());
            w.u64(m.trees().size());
            for (std::uint64_t s : m.tree_seeds()) w.u64(s);
            for (std::size_t t = 0; t < m.trees().size(); ++t) {
                detail::write_nodes(w, m.trees()[t]);
                w.f64_array(m.tree_importance()[t]);
            }
            break;
        }
        case ModelKind::transformer: {
            const auto& m = dynamic_cast<const TabTransformer&>(model);
            detail::write_stats(w, &m.stats());
            w.bytes(m.config().to_json().dump());
            detail::write_tensor_directory(w, m.params().all());
            break;
        }
        case ModelKind::embednet: {
            const auto& m = dynamic_cast<const EmbedNet&>(model);
            detail::write_stats(w, &m.stats());
            w.bytes(m.config().to_json().dump());
            detail::write_tensor_directory(w, m.params().all());
            break;
        }
    }
    return w.buffer();
}

inline ModelContainer deserialize_model(std::string bytes) {
    detail::ByteReader r(std::move(bytes));
    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.u8());
    if (std::memcmp(magic, kContainerMagic, 4) != 0) {
        throw FormatError("model container: bad magic bytes");
    }
    const std::uint32_t version = r.u32();
    if (version != kContainerVersion) {
        throw FormatError("model container: unsupported format version " + std::to_string(version));
    }
    ModelContainer c;
    const std::uint8_t kind_byte = r.u8();
    if (kind_byte > static_cast<std::uint8_t>(ModelKind::embednet)) {
        throw FormatError("model container: unknown model kind byte");
    }
    c.kind = static_cast<ModelKind>(kind_byte);
    c.schema_hash = r.u64();
    c.seed = r.u64();
    try {
        c.schema = FeatureSchema::from_json(nlohmann::json::parse(r.bytes()));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model container: bad schema snapshot: ") + e.what());
    }
    if (c.schema.hash() != c.schema_hash) {
        throw FormatError("model container: schema hash does not match embedded schema");
    }
    c.stats = detail::read_stats(r);
    const std::string config_json = r.bytes();

    auto parse_cfg = [&](auto parser) {
        try {
            return parser(nlohmann::json::parse(config_json));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("model container: bad config blob: ") + e.what());
        }
    };

    switch (c.kind) {
        case ModelKind::linear: {
            auto m = std::make_unique<LinearModel>(parse_cfg(LinearConfig::from_json));
            std::vector<double> coeffs = r.f64_array();
            const double intercept = r.f64();
            std::vector<double> mean = r.f64_array();
            std::vector<double> std = r.f64_array();
            m->restore(std::move(coeffs), intercept, std::move(mean), std::move(std), c.schema_hash, c.schema);
            c.model = std::move(m);
            break;
        }
        case ModelKind::tree: {
            auto m = std::make_unique<DecisionTree>(parse_cfg(TreeConfig::from_json));
            auto nodes = detail::read_nodes(r);
            auto importance = r.f64_array();
            m->restore(std::move(nodes), std::move(importance), c.schema_hash);
            c.model = std::move(m);
            break;
        }
        case ModelKind::forest: {
            auto m = std::make_unique<RandomForest>(parse_cfg(ForestConfig::from_json));
            const std::uint64_t n_trees = r.u64();
            std::vector<std::uint64_t> seeds(n_trees);
            for (auto& s : seeds) s = r.u64();
            std::vector<std::vector<TreeNode>> trees(n_trees);
            std::vector<std::vector<double>> importance(n_trees);
            for (std::uint64_t t = 0; t < n_trees; ++t) {
                trees[t] = detail::read_nodes(r);
                importance[t] = r.f64_array();
            }
            m->restore(std::move(trees), std::move(importance), std::move(seeds), c.schema_hash,
                       c.schema.feature_count());
            c.model = std::move(m);
            break;
        }
        case ModelKind::transformer: {
            auto m = std::make_unique<TabTransformer>(parse_cfg(TransformerConfig::from_json));
            if (!c.stats) throw FormatError("model container: transformer payload missing standardization stats");
            m->restore(c.schema, *c.stats, detail::read_tensor_directory(r), c.schema_hash);
            c.model = std::move(m);
            break;
        }
        case ModelKind::embednet: {
            auto m = std::make_unique<EmbedNet>(parse_cfg(EmbedNetConfig::from_json));
            if (!c.stats) throw FormatError("model container: embednet payload missing standardization stats");
            m->restore(c.schema, *c.stats, detail::read_tensor_directory(r), c.schema_hash);
            c.model = std::move(m);
            break;
        }
    }
    if (!r.exhausted()) throw FormatError("model container: trailing bytes after payload");
    return c;
}

inline void save_model_file(const std::string& path, const Model& model, const FeatureSchema& schema,
                            std::uint64_t seed) {
    const std::string bytes = serialize_model(model, schema, seed);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to model file '" + path + "'");
}

inline ModelContainer load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(std::move(bytes));
}

} // namespace ccs
