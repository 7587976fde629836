#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ccs/jsonutil.hpp"
#include "ccs/model.hpp"
#include "ccs/training.hpp"

namespace ccs {

// Embedding width for a categorical feature with K distinct values:
// 2 * ceil(log2 K). The K = 1 degenerate case returns 2 so a constant
// feature still contributes a learned bias.
inline std::size_t embedding_dim(std::size_t k) {
    if (k == 0) throw InvalidArgument("embedding_dim: empty vocabulary");
    if (k == 1) return 2;
    return 2 * static_cast<std::size_t>(std::bit_width(k - 1));
}

struct EmbedNetConfig {
    std::size_t hidden = 128;
    std::size_t blocks = 5; // paper-fidelity default; override knowingly
    double lr = 1e-3;
    std::size_t batch = 256;
    std::size_t epochs = 300;

    nlohmann::ordered_json to_json() const {
        return {{"hidden", hidden}, {"blocks", blocks}, {"lr", lr}, {"batch", batch}, {"epochs", epochs}};
    }

    static EmbedNetConfig from_json(const nlohmann::json& j) {
        require_known_keys(j, {"hidden", "blocks", "lr", "batch", "epochs"}, "embednet config");
        EmbedNetConfig c;
        maybe_get(j, "hidden", c.hidden);
        maybe_get(j, "blocks", c.blocks);
        maybe_get(j, "lr", c.lr);
        maybe_get(j, "batch", c.batch);
        maybe_get(j, "epochs", c.epochs);
        if (c.hidden == 0 || c.blocks == 0) throw ConfigError("embednet config: hidden and blocks must be >= 1");
        return c;
    }
};

// Embedding-based regression network: one embedding table per categorical
// feature (rows gathered by index), concatenated with the standardized
// numeric inputs into a unified vector, an input LayerNorm, a stack of
// hidden blocks of linear -> LayerNorm -> GELU, and a linear -> ReLU head so
// predictions are never negative.
class EmbedNet : public Model {
public:
    static constexpr double kLayerNormEps = 1e-5;

    explicit EmbedNet(EmbedNetConfig cfg = {}) : cfg_(cfg) {}

    ModelKind kind() const override { return ModelKind::embednet; }

    std::size_t unified_width() const { return unified_width_; }
    const EmbedNetConfig& config() const { return cfg_; }
    nd::ParamStore& params() { return store_; }
    const nd::ParamStore& params() const { return store_; }
    const StandardizationStats& stats() const { return stats_; }
    std::uint64_t schema_hash() const { return schema_hash_; }
    const std::vector<EpochLoss>& loss_history() const override { return history_; }

    // Embeddings are initialized U[-1, 1]; linear layers Kaiming-uniform with
    // zero bias; LayerNorm scale 1 shift 0.
    void init(const FeatureSchema& schema, std::uint64_t seed) {
        store_ = nd::ParamStore();
        embeddings_.clear();
        blocks_.clear();
        Rng rng(seed);

        cat_dims_.clear();
        std::size_t width = schema.num_count();
        for (const auto& cat : schema.categorical) {
            const std::size_t d = embedding_dim(cat.cardinality());
            cat_dims_.push_back(d);
            width += d;
            embeddings_.push_back(&store_.create(nd::uniform_init({cat.cardinality(), d}, -1.0, 1.0, rng)));
        }
        unified_width_ = width;

        ln_in_gamma_ = &store_.create(nd::Tensor::full({width}, 1.0));
        ln_in_beta_ = &store_.create(nd::Tensor::zeros({width}));

        std::size_t in = width;
        for (std::size_t b = 0; b < cfg_.blocks; ++b) {
            Block blk;
            blk.weight = &store_.create(nd::kaiming_uniform({in, cfg_.hidden}, in, rng));
            blk.bias = &store_.create(nd::Tensor::zeros({cfg_.hidden}));
            blk.gamma = &store_.create(nd::Tensor::full({cfg_.hidden}, 1.0));
            blk.beta = &store_.create(nd::Tensor::zeros({cfg_.hidden}));
            blocks_.push_back(blk);
            in = cfg_.hidden;
        }
        head_weight_ = &store_.create(nd::kaiming_uniform({in, 1}, in, rng));
        head_bias_ = &store_.create(nd::Tensor::zeros({1}));
    }

    // Records the forward pass for the given rows; returns predictions in
    // ksi, shape [m x 1]. Numeric inputs must already be standardized.
    nd::Tape::NodeId record_forward(nd::Tape& tape, const EncodedDataset& std_rows,
                                    std::span<const std::size_t> rows) const {
        const std::size_t pn = std_rows.schema->num_count();
        const std::size_t pc = std_rows.schema->cat_count();

        nd::Tensor numeric = nd::Tensor::zeros({rows.size(), pn});
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < pn; ++j) numeric.data[i * pn + j] = std_rows.num_at(rows[i], j);

        std::vector<nd::Tape::NodeId> parts;
        parts.push_back(tape.constant(std::move(numeric)));
        for (std::size_t c = 0; c < pc; ++c) {
            std::vector<std::size_t> idx(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) idx[i] = std_rows.cat_at(rows[i], c);
            parts.push_back(tape.embedding_lookup(tape.param(*embeddings_[c]), std::move(idx)));
        }
        auto x = tape.concat_cols(parts);
        x = tape.layer_norm(x, tape.param(*ln_in_gamma_), tape.param(*ln_in_beta_), kLayerNormEps);
        for (const Block& blk : blocks_) {
            x = tape.add_rowvec(tape.matmul(x, tape.param(*blk.weight)), tape.param(*blk.bias));
            x = tape.layer_norm(x, tape.param(*blk.gamma), tape.param(*blk.beta), kLayerNormEps);
            x = tape.gelu(x);
        }
        x = tape.add_rowvec(tape.matmul(x, tape.param(*head_weight_)), tape.param(*head_bias_));
        return tape.relu(x);
    }

    nd::Tape::NodeId record_loss(nd::Tape& tape, const EncodedDataset& std_rows,
                                 std::span<const std::size_t> rows) const {
        const auto pred = record_forward(tape, std_rows, rows);
        nd::Tensor target = nd::Tensor::zeros({rows.size(), 1});
        for (std::size_t i = 0; i < rows.size(); ++i) target[i] = std_rows.target[rows[i]] * kTargetScale;
        return tape.mse_loss(pred, target);
    }

    void fit(const EncodedDataset& train, std::uint64_t seed) override {
        stats_ = fit_standardize(train);
        const EncodedDataset std_train = apply_standardize(train, stats_);
        init(*train.schema, mix_seed(seed, 0x11));
        history_ = run_training(
            store_, {cfg_.lr, cfg_.batch, cfg_.epochs}, train.n, mix_seed(seed, 0x22),
            [&](nd::Tape& tape, std::span<const std::size_t> rows) { return record_loss(tape, std_train, rows); },
            [&](std::span<const std::size_t> rows) {
                nd::Tape tape;
                const auto loss = record_loss(tape, std_train, rows);
                return tape.value(loss)[0];
            });
        schema_hash_ = train.schema->hash();
    }

    std::vector<double> predict(const EncodedDataset& rows) const override {
        require_fitted_schema(rows, schema_hash_);
        const EncodedDataset std_rows = apply_standardize(rows, stats_);
        std::vector<double> out;
        out.reserve(rows.n);
        constexpr std::size_t kChunk = 8192;
        std::vector<std::size_t> idx;
        for (std::size_t start = 0; start < rows.n; start += kChunk) {
            const std::size_t len = std::min(kChunk, rows.n - start);
            idx.resize(len);
            std::iota(idx.begin(), idx.end(), start);
            nd::Tape tape;
            const auto pred = record_forward(tape, std_rows, idx);
            for (std::size_t i = 0; i < len; ++i) out.push_back(tape.value(pred)[i] / kTargetScale);
        }
        return out;
    }

    // Serialization support.
    void restore(const FeatureSchema& schema, StandardizationStats stats, std::vector<nd::Tensor> values,
                 std::uint64_t schema_hash) {
        init(schema, 0);
        store_.restore_values(values);
        stats_ = std::move(stats);
        schema_hash_ = schema_hash;
    }

private:
    struct Block {
        nd::Parameter* weight = nullptr;
        nd::Parameter* bias = nullptr;
        nd::Parameter* gamma = nullptr;
        nd::Parameter* beta = nullptr;
    };

    EmbedNetConfig cfg_;
    nd::ParamStore store_;
    std::vector<nd::Parameter*> embeddings_;
    nd::Parameter* ln_in_gamma_ = nullptr;
    nd::Parameter* ln_in_beta_ = nullptr;
    std::vector<Block> blocks_;
    nd::Parameter* head_weight_ = nullptr;
    nd::Parameter* head_bias_ = nullptr;
    std::vector<std::size_t> cat_dims_;
    std::size_t unified_width_ = 0;
    StandardizationStats stats_;
    std::vector<EpochLoss> history_;
    std::uint64_t schema_hash_ = 0;
};

} // namespace ccs
