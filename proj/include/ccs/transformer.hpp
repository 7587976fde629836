#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ccs/jsonutil.hpp"
#include "ccs/model.hpp"
#include "ccs/training.hpp"

namespace ccs {

struct TransformerConfig {
    std::size_t d_model = 64;
    std::size_t heads = 4;
    std::size_t layers = 2;
    std::size_t ff = 0; // 0 = 4 * d_model
    double lr = 1e-3;
    std::size_t batch = 256;
    std::size_t epochs = 60;

    std::size_t resolve_ff() const { return ff == 0 ? 4 * d_model : ff; }

    void validate() const {
        if (d_model == 0 || heads == 0 || layers == 0) {
            throw ConfigError("transformer config: d_model, heads and layers must be >= 1");
        }
        if (d_model % heads != 0) throw ConfigError("transformer config: d_model must be divisible by heads");
    }

    nlohmann::ordered_json to_json() const {
        return {{"d_model", d_model}, {"heads", heads}, {"layers", layers}, {"ff", ff},
                {"lr", lr},           {"batch", batch}, {"epochs", epochs}};
    }

    static TransformerConfig from_json(const nlohmann::json& j) {
        require_known_keys(j, {"d_model", "heads", "layers", "ff", "lr", "batch", "epochs"}, "transformer config");
        TransformerConfig c;
        maybe_get(j, "d_model", c.d_model);
        maybe_get(j, "heads", c.heads);
        maybe_get(j, "layers", c.layers);
        maybe_get(j, "ff", c.ff);
        maybe_get(j, "lr", c.lr);
        maybe_get(j, "batch", c.batch);
        maybe_get(j, "epochs", c.epochs);
        c.validate();
        return c;
    }
};

// Encoder-style attention model over tabular rows. Each original feature
// becomes one token: numeric scalars and one-hot categorical groups are
// mapped to d_model through their own learned affine projection (no
// embedding tables; categoricals stay one-hot), and a learned per-token
// feature-identity vector replaces positional encodings since column order
// carries no meaning. Encoder layers are post-norm: self-attention,
// residual + LayerNorm, position-wise feed-forward, residual + LayerNorm.
// Tokens are mean-pooled into a linear regression head.
class TabTransformer : public Model {
public:
    static constexpr double kLayerNormEps = 1e-5;

    explicit TabTransformer(TransformerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    ModelKind kind() const override { return ModelKind::transformer; }

    const TransformerConfig& config() const { return cfg_; }
    nd::ParamStore& params() { return store_; }
    const nd::ParamStore& params() const { return store_; }
    const StandardizationStats& stats() const { return stats_; }
    std::uint64_t schema_hash() const { return schema_hash_; }
    std::size_t token_count() const { return token_widths_.size(); }
    const std::vector<EpochLoss>& loss_history() const override { return history_; }

    void init(const FeatureSchema& schema, std::uint64_t seed) {
        store_ = nd::ParamStore();
        projections_.clear();
        layers_.clear();
        Rng rng(seed);
        const std::size_t d = cfg_.d_model;
        const std::size_t dh = d / cfg_.heads;
        const std::size_t ff = cfg_.resolve_ff();

        token_widths_.clear();
        for (std::size_t j = 0; j < schema.num_count(); ++j) token_widths_.push_back(1);
        for (const auto& cat : schema.categorical) token_widths_.push_back(cat.cardinality());

        for (std::size_t w : token_widths_) {
            Affine proj;
            proj.weight = &store_.create(nd::kaiming_uniform({w, d}, w, rng));
            proj.bias = &store_.create(nd::Tensor::zeros({d}));
            projections_.push_back(proj);
        }
        identity_ = &store_.create(nd::uniform_init({token_widths_.size(), d}, -1.0, 1.0, rng));

        for (std::size_t l = 0; l < cfg_.layers; ++l) {
            Layer layer;
            for (std::size_t h = 0; h < cfg_.heads; ++h) {
                HeadParams head;
                head.wq = &store_.create(nd::kaiming_uniform({d, dh}, d, rng));
                head.bq = &store_.create(nd::Tensor::zeros({dh}));
                head.wk = &store_.create(nd::kaiming_uniform({d, dh}, d, rng));
                head.bk = &store_.create(nd::Tensor::zeros({dh}));
                head.wv = &store_.create(nd::kaiming_uniform({d, dh}, d, rng));
                head.bv = &store_.create(nd::Tensor::zeros({dh}));
                layer.heads.push_back(head);
            }
            layer.wo = &store_.create(nd::kaiming_uniform({d, d}, d, rng));
            layer.bo = &store_.create(nd::Tensor::zeros({d}));
            layer.ln1_gamma = &store_.create(nd::Tensor::full({d}, 1.0));
            layer.ln1_beta = &store_.create(nd::Tensor::zeros({d}));
            layer.w1 = &store_.create(nd::kaiming_uniform({d, ff}, d, rng));
            layer.b1 = &store_.create(nd::Tensor::zeros({ff}));
            layer.w2 = &store_.create(nd::kaiming_uniform({ff, d}, ff, rng));
            layer.b2 = &store_.create(nd::Tensor::zeros({d}));
            layer.ln2_gamma = &store_.create(nd::Tensor::full({d}, 1.0));
            layer.ln2_beta = &store_.create(nd::Tensor::zeros({d}));
            layers_.push_back(layer);
        }
        head_weight_ = &store_.create(nd::kaiming_uniform({d, 1}, d, rng));
        head_bias_ = &store_.create(nd::Tensor::zeros({1}));
    }

    // Debug hook: when non-null, receives each layer's per-head attention
    // probability matrix ([m*T x T], rows sum to 1).
    struct AttentionCapture {
        std::vector<nd::Tensor> matrices;
    };

    // Predictions in ksi, shape [m x 1]. Numeric inputs must be standardized.
    nd::Tape::NodeId record_forward(nd::Tape& tape, const EncodedDataset& std_rows,
                                    std::span<const std::size_t> rows, AttentionCapture* capture = nullptr) const {
        const std::size_t m = rows.size();
        const std::size_t pn = std_rows.schema->num_count();
        const std::size_t t_count = token_widths_.size();
        const std::size_t d = cfg_.d_model;
        const std::size_t dh = d / cfg_.heads;

        // One token per original feature, all projected to d_model.
        std::vector<nd::Tape::NodeId> tokens;
        for (std::size_t f = 0; f < t_count; ++f) {
            nd::Tensor block = nd::Tensor::zeros({m, token_widths_[f]});
            if (f < pn) {
                for (std::size_t i = 0; i < m; ++i) block.data[i] = std_rows.num_at(rows[i], f);
            } else {
                const std::size_t c = f - pn;
                for (std::size_t i = 0; i < m; ++i) block.data[i * token_widths_[f] + std_rows.cat_at(rows[i], c)] = 1.0;
            }
            tokens.push_back(
                tape.add_rowvec(tape.matmul(tape.constant(std::move(block)), tape.param(*projections_[f].weight)),
                                tape.param(*projections_[f].bias)));
        }
        // [m x T*d] concat has exactly the [m*T x d] sample-major layout.
        auto x = tape.reshape(tape.concat_cols(tokens), {m * t_count, d});
        std::vector<std::size_t> ident_idx(m * t_count);
        for (std::size_t i = 0; i < m * t_count; ++i) ident_idx[i] = i % t_count;
        x = tape.add(x, tape.embedding_lookup(tape.param(*identity_), std::move(ident_idx)));

        const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
        for (const Layer& layer : layers_) {
            std::vector<nd::Tape::NodeId> head_outputs;
            for (const HeadParams& head : layer.heads) {
                const auto q = tape.add_rowvec(tape.matmul(x, tape.param(*head.wq)), tape.param(*head.bq));
                const auto k = tape.add_rowvec(tape.matmul(x, tape.param(*head.wk)), tape.param(*head.bk));
                const auto v = tape.add_rowvec(tape.matmul(x, tape.param(*head.wv)), tape.param(*head.bv));
                const auto scores = tape.scale(tape.block_matmul_nt(q, k, t_count), inv_sqrt_dh);
                const auto probs = tape.softmax_rows(scores);
                if (capture) capture->matrices.push_back(tape.value(probs));
                head_outputs.push_back(tape.block_matmul_nn(probs, v, t_count));
            }
            const auto merged = tape.concat_cols(head_outputs);
            const auto attn = tape.add_rowvec(tape.matmul(merged, tape.param(*layer.wo)), tape.param(*layer.bo));
            x = tape.layer_norm(tape.add(x, attn), tape.param(*layer.ln1_gamma), tape.param(*layer.ln1_beta),
                                kLayerNormEps);
            auto ffn = tape.add_rowvec(tape.matmul(x, tape.param(*layer.w1)), tape.param(*layer.b1));
            ffn = tape.relu(ffn);
            ffn = tape.add_rowvec(tape.matmul(ffn, tape.param(*layer.w2)), tape.param(*layer.b2));
            x = tape.layer_norm(tape.add(x, ffn), tape.param(*layer.ln2_gamma), tape.param(*layer.ln2_beta),
                                kLayerNormEps);
        }
        const auto pooled = tape.mean_pool_rows(x, t_count);
        return tape.add_rowvec(tape.matmul(pooled, tape.param(*head_weight_)), tape.param(*head_bias_));
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
        constexpr std::size_t kChunk = 4096;
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

    void restore(const FeatureSchema& schema, StandardizationStats stats, std::vector<nd::Tensor> values,
                 std::uint64_t schema_hash) {
        init(schema, 0);
        store_.restore_values(values);
        stats_ = std::move(stats);
        schema_hash_ = schema_hash;
    }

private:
    struct Affine {
        nd::Parameter* weight = nullptr;
        nd::Parameter* bias = nullptr;
    };
    struct HeadParams {
        nd::Parameter* wq = nullptr;
        nd::Parameter* bq = nullptr;
        nd::Parameter* wk = nullptr;
        nd::Parameter* bk = nullptr;
        nd::Parameter* wv = nullptr;
        nd::Parameter* bv = nullptr;
    };
    struct Layer {
        std::vector<HeadParams> heads;
        nd::Parameter* wo = nullptr;
        nd::Parameter* bo = nullptr;
        nd::Parameter* ln1_gamma = nullptr;
        nd::Parameter* ln1_beta = nullptr;
        nd::Parameter* w1 = nullptr;
        nd::Parameter* b1 = nullptr;
        nd::Parameter* w2 = nullptr;
        nd::Parameter* b2 = nullptr;
        nd::Parameter* ln2_gamma = nullptr;
        nd::Parameter* ln2_beta = nullptr;
    };

    TransformerConfig cfg_;
    nd::ParamStore store_;
    std::vector<Affine> projections_;
    nd::Parameter* identity_ = nullptr;
    std::vector<Layer> layers_;
    nd::Parameter* head_weight_ = nullptr;
    nd::Parameter* head_bias_ = nullptr;
    std::vector<std::size_t> token_widths_;
    StandardizationStats stats_;
    std::vector<EpochLoss> history_;
    std::uint64_t schema_hash_ = 0;
};

} // namespace ccs
