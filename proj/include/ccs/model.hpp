#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccs/dataset.hpp"

namespace ccs {

enum class ModelKind : std::uint8_t { linear = 0, tree = 1, forest = 2, transformer = 3, embednet = 4 };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::linear, ModelKind::tree, ModelKind::forest,
                                               ModelKind::transformer, ModelKind::embednet};

inline std::string_view kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::linear: return "linear";
        case ModelKind::tree: return "tree";
        case ModelKind::forest: return "forest";
        case ModelKind::transformer: return "transformer";
        case ModelKind::embednet: return "embednet";
    }
    return "unknown";
}

inline std::string_view kind_display_name(ModelKind k) {
    switch (k) {
        case ModelKind::linear: return "Linear Regression";
        case ModelKind::tree: return "Decision Tree";
        case ModelKind::forest: return "Random Forest";
        case ModelKind::transformer: return "Transformer NN";
        case ModelKind::embednet: return "Embedding NN";
    }
    return "unknown";
}

inline std::optional<ModelKind> kind_from_name(std::string_view name) {
    for (ModelKind k : kAllModelKinds) {
        if (kind_name(k) == name) return k;
    }
    return std::nullopt;
}

struct EpochLoss {
    std::size_t epoch;
    double train_mse; // on 1/1000-scaled targets
    double val_mse;
};

// Shared behavioral contract: fit on an encoded training split, predict psi
// for conforming rows. predict is pure and validates the schema hash.
class Model {
public:
    virtual ~Model() = default;

    virtual ModelKind kind() const = 0;
    virtual void fit(const EncodedDataset& train, std::uint64_t seed) = 0;
    virtual std::vector<double> predict(const EncodedDataset& rows) const = 0;

    // Normalized per-original-feature importance, where the model family
    // defines one; std::nullopt otherwise (the harness substitutes
    // permutation importance).
    virtual std::optional<std::vector<double>> intrinsic_importance() const { return std::nullopt; }

    // Per-epoch losses for gradient-trained models; empty otherwise.
    virtual const std::vector<EpochLoss>& loss_history() const {
        static const std::vector<EpochLoss> empty;
        return empty;
    }

protected:
    void require_fitted_schema(const EncodedDataset& rows, std::uint64_t fitted_hash) const {
        if (fitted_hash == 0) throw InvalidArgument("model has not been fitted");
        if (rows.schema->hash() != fitted_hash) {
            throw SchemaError("dataset schema does not match the schema this model was fitted on");
        }
    }
};

} // namespace ccs
