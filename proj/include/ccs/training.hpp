#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "ccs/model.hpp"
#include "ccs/optim.hpp"
#include "ccs/rng.hpp"
#include "ccs/tape.hpp"

namespace ccs {

// Targets are scaled to ksi during training so MSE magnitudes sit in a range
// where the Adam defaults are well conditioned. Predictions are returned in
// psi.
inline constexpr double kTargetScale = 1.0 / 1000.0;

struct TrainSchedule {
    double lr = 1e-3;
    std::size_t batch = 256;
    std::size_t epochs = 300;
};

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i-- > 1;) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(idx[i], idx[j]);
    }
}

} // namespace detail

// Mini-batch Adam loop shared by both neural architectures: a 10% validation
// slice is carved from the training split, rows are reshuffled every epoch,
// and the parameters from the epoch with the best validation MSE are
// restored at the end. Deterministic in (schedule, seed).
//
// build_loss records the forward pass and MSE loss for a batch on the given
// tape; eval_mse computes the loss value for arbitrary rows without touching
// gradients.
inline std::vector<EpochLoss> run_training(
    nd::ParamStore& store, const TrainSchedule& sched, std::size_t n_rows, std::uint64_t seed,
    const std::function<nd::Tape::NodeId(nd::Tape&, std::span<const std::size_t>)>& build_loss,
    const std::function<double(std::span<const std::size_t>)>& eval_mse) {
    if (n_rows == 0) throw InvalidArgument("train: empty training set");
    if (sched.batch == 0) throw ConfigError("train: batch size must be >= 1");

    std::vector<EpochLoss> history;
    if (sched.epochs == 0) return history;

    Rng rng(seed);
    std::vector<std::size_t> all(n_rows);
    std::iota(all.begin(), all.end(), 0);
    detail::shuffle_indices(all, rng);
    const std::size_t val_n = n_rows >= 10 ? n_rows / 10 : (n_rows >= 2 ? 1 : 0);
    const std::vector<std::size_t> val_rows(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(val_n));
    std::vector<std::size_t> train_rows(all.begin() + static_cast<std::ptrdiff_t>(val_n), all.end());

    nd::Adam adam({sched.lr, 0.9, 0.999, 1e-8});
    const std::vector<nd::Parameter*> params = store.all();

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<nd::Tensor> best_values;

    for (std::size_t epoch = 1; epoch <= sched.epochs; ++epoch) {
        detail::shuffle_indices(train_rows, rng);
        double sq_sum = 0.0;
        for (std::size_t start = 0; start < train_rows.size(); start += sched.batch) {
            const std::size_t len = std::min(sched.batch, train_rows.size() - start);
            const std::span<const std::size_t> batch(train_rows.data() + start, len);
            double loss_value = 0.0;
            try {
                nd::Tape tape;
                store.zero_grad();
                const auto loss = build_loss(tape, batch);
                loss_value = tape.value(loss)[0];
                tape.backward(loss);
            } catch (const NumericError& e) {
                throw TrainingDiverged(epoch, "training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
            }
            if (!std::isfinite(loss_value)) {
                throw TrainingDiverged(epoch, "training loss became non-finite at epoch " + std::to_string(epoch));
            }
            adam.step(params);
            sq_sum += loss_value * static_cast<double>(len);
        }
        const double train_mse = sq_sum / static_cast<double>(train_rows.size());
        double val_mse = std::numeric_limits<double>::quiet_NaN();
        if (!val_rows.empty()) {
            val_mse = eval_mse(val_rows);
            if (val_mse < best_val) {
                best_val = val_mse;
                best_values = store.snapshot_values();
            }
        }
        history.push_back({epoch, train_mse, val_mse});
    }
    if (!best_values.empty()) store.restore_values(best_values);
    return history;
}

} // namespace ccs
