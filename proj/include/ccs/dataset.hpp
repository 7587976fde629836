#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccs/csv.hpp"
#include "ccs/rng.hpp"
#include "ccs/schema.hpp"

namespace ccs {

// Encoded rows for one curing age. Immutable after construction; the numeric
// block, categorical index block and target vector always agree on row count.
struct EncodedDataset {
    std::shared_ptr<const FeatureSchema> schema;
    Age age = Age::d28;
    std::size_t n = 0;
    std::vector<double> numeric;         // n x p_num, row-major
    std::vector<std::size_t> categorical; // n x p_cat, row-major vocab indices
    std::vector<double> target;          // psi, strictly positive

    double num_at(std::size_t row, std::size_t j) const { return numeric[row * schema->num_count() + j]; }
    std::size_t cat_at(std::size_t row, std::size_t j) const { return categorical[row * schema->cat_count() + j]; }

    void validate() const {
        const std::size_t pn = schema->num_count(), pc = schema->cat_count();
        if (numeric.size() != n * pn || categorical.size() != n * pc || target.size() != n) {
            throw SchemaError("encoded dataset: block sizes disagree with row count");
        }
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < pc; ++j) {
                if (cat_at(r, j) >= schema->categorical[j].cardinality()) {
                    throw VocabError("encoded dataset: index " + std::to_string(cat_at(r, j)) +
                                     " out of range for '" + schema->categorical[j].name + "'");
                }
            }
            if (!(target[r] > 0.0)) {
                throw InvalidArgument("encoded dataset: target must be strictly positive, row " + std::to_string(r));
            }
        }
    }

    // Row subset in the given order.
    EncodedDataset take(const std::vector<std::size_t>& rows) const {
        const std::size_t pn = schema->num_count(), pc = schema->cat_count();
        EncodedDataset out;
        out.schema = schema;
        out.age = age;
        out.n = rows.size();
        out.numeric.reserve(rows.size() * pn);
        out.categorical.reserve(rows.size() * pc);
        out.target.reserve(rows.size());
        for (std::size_t r : rows) {
            for (std::size_t j = 0; j < pn; ++j) out.numeric.push_back(num_at(r, j));
            for (std::size_t j = 0; j < pc; ++j) out.categorical.push_back(cat_at(r, j));
            out.target.push_back(target[r]);
        }
        return out;
    }
};

// ---------------------------------------------------------------- splitting

struct SplitResult {
    EncodedDataset train;
    EncodedDataset test;
    std::vector<std::size_t> train_rows; // indices into the source dataset
    std::vector<std::size_t> test_rows;
};

// Uniform random permutation from the seed; first ceil(0.8*n) rows train,
// remainder test. Disjoint and exhaustive by construction.
inline SplitResult split_80_20(const EncodedDataset& ds, std::uint64_t seed) {
    if (ds.n < 5) {
        throw InvalidArgument("split_80_20: need at least 5 rows, got " + std::to_string(ds.n));
    }
    std::vector<std::size_t> perm(ds.n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    for (std::size_t i = ds.n; i-- > 1;) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(perm[i], perm[j]);
    }
    const std::size_t train_n = (4 * ds.n + 4) / 5; // ceil(0.8*n) in integer arithmetic
    SplitResult out;
    out.train_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(train_n));
    out.test_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(train_n), perm.end());
    out.train = ds.take(out.train_rows);
    out.test = ds.take(out.test_rows);
    return out;
}

// ----------------------------------------------------------- standardization

struct StandardizationStats {
    std::vector<double> mean;
    std::vector<double> stddev;

    nlohmann::ordered_json to_json() const { return {{"mean", mean}, {"stddev", stddev}}; }

    static StandardizationStats from_json(const nlohmann::json& j) {
        StandardizationStats s;
        s.mean = j.at("mean").get<std::vector<double>>();
        s.stddev = j.at("stddev").get<std::vector<double>>();
        return s;
    }
};

// Per-column mean/std over the training rows. Population std; constant
// columns are rejected.
inline StandardizationStats fit_standardize(const EncodedDataset& train) {
    const std::size_t pn = train.schema->num_count();
    if (train.n == 0) throw InvalidArgument("fit_standardize: empty dataset");
    StandardizationStats stats;
    stats.mean.assign(pn, 0.0);
    stats.stddev.assign(pn, 0.0);
    for (std::size_t j = 0; j < pn; ++j) {
        double mean = 0.0;
        for (std::size_t r = 0; r < train.n; ++r) mean += train.num_at(r, j);
        mean /= static_cast<double>(train.n);
        double var = 0.0;
        for (std::size_t r = 0; r < train.n; ++r) {
            const double d = train.num_at(r, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(train.n);
        const double sd = std::sqrt(var);
        if (!(sd > 0.0)) {
            throw InvalidArgument("fit_standardize: column '" + train.schema->numerical[j].name +
                                  "' is constant");
        }
        stats.mean[j] = mean;
        stats.stddev[j] = sd;
    }
    return stats;
}

inline EncodedDataset apply_standardize(const EncodedDataset& ds, const StandardizationStats& stats) {
    const std::size_t pn = ds.schema->num_count();
    if (stats.mean.size() != pn || stats.stddev.size() != pn) {
        throw SchemaError("apply_standardize: stats width does not match schema");
    }
    EncodedDataset out = ds;
    for (std::size_t r = 0; r < ds.n; ++r) {
        for (std::size_t j = 0; j < pn; ++j) {
            out.numeric[r * pn + j] = (ds.num_at(r, j) - stats.mean[j]) / stats.stddev[j];
        }
    }
    return out;
}

// ------------------------------------------------------------------ one-hot

// n x (p_num + sum K) row-major matrix: numeric block passed through, each
// categorical column expanded to K indicator columns.
inline std::vector<double> one_hot(const EncodedDataset& ds) {
    const std::size_t pn = ds.schema->num_count(), pc = ds.schema->cat_count();
    const std::size_t width = ds.schema->one_hot_width();
    std::vector<double> out(ds.n * width, 0.0);
    for (std::size_t r = 0; r < ds.n; ++r) {
        double* row = &out[r * width];
        for (std::size_t j = 0; j < pn; ++j) row[j] = ds.num_at(r, j);
        std::size_t off = pn;
        for (std::size_t j = 0; j < pc; ++j) {
            row[off + ds.cat_at(r, j)] = 1.0;
            off += ds.schema->categorical[j].cardinality();
        }
    }
    return out;
}

// Column offsets of each original feature inside the one-hot expansion:
// numeric features map to single columns, categorical features to K-wide
// groups.
struct OneHotLayout {
    std::vector<std::size_t> offset; // per original feature
    std::vector<std::size_t> width;  // per original feature
    std::size_t total = 0;

    OneHotLayout() = default;

    explicit OneHotLayout(const FeatureSchema& s) {
        std::size_t off = 0;
        for (std::size_t j = 0; j < s.num_count(); ++j) {
            offset.push_back(off);
            width.push_back(1);
            off += 1;
        }
        for (const auto& c : s.categorical) {
            offset.push_back(off);
            width.push_back(c.cardinality());
            off += c.cardinality();
        }
        total = off;
    }
};

// ---------------------------------------------------------------- CSV load

struct LoadOptions {
    bool extend_vocab = false;    // fit mode grows vocabularies; apply mode errors
    bool allow_empty = false;     // permit zero usable rows (header-only inputs)
    bool require_target = true;   // prediction inputs may omit the target column
    bool require_all_rows = false; // error instead of dropping malformed rows
};

struct LoadResult {
    EncodedDataset data;
    std::size_t dropped = 0;
};

// Ingest a CSV under the schema for one age. Rows with a missing or
// unparseable required field are dropped and counted.
inline LoadResult load_csv(const std::string& path, FeatureSchema& schema, Age age, LoadOptions opts = {}) {
    const csv::Table table = csv::read_file(path);
    const std::size_t pn = schema.num_count(), pc = schema.cat_count();

    std::vector<std::size_t> num_cols(pn), cat_cols(pc);
    for (std::size_t j = 0; j < pn; ++j) {
        auto col = table.column(schema.numerical[j].name);
        if (!col) throw SchemaError("CSV '" + path + "' is missing column '" + schema.numerical[j].name + "'");
        num_cols[j] = *col;
    }
    for (std::size_t j = 0; j < pc; ++j) {
        auto col = table.column(schema.categorical[j].name);
        if (!col) throw SchemaError("CSV '" + path + "' is missing column '" + schema.categorical[j].name + "'");
        cat_cols[j] = *col;
    }
    const std::string& target_name = schema.target_for(age);
    auto target_col = table.column(target_name);
    if (!target_col && opts.require_target) {
        throw SchemaError("CSV '" + path + "' is missing column '" + target_name + "'");
    }

    LoadResult out;
    out.data.age = age;
    std::vector<double> num_row(pn);
    std::vector<std::size_t> cat_row(pc);
    for (const auto& row : table.rows) {
        bool usable = row.size() == table.header.size();
        double tgt = 0.0;
        if (usable) {
            for (std::size_t j = 0; j < pn && usable; ++j) {
                auto v = csv::parse_double(row[num_cols[j]]);
                if (!v) usable = false;
                else num_row[j] = *v;
            }
            if (opts.require_target) {
                auto tv = csv::parse_double(row[*target_col]);
                if (!tv || !(*tv > 0.0)) usable = false;
                else tgt = *tv;
            } else {
                tgt = 1.0; // placeholder; prediction paths never read targets
            }
            for (std::size_t j = 0; j < pc && usable; ++j) {
                const std::string& value = row[cat_cols[j]];
                if (value.empty()) {
                    usable = false;
                    break;
                }
                auto idx = schema.categorical[j].index_of(value);
                if (!idx) {
                    if (!opts.extend_vocab) {
                        throw VocabError("value '" + value + "' for column '" + schema.categorical[j].name +
                                         "' is not in the fitted vocabulary");
                    }
                    schema.categorical[j].vocab.push_back(value);
                    idx = schema.categorical[j].cardinality() - 1;
                }
                cat_row[j] = *idx;
            }
        }
        if (!usable) {
            ++out.dropped;
            continue;
        }
        out.data.numeric.insert(out.data.numeric.end(), num_row.begin(), num_row.end());
        out.data.categorical.insert(out.data.categorical.end(), cat_row.begin(), cat_row.end());
        out.data.target.push_back(tgt);
        ++out.data.n;
    }
    if (out.data.n == 0 && !opts.allow_empty) {
        throw InvalidArgument("CSV '" + path + "' contains zero usable rows (" + std::to_string(out.dropped) +
                              " dropped)");
    }
    if (opts.require_all_rows && out.dropped > 0) {
        throw InvalidArgument("CSV '" + path + "': " + std::to_string(out.dropped) +
                              " rows are missing or unparseable and cannot be predicted");
    }
    out.data.schema = std::make_shared<FeatureSchema>(schema);
    out.data.validate();
    return out;
}

// Feature columns plus this age's target column, in schema order.
inline csv::Table to_csv_table(const EncodedDataset& ds) {
    const auto& s = *ds.schema;
    csv::Table t;
    for (const auto& n : s.numerical) t.header.push_back(n.name);
    for (const auto& c : s.categorical) t.header.push_back(c.name);
    t.header.push_back(s.target_for(ds.age));
    t.rows.reserve(ds.n);
    for (std::size_t r = 0; r < ds.n; ++r) {
        std::vector<std::string> row;
        row.reserve(t.header.size());
        for (std::size_t j = 0; j < s.num_count(); ++j) row.push_back(csv::format_double(ds.num_at(r, j)));
        for (std::size_t j = 0; j < s.cat_count(); ++j) row.push_back(s.categorical[j].vocab[ds.cat_at(r, j)]);
        row.push_back(csv::format_double(ds.target[r]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace ccs
