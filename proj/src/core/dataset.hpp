#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "core/schema.hpp"

namespace synteval {

/// One cell: a number for continuous features, a category index otherwise.
using Value = std::variant<double, std::int32_t>;

/// One record in schema feature order.
using Row = std::vector<Value>;

/// Immutable typed table. Storage is columnar; rows keep their ingestion
/// order. Weights default to 1 and are only materialized when set.
class Dataset {
public:
    explicit Dataset(SchemaPtr schema);

    const Schema& schema() const { return *schema_; }
    SchemaPtr schema_ptr() const { return schema_; }
    std::size_t n_rows() const { return n_rows_; }
    bool empty() const { return n_rows_ == 0; }

    double numeric(std::size_t feature, std::size_t row) const {
        return std::get<std::vector<double>>(columns_[feature])[row];
    }
    std::int32_t category(std::size_t feature, std::size_t row) const {
        return std::get<std::vector<std::int32_t>>(columns_[feature])[row];
    }
    Value value(std::size_t feature, std::size_t row) const;
    Row row(std::size_t r) const;

    std::span<const double> numeric_column(std::size_t feature) const;
    std::span<const std::int32_t> category_column(std::size_t feature) const;

    double weight(std::size_t row) const {
        return weights_.empty() ? 1.0 : weights_[row];
    }
    bool has_weights() const { return !weights_.empty(); }

    std::int32_t label(std::size_t row) const {
        return category(schema_->label_index(), row);
    }

    void append(const Row& row, double weight = 1.0);
    void reserve(std::size_t n);

    /// New dataset holding the given rows of this one, in the given order.
    Dataset take(std::span<const std::size_t> rows) const;

    /// Row-wise concatenation; schemas must match.
    static Dataset concat(const Dataset& a, const Dataset& b);

    /// Linear-interpolation (type-7) quantile of a continuous feature.
    double empirical_quantile(const std::string& feature, double q) const;

    double column_mean(std::size_t feature) const;
    double column_sd(std::size_t feature) const;

    void save_csv(const std::string& path) const;

    /// FNV-1a over the raw column bytes; order-sensitive.
    std::uint64_t content_hash() const;

private:
    using Column = std::variant<std::vector<double>, std::vector<std::int32_t>>;
    SchemaPtr schema_;
    std::vector<Column> columns_;
    std::vector<double> weights_;
    std::size_t n_rows_ = 0;

    void ensure_weighted();
};

/// Parse a CSV file against the schema. The header must name every schema
/// feature (any order); columns are normalized to schema order.
Dataset load_csv(const std::string& path, SchemaPtr schema);

struct SplitResult {
    Dataset train;
    Dataset test;
    Dataset oracle;
};

/// Disjoint random partition with sizes round(fraction * n). Rows beyond the
/// three parts are discarded. Deterministic in the seed.
SplitResult split(const Dataset& data, double f_train, double f_test, double f_oracle,
                  std::uint64_t seed);

}  // namespace synteval
