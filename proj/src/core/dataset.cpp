#include "core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

namespace synteval {

Dataset::Dataset(SchemaPtr schema) : schema_(std::move(schema)) {
    columns_.reserve(schema_->size());
    for (const Feature& f : schema_->features()) {
        if (f.type == FeatureType::Continuous)
            columns_.emplace_back(std::vector<double>{});
        else
            columns_.emplace_back(std::vector<std::int32_t>{});
    }
}

Value Dataset::value(std::size_t feature, std::size_t row) const {
    if (schema_->feature(feature).type == FeatureType::Continuous)
        return numeric(feature, row);
    return category(feature, row);
}

Row Dataset::row(std::size_t r) const {
    Row out(schema_->size());
    for (std::size_t f = 0; f < schema_->size(); ++f) out[f] = value(f, r);
    return out;
}

std::span<const double> Dataset::numeric_column(std::size_t feature) const {
    return std::get<std::vector<double>>(columns_[feature]);
}

std::span<const std::int32_t> Dataset::category_column(std::size_t feature) const {
    return std::get<std::vector<std::int32_t>>(columns_[feature]);
}

void Dataset::ensure_weighted() {
    if (weights_.empty()) weights_.assign(n_rows_, 1.0);
}

void Dataset::append(const Row& row, double weight) {
    if (row.size() != schema_->size())
        throw_data("BadRow", "row arity does not match schema");
    if (!(weight >= 0.0) || !std::isfinite(weight))
        throw_data("BadWeight", "row weight must be finite and >= 0");
    for (std::size_t f = 0; f < schema_->size(); ++f) {
        const Feature& feat = schema_->feature(f);
        if (feat.type == FeatureType::Continuous) {
            const double v = std::get<double>(row[f]);
            if (!std::isfinite(v))
                throw_data("UnparseableNumber", "non-finite value for '" + feat.name + "'");
            std::get<std::vector<double>>(columns_[f]).push_back(v);
        } else {
            const std::int32_t c = std::get<std::int32_t>(row[f]);
            if (c < 0 || static_cast<std::size_t>(c) >= feat.cardinality())
                throw_data("UnknownCategory", "category index out of range for '" + feat.name + "'");
            std::get<std::vector<std::int32_t>>(columns_[f]).push_back(c);
        }
    }
    if (weight != 1.0 && weights_.empty()) ensure_weighted();
    if (!weights_.empty()) weights_.push_back(weight);
    ++n_rows_;
}

void Dataset::reserve(std::size_t n) {
    for (auto& col : columns_) {
        std::visit([n](auto& v) { v.reserve(n); }, col);
    }
}

Dataset Dataset::take(std::span<const std::size_t> rows) const {
    Dataset out(schema_);
    out.reserve(rows.size());
    for (std::size_t f = 0; f < schema_->size(); ++f) {
        std::visit(
            [&](auto& dst) {
                const auto& src = std::get<std::decay_t<decltype(dst)>>(columns_[f]);
                for (std::size_t r : rows) dst.push_back(src[r]);
            },
            out.columns_[f]);
    }
    if (!weights_.empty()) {
        out.weights_.reserve(rows.size());
        for (std::size_t r : rows) out.weights_.push_back(weights_[r]);
    }
    out.n_rows_ = rows.size();
    return out;
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
    if (!(a.schema() == b.schema()))
        throw_data("SchemaMismatch", "concat requires identical schemas");
    Dataset out(a.schema_);
    out.reserve(a.n_rows() + b.n_rows());
    for (std::size_t f = 0; f < a.schema().size(); ++f) {
        std::visit(
            [&](auto& dst) {
                using Vec = std::decay_t<decltype(dst)>;
                const auto& ca = std::get<Vec>(a.columns_[f]);
                const auto& cb = std::get<Vec>(b.columns_[f]);
                dst.insert(dst.end(), ca.begin(), ca.end());
                dst.insert(dst.end(), cb.begin(), cb.end());
            },
            out.columns_[f]);
    }
    if (a.has_weights() || b.has_weights()) {
        out.weights_.reserve(a.n_rows() + b.n_rows());
        for (std::size_t r = 0; r < a.n_rows(); ++r) out.weights_.push_back(a.weight(r));
        for (std::size_t r = 0; r < b.n_rows(); ++r) out.weights_.push_back(b.weight(r));
    }
    out.n_rows_ = a.n_rows() + b.n_rows();
    return out;
}

double Dataset::empirical_quantile(const std::string& feature, double q) const {
    const std::size_t f = schema_->index_of(feature);
    if (schema_->feature(f).type != FeatureType::Continuous)
        throw_data("NotContinuous", "'" + feature + "' is not continuous");
    if (empty()) throw_data("Empty", "quantile of empty dataset");
    return quantile_type7(numeric_column(f), q);
}

double Dataset::column_mean(std::size_t feature) const {
    return mean(numeric_column(feature));
}

double Dataset::column_sd(std::size_t feature) const {
    return sample_sd(numeric_column(feature));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

Dataset load_csv(const std::string& path, SchemaPtr schema) {
    std::ifstream in(path);
    if (!in) throw_config("MissingFile", "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw_data("EmptyFile", "'" + path + "' is empty");

    const std::vector<std::string> header = split_csv_line(line);
    // column position of each schema feature within the file
    std::vector<std::size_t> position(schema->size());
    for (std::size_t f = 0; f < schema->size(); ++f) {
        const std::string& name = schema->feature(f).name;
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw_data("MissingColumn", "'" + path + "' lacks column '" + name + "'");
        position[f] = static_cast<std::size_t>(it - header.begin());
    }

    Dataset out(schema);
    std::size_t line_no = 1;
    Row row(schema->size());
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw_data("BadRow", path + ":" + std::to_string(line_no) + ": wrong field count");
        for (std::size_t f = 0; f < schema->size(); ++f) {
            const std::string& cell = cells[position[f]];
            const Feature& feat = schema->feature(f);
            if (cell.empty())
                throw_data("MissingValue",
                           path + ":" + std::to_string(line_no) + ": empty '" + feat.name + "'");
            if (feat.type == FeatureType::Continuous) {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(cell, &used);
                } catch (const std::exception&) {
                    throw_data("UnparseableNumber", path + ":" + std::to_string(line_no) +
                                                        ": '" + cell + "' in '" + feat.name + "'");
                }
                if (used != cell.size() || !std::isfinite(v))
                    throw_data("UnparseableNumber", path + ":" + std::to_string(line_no) +
                                                        ": '" + cell + "' in '" + feat.name + "'");
                row[f] = v;
            } else {
                try {
                    row[f] = schema->category_index(f, cell);
                } catch (const Error&) {
                    throw_data("UnknownCategory", path + ":" + std::to_string(line_no) + ": '" +
                                                      cell + "' not declared for '" + feat.name +
                                                      "'");
                }
            }
        }
        out.append(row);
    }
    if (out.empty()) throw_data("EmptyFile", "'" + path + "' has a header but no rows");
    return out;
}

void Dataset::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw_config("BadPath", "cannot write '" + path + "'");
    for (std::size_t f = 0; f < schema_->size(); ++f) {
        if (f) out << ',';
        out << schema_->feature(f).name;
    }
    out << '\n';
    std::ostringstream cell;
    cell.precision(17);
    for (std::size_t r = 0; r < n_rows_; ++r) {
        for (std::size_t f = 0; f < schema_->size(); ++f) {
            if (f) out << ',';
            const Feature& feat = schema_->feature(f);
            if (feat.type == FeatureType::Continuous) {
                cell.str("");
                cell << numeric(f, r);
                out << cell.str();
            } else {
                out << feat.categories[static_cast<std::size_t>(category(f, r))];
            }
        }
        out << '\n';
    }
}

std::uint64_t Dataset::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const void* bytes, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ull;
        }
    };
    for (const Column& col : columns_) {
        std::visit([&](const auto& v) { mix(v.data(), v.size() * sizeof(v[0])); }, col);
    }
    mix(weights_.data(), weights_.size() * sizeof(double));
    return h;
}

SplitResult split(const Dataset& data, double f_train, double f_test, double f_oracle,
                  std::uint64_t seed) {
    const double fr[3] = {f_train, f_test, f_oracle};
    double total = 0.0;
    for (double f : fr) {
        if (!(f > 0.0)) throw_config("BadFractions", "all split fractions must be positive");
        total += f;
    }
    if (total > 1.0 + 1e-9) throw_config("BadFractions", "split fractions sum above 1");

    const std::size_t n = data.n_rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(Rng::derive(seed, /*stream=*/1));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.uniform_index(i);
        std::swap(order[i - 1], order[j]);
    }

    std::size_t sizes[3];
    for (int k = 0; k < 3; ++k)
        sizes[k] = static_cast<std::size_t>(std::llround(fr[k] * static_cast<double>(n)));
    if (sizes[0] + sizes[1] + sizes[2] > n)
        throw_config("BadFractions", "rounded split sizes exceed dataset size");

    std::size_t at = 0;
    auto part = [&](std::size_t count) {
        Dataset d = data.take(std::span<const std::size_t>(order.data() + at, count));
        at += count;
        return d;
    };
    Dataset train = part(sizes[0]);
    Dataset test = part(sizes[1]);
    Dataset oracle = part(sizes[2]);
    return SplitResult{std::move(train), std::move(test), std::move(oracle)};
}

}  // namespace synteval
