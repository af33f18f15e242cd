#include "core/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/result_io.hpp"

namespace synteval {

namespace fs = std::filesystem;

namespace {

std::string pct(double v) {
    std::ostringstream s;
    s.precision(4);
    s << 100.0 * v;
    return s.str();
}

void render_matrix(std::ostream& out, const IntersectionalMatrix& m, std::size_t min_n) {
    out << "| " << m.feature_a << " \\ " << m.feature_b << " |";
    for (const auto& lb : m.labels_b) out << ' ' << lb << " |";
    out << "\n|---|";
    for (std::size_t j = 0; j < m.labels_b.size(); ++j) out << "---|";
    out << '\n';
    for (std::size_t i = 0; i < m.labels_a.size(); ++i) {
        out << "| " << m.labels_a[i] << " |";
        for (std::size_t j = 0; j < m.labels_b.size(); ++j) {
            const MatrixCell& cell = m.cells[i][j];
            if (cell.null)
                out << " NA(n<" << min_n << ") |";
            else
                out << ' ' << pct(cell.value) << " |";
        }
        out << '\n';
    }
}

struct WorstCell {
    bool found = false;
    double value = 1.0;
    std::string label;
};

WorstCell worst_cell(const IntersectionalMatrix& m) {
    WorstCell out;
    for (std::size_t i = 0; i < m.labels_a.size(); ++i) {
        for (std::size_t j = 0; j < m.labels_b.size(); ++j) {
            const MatrixCell& cell = m.cells[i][j];
            if (cell.null) continue;
            if (!out.found || cell.value < out.value) {
                out.found = true;
                out.value = cell.value;
                out.label = m.labels_a[i] + " x " + m.labels_b[j];
            }
        }
    }
    return out;
}

void subgroup_section(std::ostream& md, const fs::path& dir, const nlohmann::json& aggregate) {
    md << "## Subgroup performance estimates\n\n";
    md << "Mean absolute error of each estimate source against the oracle, per subgroup"
       << " (averaged over " << aggregate.at("seeds").get<std::size_t>() << " seeds).\n\n";
    md << "| subgroup | mean test rows | real test | 3S | 3S+ | bootstrap |\n";
    md << "|---|---|---|---|---|---|\n";
    for (const auto& row : aggregate.at("per_subgroup")) {
        const auto& sources = row.at("sources");
        auto cell = [&](const char* name) {
            if (!sources.contains(name)) return std::string("-");
            return pct(sources.at(name).at("mae").get<double>());
        };
        md << "| " << row.at("subgroup").get<std::string>() << " | "
           << row.at("n_test_mean").get<double>() << " | " << cell("real_test") << " | "
           << cell("synthetic") << " | " << cell("synthetic_plus") << " | " << cell("bootstrap")
           << " |\n";
    }
    md << "\nWorst-case absolute errors per subgroup:\n\n";
    md << "| subgroup | real test | 3S | 3S+ |\n|---|---|---|---|\n";
    for (const auto& row : aggregate.at("per_subgroup")) {
        const auto& sources = row.at("sources");
        auto cell = [&](const char* name) {
            if (!sources.contains(name)) return std::string("-");
            return pct(sources.at(name).at("worst_case").get<double>());
        };
        md << "| " << row.at("subgroup").get<std::string>() << " | " << cell("real_test")
           << " | " << cell("synthetic") << " | " << cell("synthetic_plus") << " |\n";
    }

    const auto& cov = aggregate.at("coverage");
    md << "\n## Interval coverage\n\n";
    md << "| method | coverage | mean width |\n|---|---|---|\n";
    md << "| DGE (mean ± 2 sd) | " << pct(cov.at("dge").at("coverage").get<double>()) << "% | "
       << cov.at("dge").at("width").get<double>() << " |\n";
    md << "| bootstrap | " << pct(cov.at("bootstrap").at("coverage").get<double>()) << "% | "
       << cov.at("bootstrap").at("width").get<double>() << " |\n";

    // intersectional matrices from the first stored seed
    nlohmann::json first_seed;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("seed_", 0) == 0 && entry.path().extension() == ".json") {
            const nlohmann::json doc = read_json_file(entry.path());
            if (first_seed.is_null() ||
                doc.at("seed").get<std::uint64_t>() < first_seed.at("seed").get<std::uint64_t>())
                first_seed = doc;
        }
    }
    if (!first_seed.is_null() && first_seed.contains("matrix_synthetic")) {
        const IntersectionalMatrix m_synth =
            matrix_from_json(first_seed.at("matrix_synthetic"));
        const IntersectionalMatrix m_real =
            matrix_from_json(first_seed.at("matrix_real_test"));
        md << "\n## Intersectional model performance matrix\n\n";
        md << "Synthetic (3S) estimates, seed " << first_seed.at("seed").get<std::uint64_t>()
           << ":\n\n";
        render_matrix(md, m_synth, m_real.min_n);
        md << "\nReal test set estimates (cells under the sample cutoff are NA):\n\n";
        render_matrix(md, m_real, m_real.min_n);

        const auto& mae = aggregate.at("matrix_mae");
        md << "\nMatrix MAE vs oracle: 3S " << pct(mae.at("synthetic").get<double>())
           << "% vs real test " << pct(mae.at("real_test").get<double>()) << "%.\n";

        const WorstCell worst = worst_cell(m_synth);
        if (worst.found)
            md << "\n**INSIGHT**: weakest intersectional cell is " << worst.label << " at "
               << pct(worst.value) << "%.\n";
    }

    if (!first_seed.is_null() && first_seed.contains("fairness")) {
        md << "\n## Fairness ratios (seed " << first_seed.at("seed").get<std::uint64_t>()
           << ")\n\n";
        md << "| metric | real test | 3S | oracle |\n|---|---|---|---|\n";
        const auto& fair = first_seed.at("fairness");
        for (const char* name : {"di_ratio", "eo_ratio"}) {
            const std::string real_key = std::string(name) + "_real";
            if (!fair.contains(real_key)) continue;
            md << "| " << name << " | " << fair.at(real_key).get<double>() << " | "
               << fair.at(std::string(name) + "_synthetic").get<double>() << " | "
               << fair.at(std::string(name) + "_oracle").get<double>() << " |\n";
        }
    }
}

void shift_section(std::ostream& md, const fs::path& dir, const nlohmann::json& aggregate) {
    md << "## Model sensitivity to marginal shifts\n\n";
    md << "Mean absolute estimate error against the rejection-sampled oracle, by shift "
          "bucket (feature: "
       << aggregate.at("sweep_feature").get<std::string>() << ").\n\n";
    md << "| method | Mean | - | ± | + |\n|---|---|---|---|---|\n";
    const auto& buckets = aggregate.at("buckets");
    for (const char* method : {"3S", "MS", "RS"}) {
        if (!buckets.contains(method)) continue;
        const auto& b = buckets.at(method);
        md << "| " << method << " | " << pct(b.at("mean").get<double>()) << " | "
           << pct(b.at("minus").get<double>()) << " | " << pct(b.at("plus_minus").get<double>())
           << " | " << pct(b.at("plus").get<double>()) << " |\n";
    }
    md << "\nPer-point mean curve: see `curve_mean.csv`.\n";

    // steepest segment of the mean sensitivity curve
    std::ifstream curve(dir / "curve_mean.csv");
    if (curve) {
        std::string line;
        std::getline(curve, line);  // header
        double prev_s = 0.0, prev_v = 0.0, best_slope = 0.0, best_s = 0.0;
        bool have_prev = false, found = false;
        while (std::getline(curve, line)) {
            std::istringstream ss(line);
            std::string feature, s_str, ts_str;
            std::getline(ss, feature, ',');
            std::getline(ss, s_str, ',');
            std::getline(ss, ts_str, ',');
            const double s = std::stod(s_str);
            const double v = std::stod(ts_str);
            if (have_prev && s != prev_s) {
                const double slope = (v - prev_v) / (s - prev_s);
                if (!found || std::fabs(slope) > std::fabs(best_slope)) {
                    best_slope = slope;
                    best_s = s;
                    found = true;
                }
            }
            prev_s = s;
            prev_v = v;
            have_prev = true;
        }
        if (found)
            md << "\n**INSIGHT**: the estimate changes fastest near s = " << best_s
               << " (slope " << best_slope << " per unit shift).\n";
    }
}

void prior_section(std::ostream& md, const nlohmann::json& aggregate) {
    md << "## Target-domain estimation with prior knowledge\n\n";
    md << "Mean absolute error of the target-domain accuracy estimate as observed "
          "features grow.\n\n";
    md << "| observed features | 3S | Source-RS |\n|---|---|---|\n";
    for (const auto& point : aggregate.at("curve")) {
        md << "| " << point.at("n_observed").get<std::size_t>() << " | "
           << pct(point.at("ts").get<double>()) << " | " << pct(point.at("source_rs").get<double>())
           << " |\n";
    }
    const auto& base = aggregate.at("baselines");
    md << "\nBaselines using full unlabeled target data (ATC/DOC/IM) or none "
          "(Source-All):\n\n";
    md << "| baseline | mean abs error |\n|---|---|\n";
    md << "| Source-All | " << pct(base.at("source_all").get<double>()) << " |\n";
    md << "| ATC | " << pct(base.at("atc").get<double>()) << " |\n";
    md << "| DOC | " << pct(base.at("doc").get<double>()) << " |\n";
    md << "| IM | " << pct(base.at("im").get<double>()) << " |\n";
}

}  // namespace

void emit_model_report(const std::string& results_dir, const std::string& out_dir) {
    const fs::path dir(results_dir);
    if (!fs::exists(dir / "aggregate.json"))
        throw_data("MissingResults", "no aggregate.json under '" + results_dir + "'");
    const nlohmann::json aggregate = read_json_file(dir / "aggregate.json");

    fs::create_directories(out_dir);
    std::ostringstream md;
    md << "# Model evaluation report\n\n";
    md << "Metric: " << aggregate.at("metric").get<std::string>() << ". All numbers are "
       << "percentages of the metric scale and trace to the result files in the run "
       << "directory.\n\n";

    const std::string mode = aggregate.at("mode").get<std::string>();
    if (mode == "subgroup") {
        subgroup_section(md, dir, aggregate);
    } else if (mode == "shift") {
        shift_section(md, dir, aggregate);
    } else {
        prior_section(md, aggregate);
    }

    write_text_file(fs::path(out_dir) / "report.md", md.str());

    // copy plot-ready CSVs alongside the report
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".csv")
            fs::copy_file(entry.path(), fs::path(out_dir) / entry.path().filename(),
                          fs::copy_options::overwrite_existing);
    }
}

}  // namespace synteval
