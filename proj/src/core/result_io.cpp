#include "core/result_io.hpp"

#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace synteval {

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(path);
    if (!out) throw_config("BadPath", "cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw_config("BadPath", "cannot write '" + path.string() + "'");
    out << text;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw_config("MissingFile", "cannot open '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw_config("BadFile", "JSON parse error in '" + path.string() + "': " + e.what());
    }
    return doc;
}

std::string format_number(double v) {
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
}

std::string matrix_csv(const IntersectionalMatrix& m) {
    std::ostringstream out;
    out << m.feature_a << "\\" << m.feature_b;
    for (const auto& lb : m.labels_b) out << ',' << lb;
    out << '\n';
    for (std::size_t i = 0; i < m.labels_a.size(); ++i) {
        out << m.labels_a[i];
        for (std::size_t j = 0; j < m.labels_b.size(); ++j) {
            const MatrixCell& cell = m.cells[i][j];
            out << ',';
            if (cell.null)
                out << "NA(" << cell.n << ")";
            else
                out << format_number(cell.value);
        }
        out << '\n';
    }
    return out.str();
}

nlohmann::json matrix_json(const IntersectionalMatrix& m) {
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t i = 0; i < m.labels_a.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.labels_b.size(); ++j) {
            const MatrixCell& cell = m.cells[i][j];
            if (cell.null)
                row.push_back({{"null", true}, {"n", cell.n}});
            else
                row.push_back({{"value", cell.value}, {"n", cell.n}});
        }
        cells.push_back(std::move(row));
    }
    return nlohmann::json{{"feature_a", m.feature_a},
                          {"feature_b", m.feature_b},
                          {"labels_a", m.labels_a},
                          {"labels_b", m.labels_b},
                          {"min_n", m.min_n},
                          {"cells", cells}};
}

IntersectionalMatrix matrix_from_json(const nlohmann::json& doc) {
    IntersectionalMatrix m;
    m.feature_a = doc.at("feature_a").get<std::string>();
    m.feature_b = doc.at("feature_b").get<std::string>();
    m.labels_a = doc.at("labels_a").get<std::vector<std::string>>();
    m.labels_b = doc.at("labels_b").get<std::vector<std::string>>();
    m.min_n = doc.at("min_n").get<std::size_t>();
    for (const auto& row : doc.at("cells")) {
        std::vector<MatrixCell> cells;
        for (const auto& cj : row) {
            MatrixCell cell;
            cell.n = cj.at("n").get<std::size_t>();
            cell.null = cj.value("null", false);
            if (!cell.null) cell.value = cj.at("value").get<double>();
            cells.push_back(cell);
        }
        m.cells.push_back(std::move(cells));
    }
    return m;
}

}  // namespace synteval
