#include "hthmix/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hth {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& raw, double& out) {
    const std::string s = trim(raw);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, field_started = false;
    std::size_t i = 0;
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF && static_cast<unsigned char>(text[1]) == 0xBB &&
        static_cast<unsigned char>(text[2]) == 0xBF) {
        i = 3;
    }
    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && trim(row[0]).empty())) rows.push_back(row);
        row.clear();
    };
    for (; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (ch == ',') {
            end_field();
        } else if (ch == '\n') {
            end_row();
        } else if (ch == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_row();
        } else {
            field += ch;
            field_started = true;
        }
    }
    if (quoted) throw std::runtime_error("csv: unterminated quoted field");
    if (!field.empty() || !row.empty()) end_row();
    return rows;
}

Dataset load_csv(const std::string& path, const std::vector<std::string>& columns, const std::string& label_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto rows = parse_csv(buf.str());
    if (rows.empty()) throw std::runtime_error("load_csv: " + path + " has no header row");

    std::vector<std::string> header;
    for (const auto& h : rows[0]) header.push_back(trim(h));
    auto find = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            std::string avail;
            for (const auto& h : header) avail += (avail.empty() ? "" : ", ") + h;
            throw std::runtime_error("load_csv: column '" + name + "' not found; available: " + avail);
        }
        return static_cast<std::size_t>(it - header.begin());
    };

    std::vector<std::string> selected = columns;
    if (selected.empty()) {
        for (const auto& h : header) {
            if (h != label_column) selected.push_back(h);
        }
    }
    if (selected.empty()) throw std::runtime_error("load_csv: empty column selection");
    std::vector<std::size_t> idx;
    for (const auto& c : selected) idx.push_back(find(c));
    const std::size_t label_idx = label_column.empty() ? 0 : find(label_column);

    const auto n = static_cast<Eigen::Index>(rows.size() - 1);
    Dataset d;
    d.columns = selected;
    d.x.resize(n, static_cast<Eigen::Index>(idx.size()));
    std::vector<std::size_t> bad;
    std::map<std::string, int> label_ids;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i) + 1];
        bool ok = true;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            double v = 0.0;
            if (idx[j] >= r.size() || !parse_number(r[idx[j]], v)) {
                ok = false;
                break;
            }
            d.x(i, static_cast<Eigen::Index>(j)) = v;
        }
        if (!ok) bad.push_back(static_cast<std::size_t>(i) + 2);
        if (!label_column.empty()) {
            const std::string lab = label_idx < r.size() ? trim(r[label_idx]) : "";
            auto it = label_ids.find(lab);
            if (it == label_ids.end()) {
                it = label_ids.emplace(lab, static_cast<int>(label_ids.size()) + 1).first;
                d.label_names.push_back(lab);
            }
            d.labels.push_back(it->second);
        }
    }
    if (!bad.empty()) {
        std::ostringstream msg;
        msg << "load_csv: missing or non-numeric values in selected columns at line(s)";
        for (std::size_t k = 0; k < bad.size() && k < 20; ++k) msg << ' ' << bad[k];
        if (bad.size() > 20) msg << " ... (" << bad.size() << " rows)";
        throw std::runtime_error(msg.str());
    }
    return d;
}

Dataset standardize(const Dataset& d) {
    const Eigen::Index n = d.x.rows(), p = d.x.cols();
    if (n < 2) throw std::invalid_argument("standardize: need at least two rows");
    Dataset out = d;
    Eigen::VectorXd mean = d.x.colwise().mean().transpose();
    Eigen::VectorXd sd(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double ss = (d.x.col(j).array() - mean(j)).square().sum();
        sd(j) = std::sqrt(ss / static_cast<double>(n - 1));
        if (!(sd(j) > 0.0)) {
            const std::string name = static_cast<std::size_t>(j) < d.columns.size() ? d.columns[static_cast<std::size_t>(j)]
                                                                                   : std::to_string(j + 1);
            throw std::invalid_argument("standardize: column '" + name + "' has zero variance");
        }
        out.x.col(j) = (d.x.col(j).array() - mean(j)) / sd(j);
    }
    if (d.scaling.identity()) {
        out.scaling.center = mean;
        out.scaling.scale = sd;
    } else {
        out.scaling.center = d.scaling.center + d.scaling.scale.cwiseProduct(mean);
        out.scaling.scale = d.scaling.scale.cwiseProduct(sd);
    }
    return out;
}

HthParams to_original_units(const HthParams& params, const Scaling& s) {
    if (s.identity()) return params;
    HthParams out = params;
    const auto dmat = s.scale.asDiagonal();
    out.mu = s.center + s.scale.cwiseProduct(params.mu);
    out.sigma = dmat * params.sigma * dmat;
    out.lambda_mat = dmat * params.lambda_mat;
    return out;
}

}  // namespace hth
