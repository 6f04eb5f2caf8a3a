#include "hthmix/serialize.hpp"

#include <stdexcept>

#include <json.hpp>

namespace hth {

namespace {

using nlohmann::json;

json vec_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

// Row-major nested arrays.
json mat_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

Eigen::VectorXd vec_from(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
    return v;
}

Eigen::MatrixXd mat_from(const json& j, Eigen::Index cols_if_empty = 0) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : cols_if_empty;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw std::runtime_error("fit json: ragged matrix");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    return m;
}

json component_json(const HthParams& c) {
    json out;
    out["mu"] = vec_json(c.mu);
    out["sigma"] = mat_json(c.sigma);
    out["lambda"] = mat_json(c.lambda_mat);
    out["index"] = c.index;
    out["omega"] = c.omega;
    return out;
}

HthParams component_from(const json& j) {
    HthParams c;
    c.mu = vec_from(j.at("mu"));
    c.sigma = mat_from(j.at("sigma"));
    c.lambda_mat = mat_from(j.at("lambda"));
    c.index = j.at("index").get<double>();
    c.omega = j.at("omega").get<double>();
    return c;
}

}  // namespace

std::string write_fit_json(const FitRecord& rec) {
    const FitResult& f = rec.fit;
    const MixtureModel& m = f.model;
    json out;
    out["G"] = m.G;
    out["p"] = m.p;
    out["q"] = m.q;
    out["columns"] = rec.columns;
    out["loglik"] = f.loglik;
    out["bic"] = f.bic;
    out["free_parameters"] = count_free_params(m.G, m.p, m.q);
    out["converged"] = f.converged;
    out["iterations"] = f.n_iter;
    out["start"] = f.start;
    out["weights"] = vec_json(m.weights);
    json scaled = json::array(), original = json::array();
    for (const auto& c : m.components) {
        scaled.push_back(component_json(c));
        original.push_back(component_json(to_original_units(c, rec.scaling)));
    }
    out["components"] = scaled;
    out["components_original_units"] = original;
    json scaling;
    if (rec.scaling.identity()) {
        scaling = nullptr;
    } else {
        scaling["center"] = vec_json(rec.scaling.center);
        scaling["scale"] = vec_json(rec.scaling.scale);
    }
    out["scaling"] = scaling;
    out["loglik_trace"] = f.loglik_trace;
    out["anneal_trace"] = f.anneal_trace;
    out["labels"] = f.labels;
    out["warnings"] = f.warnings;
    out["ari"] = rec.ari ? json(*rec.ari) : json(nullptr);
    return out.dump(2) + "\n";
}

FitRecord parse_fit_json(const std::string& text) {
    const json j = json::parse(text);
    FitRecord rec;
    FitResult& f = rec.fit;
    MixtureModel& m = f.model;
    m.G = j.at("G").get<int>();
    m.p = j.at("p").get<int>();
    m.q = j.at("q").get<int>();
    rec.columns = j.at("columns").get<std::vector<std::string>>();
    f.loglik = j.at("loglik").get<double>();
    f.bic = j.at("bic").get<double>();
    f.converged = j.at("converged").get<bool>();
    f.n_iter = j.at("iterations").get<int>();
    f.start = j.at("start").get<int>();
    m.weights = vec_from(j.at("weights"));
    for (const auto& c : j.at("components")) m.components.push_back(component_from(c));
    if (static_cast<int>(m.components.size()) != m.G) throw std::runtime_error("fit json: component count != G");
    const auto& s = j.at("scaling");
    if (!s.is_null()) {
        rec.scaling.center = vec_from(s.at("center"));
        rec.scaling.scale = vec_from(s.at("scale"));
    }
    f.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
    f.anneal_trace = j.at("anneal_trace").get<std::vector<double>>();
    f.labels = j.at("labels").get<std::vector<int>>();
    f.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (!j.at("ari").is_null()) rec.ari = j.at("ari").get<double>();
    return rec;
}

}  // namespace hth
