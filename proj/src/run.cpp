#include "hthmix/run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hthmix/contour.hpp"
#include "hthmix/metrics.hpp"
#include "hthmix/serialize.hpp"

namespace hth {

namespace fs = std::filesystem;

void RunConfig::validate(int p) const {
    if (G.empty() || q.empty()) throw std::invalid_argument("RunConfig: G and q lists must be non-empty");
    for (int g : G) {
        if (g < 1) throw std::invalid_argument("RunConfig: every G must be >= 1");
    }
    for (int k : q) {
        if (k < 1 || k > p) throw std::invalid_argument("RunConfig: every q must satisfy 1 <= q <= p");
    }
    fit.validate();
    if (contour && contour->resolution < 10) throw std::invalid_argument("RunConfig: contour resolution must be >= 10");
}

int RunSummary::failures() const {
    int f = 0;
    for (const auto& r : rows) f += r.ok ? 0 : 1;
    return f;
}

namespace {

std::string fit_stem(int G, int q) { return "G" + std::to_string(G) + "_q" + std::to_string(q); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

RunSummary run_fit(const Dataset& data, const RunConfig& config) {
    config.validate(static_cast<int>(data.x.cols()));
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);
    RunSummary summary;
    for (int G : config.G) {
        for (int q : config.q) {
            RunRow row;
            row.G = G;
            row.q = q;
            try {
                FitRecord rec;
                rec.fit = ecm_fit(data.x, G, q, config.fit);
                rec.scaling = data.scaling;
                rec.columns = data.columns;
                if (!data.labels.empty()) rec.ari = ari(data.labels, rec.fit.labels);
                row.ok = true;
                row.loglik = rec.fit.loglik;
                row.bic = rec.fit.bic;
                row.n_iter = rec.fit.n_iter;
                row.converged = rec.fit.converged;
                row.ari = rec.ari;
                row.file = "fit_" + fit_stem(G, q) + ".json";
                write_text(dir / row.file, write_fit_json(rec));
                std::ostringstream labels;
                labels << "row,label\n";
                for (std::size_t i = 0; i < rec.fit.labels.size(); ++i) labels << i + 1 << ',' << rec.fit.labels[i] << '\n';
                write_text(dir / ("labels_" + fit_stem(G, q) + ".csv"), labels.str());
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
            summary.rows.push_back(std::move(row));
        }
    }
    for (std::size_t k = 0; k < summary.rows.size(); ++k) {
        const auto& r = summary.rows[k];
        if (r.ok && (summary.best < 0 || r.bic > summary.rows[static_cast<std::size_t>(summary.best)].bic)) {
            summary.best = static_cast<int>(k);
        }
    }

    std::ostringstream csv;
    csv << std::setprecision(17);
    csv << "G,q,status,loglik,bic,iterations,converged,ari,best,error\n";
    nlohmann::json js = nlohmann::json::array();
    for (std::size_t k = 0; k < summary.rows.size(); ++k) {
        const auto& r = summary.rows[k];
        const bool best = static_cast<int>(k) == summary.best;
        csv << r.G << ',' << r.q << ',' << (r.ok ? "ok" : "failed") << ',';
        if (r.ok) csv << r.loglik << ',' << r.bic << ',' << r.n_iter << ',' << (r.converged ? 1 : 0);
        else csv << ",,,";
        csv << ',';
        if (r.ari) csv << *r.ari;
        csv << ',' << (best ? 1 : 0) << ',' << csv_quote(r.error) << '\n';
        nlohmann::json e;
        e["G"] = r.G;
        e["q"] = r.q;
        e["ok"] = r.ok;
        e["best"] = best;
        if (r.ok) {
            e["loglik"] = r.loglik;
            e["bic"] = r.bic;
            e["iterations"] = r.n_iter;
            e["converged"] = r.converged;
            e["file"] = r.file;
        } else {
            e["error"] = r.error;
        }
        e["ari"] = r.ari ? nlohmann::json(*r.ari) : nlohmann::json(nullptr);
        js.push_back(e);
    }
    write_text(dir / "summary.csv", csv.str());
    write_text(dir / "summary.json", js.dump(2) + "\n");
    return summary;
}

RunSummary run_fit(const RunConfig& config) {
    Dataset data = load_csv(config.input, config.columns, config.label_column);
    if (config.scale) data = standardize(data);
    return run_fit(data, config);
}

std::vector<ContourOutput> run_contours(const ContourRequest& req, const std::string& out_dir,
                                        const MixtureModel* fitted, const Scaling* scaling,
                                        const QuadratureSpec& quad, const MvnSpec& mvn) {
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    std::vector<std::pair<std::string, HthParams>> jobs;
    if (req.source == ContourRequest::Source::fit) {
        if (fitted == nullptr) throw std::invalid_argument("run_contours: no fitted model available");
        for (int g = 0; g < fitted->G; ++g) {
            const HthParams& c = fitted->components[static_cast<std::size_t>(g)];
            jobs.emplace_back("fit_g" + std::to_string(g + 1), scaling ? to_original_units(c, *scaling) : c);
        }
    } else {
        const bool multi = req.source == ContourRequest::Source::hthm;
        for (double idx : req.indices) {
            std::ostringstream name;
            name << (multi ? "hthm" : "hthu") << "_lambda" << idx;
            jobs.emplace_back(name.str(), appendix_params(multi, idx));
        }
    }
    std::vector<ContourOutput> outs;
    std::ostringstream report;
    report << std::setprecision(12) << "grid,level,cells,violations\n";
    for (const auto& [label, params] : jobs) {
        const ContourGrid grid = contour_grid(params, req.bounds, req.resolution, quad, mvn);
        ContourOutput o;
        o.label = label;
        o.file = "contour_" + label + ".csv";
        write_contour_csv(grid, (dir / o.file).string());
        if (req.check_convexity) {
            const ConvexityReport rep = quasiconcavity_check(grid, req.levels);
            o.violations = rep.total_violations();
            for (const auto& l : rep.levels) report << label << ',' << l.level << ',' << l.cells << ',' << l.violations << '\n';
        }
        outs.push_back(o);
    }
    if (req.check_convexity) write_text(dir / "convexity.csv", report.str());
    return outs;
}

}  // namespace hth
