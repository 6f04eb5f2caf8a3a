#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include "hthmix/contour.hpp"
#include "hthmix/dataset.hpp"
#include "hthmix/em.hpp"

namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
    const fs::path dir = fs::temp_directory_path() / "hthmix_test_dataset";
    fs::create_directories(dir);
    const fs::path f = dir / name;
    std::ofstream(f, std::ios::binary) << body;
    return f.string();
}

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

hth::Dataset gaussian_data(int n, int p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    hth::Dataset d;
    d.x.resize(n, p);
    for (int i = 0; i < n * p; ++i) d.x.data()[i] = 5.0 + 3.0 * z(rng);
    for (int j = 0; j < p; ++j) d.columns.push_back("c" + std::to_string(j));
    return d;
}

}  // namespace

TEST_CASE("record splitting") {
    const auto rows = hth::parse_csv("\xEF\xBB\xBF" "a,\"b,c\",d\r\n1,\"say \"\"hi\"\"\",3\n\n4,5,\n");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "d"});
    CHECK(rows[1][1] == "say \"hi\"");
    CHECK(rows[2] == std::vector<std::string>{"4", "5", ""});
    CHECK_THROWS(hth::parse_csv("a,\"b\n"));
}

TEST_CASE("loading selected columns and labels") {
    const auto path = write_temp("ok.csv", "area,compact,len,variety\n15.2,0.87,5.7,Kama\n14.9,0.88,5.5,Rosa\n16.1,0.86,5.9,Kama\n");
    const auto d = hth::load_csv(path, {"len", "compact"}, "variety");
    CHECK(d.x.rows() == 3);
    CHECK(d.x.cols() == 2);
    CHECK(d.x(1, 0) == 5.5);
    CHECK(d.x(2, 1) == 0.86);
    CHECK(d.labels == std::vector<int>{1, 2, 1});
    CHECK(d.label_names == std::vector<std::string>{"Kama", "Rosa"});
    const auto all = hth::load_csv(path, {}, "variety");
    CHECK(all.columns == std::vector<std::string>{"area", "compact", "len"});
    CHECK(all.scaling.identity());
}

TEST_CASE("a single data row loads") {
    const auto d = hth::load_csv(write_temp("one.csv", "x,y\n1,2\n"), {});
    CHECK(d.x.rows() == 1);
    CHECK_THROWS_AS(hth::standardize(d), std::invalid_argument);
}

TEST_CASE("loading errors name the problem") {
    const auto path = write_temp("bad.csv", "x,y\n1,2\n3,oops\n5,\n7,8\n");
    CHECK(error_of([&] { hth::load_csv(path, {"x", "z"}); }).find("available: x, y") != std::string::npos);
    const auto msg = error_of([&] { hth::load_csv(path, {}); });
    CHECK(msg.find("line(s) 3 4") != std::string::npos);
    CHECK(hth::load_csv(path, {"x"}).x.rows() == 4);
    CHECK(error_of([&] { hth::load_csv(write_temp("none.csv", ""), {}); }) != "");
    CHECK(error_of([&] { hth::load_csv((fs::temp_directory_path() / "hthmix_absent.csv").string(), {}); })
              .find("cannot open") != std::string::npos);
    CHECK(error_of([&] { hth::load_csv(write_temp("lab.csv", "l\n1\n"), {}, "l"); }).find("empty") !=
          std::string::npos);
}

TEST_CASE("standardization") {
    const auto d = gaussian_data(50, 3, 1);
    const auto s = hth::standardize(d);
    for (Eigen::Index j = 0; j < 3; ++j) {
        const double m = s.x.col(j).mean();
        const double sd = std::sqrt((s.x.col(j).array() - m).square().sum() / 49.0);
        CHECK(std::abs(m) < 1e-12);
        CHECK(std::abs(sd - 1.0) < 1e-12);
    }
    const auto twice = hth::standardize(s);
    CHECK((twice.x - s.x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((twice.scaling.center - s.scaling.center).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((twice.scaling.scale - s.scaling.scale).cwiseAbs().maxCoeff() < 1e-10);
    for (Eigen::Index i = 0; i < 50; ++i) {
        const Eigen::VectorXd back = s.scaling.center + s.scaling.scale.cwiseProduct(s.x.row(i).transpose());
        CHECK((back - d.x.row(i).transpose()).norm() < 1e-12);
    }

    auto flat = d;
    flat.x.col(1).setConstant(2.0);
    CHECK(error_of([&] { hth::standardize(flat); }).find("'c1' has zero variance") != std::string::npos);
}

TEST_CASE("back-transformed parameters carry the density") {
    const auto s = hth::standardize(gaussian_data(40, 2, 2));
    const auto par = hth::appendix_params(true, 0.5);
    const auto orig = hth::to_original_units(par, s.scaling);
    const double jac = s.scaling.scale.array().log().sum();
    for (int k = 0; k < 10; ++k) {
        const Eigen::VectorXd y = par.mu + Eigen::Vector2d(0.3 * k - 1.0, 0.5 - 0.2 * k);
        const Eigen::VectorXd x = s.scaling.center + s.scaling.scale.cwiseProduct(y);
        CHECK(hth::hth_logpdf(x, orig) == doctest::Approx(hth::hth_logpdf(y, par) - jac).epsilon(1e-10));
    }
    CHECK(hth::to_original_units(par, {}).mu == par.mu);
}

TEST_CASE("fitting scaled data and mapping back matches fitting raw data") {
    auto par = hth::appendix_params(false, 1.0);
    hth::Dataset d;
    d.x = hth::hth_sample(par, 200, 31);
    d.x.col(0) = 10.0 + 4.0 * d.x.col(0).array();
    d.x.col(1) = -3.0 + 0.5 * d.x.col(1).array();
    d.columns = {"a", "b"};
    const auto s = hth::standardize(d);
    hth::FitConfig cfg;
    cfg.n_starts = 1;
    cfg.loglik_rel_tol = 1e-9;
    cfg.max_iter = 400;
    const auto raw = hth::ecm_fit(d.x, 1, 1, cfg);
    const auto scaled = hth::ecm_fit(s.x, 1, 1, cfg);
    const auto back = hth::to_original_units(scaled.model.components[0], s.scaling);
    const double jac = s.scaling.scale.array().log().sum() * 200.0;
    CHECK(scaled.loglik - jac == doctest::Approx(raw.loglik).epsilon(1e-4));
    for (int k = 0; k < 2; ++k) {
        CHECK(std::abs(back.mu(k) - raw.model.components[0].mu(k)) < 0.05 * s.scaling.scale(k));
    }
}
