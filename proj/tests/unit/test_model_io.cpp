#include <doctest.h>

#include <sstream>

#include "hmtl/driver.hpp"
#include "hmtl/model_io.hpp"
#include "hmtl/synthetic.hpp"
#include "temp_dir.hpp"

using namespace hmtl;

TEST_CASE("model round trip is exact") {
    SyntheticSpec spec;
    spec.T = 2;
    spec.m = 3;
    spec.d = 4;
    spec.n = 10;
    spec.dof = 5;
    spec.groups = 1;
    const HmtlModel model = fit_hmtl(generate_hierarchical_dataset(spec).data, {0.5, 0.1, 0.1});
    oracle::TempDir dir;
    save_model(dir.file("m.txt"), model);
    const HmtlModel back = load_model(dir.file("m.txt"));
    for (std::size_t t = 0; t < 2; ++t) {
        CHECK(back.weights.thetas[t] == model.weights.thetas[t]);
        CHECK(back.precisions.omegas[t] == model.precisions.omegas[t]);
    }
    CHECK(back.hyper.lambda1 == model.hyper.lambda1);
    CHECK(back.report.objective_trace == model.report.objective_trace);
    CHECK(back.report.admm_iterations == model.report.admm_iterations);
    CHECK(back.report.theta_iterations == model.report.theta_iterations);
    CHECK(back.report.converged == model.report.converged);
    CHECK(back.report.initial_objective == model.report.initial_objective);

    // Writing the loaded model reproduces the file byte for byte.
    save_model(dir.file("m2.txt"), back);
    CHECK(oracle::read_file(dir.file("m.txt")) == oracle::read_file(dir.file("m2.txt")));
}

TEST_CASE("format_double keeps every bit") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("malformed model files") {
    std::istringstream bad_magic("nope 1\n");
    CHECK_THROWS_AS(read_model(bad_magic), ParseError);
    std::istringstream truncated("hmtl-model 1\ndims 1 1 1\nlambdas 0 0 0\ntheta 0\n0.5\n");
    CHECK_THROWS_AS(read_model(truncated), ParseError);
    oracle::TempDir dir;
    CHECK_THROWS_AS(load_model(dir.file("missing.txt")), ParseError);
}
