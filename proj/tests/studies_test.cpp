// Study drivers: end-to-end runs on small configurations, CSV structure and
// byte determinism, and the dispatch/shape guards.

#include "doctest.h"

#include "impbond/studies.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace impbond;

namespace {

ExperimentConfig cfg_from(const std::string& body,
                          const std::vector<std::string>& overrides = {}) {
    static int counter = 0;
    const auto path = std::filesystem::temp_directory_path() /
                      ("impbond_study_case_" + std::to_string(counter++) + ".cfg");
    std::ofstream out(path);
    out << body;
    out.close();
    return load_config(path.string(), overrides);
}

const CsvRow* find_row(const StudyReport& rep, const std::string& metric) {
    for (const auto& r : rep.rows)
        if (r.metric == metric) return &r;
    return nullptr;
}

int count_rows(const StudyReport& rep, const std::string& metric) {
    return int(std::count_if(rep.rows.begin(), rep.rows.end(),
                             [&](const CsvRow& r) { return r.metric == metric; }));
}

}  // namespace

TEST_CASE("verify study passes on a two-inclusion assembly") {
    const auto cfg = cfg_from(
        "label = twodisk\n"
        "curve = disk radius=0.2 center=-0.45,0 n=128\n"
        "curve = disk radius=0.2 center=0.45,0 n=128\n"
        "gamma = 0 0.5\n");
    const auto rep = run_verify(cfg);
    CHECK(rep.failures == 0);
    CHECK(rep.passed());
    CHECK(rep.rows.size() > 10);
    for (const auto& r : rep.rows) {
        CHECK(r.study == "verify");
        CHECK(r.label == "twodisk");
    }
    for (const auto& line : rep.lines) CHECK(line.find("[FAIL]") == std::string::npos);
    // both inclusions get their indicator identities checked
    CHECK(count_rows(rep, "adjoint_indicator_half") == 2);
    CHECK(count_rows(rep, "boundary_condition_residual") == 2);  // one per gamma
    CHECK_FALSE(rep.plot_script.empty());
}

TEST_CASE("study reports format to byte-identical CSV across runs") {
    const std::string body =
        "label = det\n"
        "curve = disk radius=0.2 center=-0.45,0 n=64\n"
        "curve = disk radius=0.2 center=0.45,0 n=64\n"
        "gamma = 0 0.5\n";
    const std::string csv1 = format_csv(run_verify(cfg_from(body)).rows);
    const std::string csv2 = format_csv(run_verify(cfg_from(body)).rows);
    CHECK(csv1 == csv2);

    std::istringstream in(csv1);
    std::string header;
    std::getline(in, header);
    CHECK(header == "study,case,metric,gamma,eps,i,j,x,y,value,reference,pass");
    std::string line;
    while (std::getline(in, line))
        CHECK(std::count(line.begin(), line.end(), ',') == 11);

    // the parallel sweep merges results in parameter order, not completion order
    const std::string blow =
        "label = blowdet\n"
        "curve = disk radius=1 n=128\n"
        "curve = disk radius=1 n=128\n"
        "allow_large_geometry = true\n"
        "gamma = 0.01 0.05\n"
        "eps = 0.2 0.1\n"
        "threads = 3\n";
    const std::string b1 = format_csv(run_blowup(cfg_from(blow)).rows);
    const std::string b2 = format_csv(run_blowup(cfg_from(blow)).rows);
    CHECK(b1 == b2);
}

TEST_CASE("study dispatch rejects unknown names and malformed shapes") {
    const auto disk = cfg_from("curve = disk radius=0.5 n=64\n");
    CHECK_THROWS_WITH_AS(run_study("resonance", disk), doctest::Contains("unknown study"),
                         config_error);
    CHECK_THROWS_WITH_AS(run_blowup(cfg_from("curve = kite scale=0.3 n=64\n"
                                             "curve = disk radius=0.2 center=0.6,0 n=64\n")),
                         doctest::Contains("two disk curves"), config_error);
    CHECK_THROWS_WITH_AS(run_blowup(cfg_from("curve = disk radius=0.2 center=-0.25,0 n=64\n"
                                             "curve = disk radius=0.2 center=0.25,0 n=64\n")),
                         doctest::Contains("eps list"), config_error);
    // an annulus buried inside the inclusion leaves no usable exterior points
    CHECK_THROWS_WITH_AS(run_convergence(cfg_from("curve = disk radius=0.5 n=64\n"
                                                  "gamma_grid = 0.001 0.1 5 log\n"
                                                  "annulus = 0.05 0.1 2 4\n")),
                         doctest::Contains("too few exterior points"), config_error);
}

TEST_CASE("solve study emits the documented rows for the disk") {
    const auto cfg = cfg_from(
        "label = solvecase\n"
        "curve = disk radius=0.5 n=128\n"
        "gamma = 0.1\n"
        "annulus = 0.65 2 3 16\n"
        "farfield_radii = 10 100 1000\n");
    const auto rep = run_solve(cfg);
    CHECK(rep.failures == 0);

    // annulus radii 0.65, 1.325, 2.0 all clear the boundary: nothing dropped
    const CsvRow* dropped = find_row(rep, "dropped_points");
    REQUIRE(dropped != nullptr);
    CHECK(*dropped->value == 0.0);
    CHECK(count_rows(rep, "u") == 48);
    CHECK(count_rows(rep, "grad_u_x") == 48);
    CHECK(count_rows(rep, "grad_u_y") == 48);

    // dipole coefficient R^2 (gamma - R)/(R + gamma) = -1/6 at R=1/2, gamma=0.1
    const CsvRow* dip = find_row(rep, "dipole_coefficient");
    REQUIRE(dip != nullptr);
    CHECK(dip->pass == "pass");
    CHECK(std::abs(*dip->value - (-1.0 / 6.0)) <= 1e-6);
    CHECK(std::abs(*dip->reference - (-1.0 / 6.0)) <= 1e-12);

    CHECK(count_rows(rep, "farfield_value_scaled") == 3);
    for (const auto& r : rep.rows)
        if (r.metric == "farfield_value_scaled") {
            CHECK(r.pass == "pass");
            CHECK(std::abs(*r.value - 1.0 / 12.0) <= 1e-4 / 12.0);
        }

    // u at the first annulus point (0.65, 0): x + c x/|x|^2
    const double expect = 0.65 - (1.0 / 6.0) / 0.65;
    bool found = false;
    for (const auto& r : rep.rows)
        if (r.metric == "u" && r.x && std::abs(*r.x - 0.65) < 1e-12 &&
            std::abs(*r.y) < 1e-12) {
            CHECK(std::abs(*r.value - expect) <= 1e-9);
            found = true;
        }
    CHECK(found);

    const CsvRow* inter = find_row(rep, "interior_constant");
    REQUIRE(inter != nullptr);
    CHECK(std::abs(*inter->value) <= 1e-10);  // centered disk shields x1 exactly
}

TEST_CASE("capacitance study checks the analytic column and excision") {
    const auto cfg = cfg_from(
        "label = capcase\n"
        "curve = disk radius=0.5 n=64\n"
        "gamma = 0 0.01\n"
        "excision_inner = 0.25\n");
    const auto rep = run_capacitance(cfg);
    CHECK(rep.failures == 0);
    CHECK(count_rows(rep, "capacitance") == 2);
    for (const auto& r : rep.rows)
        if (r.metric == "capacitance") {
            CHECK(r.pass == "pass");
            REQUIRE(r.reference.has_value());
            CHECK(std::abs(*r.value - *r.reference) <= 1e-7 * *r.reference);
        }
    CHECK(count_rows(rep, "excision_rel_gap") == 2);

    // a single positive gamma cannot support a 4-point slope fit: n/a path
    const CsvRow* slope = find_row(rep, "expansion_residual_slope");
    REQUIRE(slope != nullptr);
    CHECK(slope->pass.empty());
    bool has_na = false;
    for (const auto& line : rep.lines)
        if (line.find("n/a") != std::string::npos) has_na = true;
    CHECK(has_na);

    CHECK_THROWS_WITH_AS(
        run_capacitance(cfg_from("curve = kite scale=0.3 n=64\nexcision_inner = 0.1\n")),
        doctest::Contains("requires a single disk"), config_error);
}

TEST_CASE("convergence study fits the documented small-gamma rates") {
    const auto cfg = cfg_from(
        "label = conv\n"
        "curve = disk radius=0.5 n=64\n"
        "gamma_grid = 0.001 0.1 5 log\n"
        "annulus = 0.52 2 3 16\n");  // first ring violates clearance on purpose
    const auto rep = run_convergence(cfg);
    CHECK(rep.failures == 0);
    CHECK(rep.warnings == 16);  // the dropped ring is counted, not fatal

    const struct { const char* name; double target; } slopes[] = {
        {"slope_density", 1.0},
        {"slope_field", 1.0},
        {"slope_gradient", 1.0},
        {"slope_first_order_remainder", 2.0},
    };
    for (const auto& s : slopes) {
        const CsvRow* r = find_row(rep, s.name);
        REQUIRE(r != nullptr);
        CHECK(r->pass == "pass");
        CHECK(std::abs(*r->value - s.target) <= 0.15);
    }
    // the centered disk has zero interior shift at every gamma: no rate to fit
    const CsvRow* shift = find_row(rep, "slope_interior_shift");
    REQUIRE(shift != nullptr);
    CHECK(shift->pass.empty());
}

TEST_CASE("blowup study maps the gradient regimes on the coarse grid") {
    // the smallest eps needs n = 256: the half-spacing probe offsets on both
    // faces must not swallow the 0.025 gap
    const auto cfg = cfg_from(
        "label = blowsmall\n"
        "curve = disk radius=1 n=256\n"
        "curve = disk radius=1 n=256\n"
        "allow_large_geometry = true\n"
        "gamma = 0.000001 0.025 0.05 0.1 0.2\n"
        "eps = 0.2 0.1 0.05 0.025\n"
        "segment_samples = 17\n"
        "threads = 2\n");
    const auto rep = run_blowup(cfg);
    CHECK(rep.failures == 0);
    CHECK(count_rows(rep, "gradient_sup") == 20);
    const CsvRow* eps_slope = find_row(rep, "slope_vs_eps_at_gamma_min");
    REQUIRE(eps_slope != nullptr);
    CHECK(std::abs(*eps_slope->value + 0.5) <= 0.1);
    const CsvRow* plateau = find_row(rep, "plateau_ratio");
    REQUIRE(plateau != nullptr);
    CHECK(*plateau->value < 2.0);
    const CsvRow* diag = find_row(rep, "slope_diagonal");
    REQUIRE(diag != nullptr);
    CHECK(std::abs(*diag->value + 0.5) <= 0.1);
    // every gradient_sup cell is a finite positive number
    for (const auto& r : rep.rows)
        if (r.metric == "gradient_sup") {
            CHECK(*r.value > 0);
            CHECK(std::isfinite(*r.value));
        }
}

TEST_CASE("workspace wires every operator to one assembly") {
    auto w = make_workspace(
        assemble<double>({build_component(Curve<double>::circle({0, 0}, 0.5), 32)}));
    CHECK(w->single_layer.assembly == &w->assembly);
    CHECK(w->np.assembly == &w->assembly);
    CHECK(w->np_adjoint.assembly == &w->assembly);
    CHECK(w->dtn.assembly == &w->assembly);
    CHECK(w->np.kind == OperatorKind::DoubleLayerTrace);
    CHECK(w->np_adjoint.kind == OperatorKind::AdjointDoubleLayerTrace);
    CHECK(w->single_layer.kind == OperatorKind::SingleLayer);
}
