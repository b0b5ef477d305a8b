// Acceptance gate: one numbered check per release criterion, each printing a
// single [PASS]/[FAIL] line with the measured numbers. Exit status is the
// number of failed criteria (0 = release-ready). Everything runs at desk
// scale; the two study-level criteria consume the shipped config files.

#include "impbond/studies.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <utility>
#include <vector>

using namespace impbond;

namespace {

constexpr double pi = std::numbers::pi;
int g_failures = 0;

std::string fnum(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

void report(int idx, const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", idx, name, detail.c_str());
    if (!ok) ++g_failures;
}

template <typename F>
void criterion(int idx, const char* name, F&& body) {
    try {
        auto [ok, detail] = body();
        report(idx, name, ok, detail);
    } catch (const std::exception& e) {
        report(idx, name, false, std::string("exception: ") + e.what());
    }
}

using Verdict = std::pair<bool, std::string>;

struct DiskLab {
    Assembly<double> a;
    BoundaryOperator<double> S, K, Kstar;
    DtnOperator<double> dtn;
    TransmissionSetup<double> setup;

    explicit DiskLab(double R, int n)
        : a(assemble<double>({build_component(Curve<double>::circle({0, 0}, R), n)})) {
        S = assemble_single_layer(a);
        std::tie(K, Kstar) = assemble_np(a);
        dtn = build_dtn(a, S, Kstar);
        setup = make_setup(a, S, Kstar, dtn, HarmonicBackground<double>::linear({1, 0}));
    }
};

double measured_dipole(const TransmissionSolution<double>& sol) {
    Mat2X<double> far(2, 1);
    far.col(0) = Vec2<double>(1000.0, 0.0);
    return (eval_field(sol, far).values[0] - 1000.0) * 1000.0;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const CsvRow* find_row(const StudyReport& rep, const std::string& metric) {
    for (const auto& r : rep.rows)
        if (r.metric == metric) return &r;
    return nullptr;
}

}  // namespace

int main() {
    const double R = 0.5;
    DiskLab disk(R, 128);

    criterion(1, "disk capacitance matches 2piR/(-RlogR+gamma) to 1e-8", [&]() -> Verdict {
        double worst = 0;
        for (double g : {0.0, 0.01, 0.1, 1.0}) {
            const double got = capacitance_matrix(disk.a, disk.dtn, g).matrix(0, 0);
            const double ref = analytic_disk_capacitance(R, g);
            worst = std::max(worst, std::abs(got - ref) / ref);
        }
        return {worst <= 1e-8, "max rel err " + fnum(worst) + " over gamma in {0,0.01,0.1,1}"};
    });

    criterion(2, "capacitance is invariant under excision of an interior hole",
              [&]() -> Verdict {
        double worst = 0;
        for (double g : {0.0, 0.1})
            worst = std::max(worst, excision_invariance_check(
                                        Curve<double>::circle({0, 0}, 0.5),
                                        Curve<double>::circle({0, 0}, 0.25), g, 128).rel_gap);
        return {worst <= 1e-7, "max rel gap " + fnum(worst) + " (tol 1e-7)"};
    });

    criterion(3, "capacitance matrices are SPD across geometries and gamma", [&]() -> Verdict {
        std::vector<std::vector<BoundaryComponent<double>>> geoms;
        geoms.push_back({build_component(Curve<double>::circle({0, 0}, 0.5), 128)});
        geoms.push_back({build_component(Curve<double>::circle({-0.45, 0}, 0.2), 128),
                         build_component(Curve<double>::circle({0.45, 0}, 0.2), 128)});
        geoms.push_back({build_component(Curve<double>::ellipse({-0.4, 0}, 0.25, 0.15), 128),
                         build_component(Curve<double>::kite({0.35, 0}, 0.15), 128)});
        double worst_sym = 0, min_eig = 1e300;
        for (auto& comps : geoms) {
            auto w = make_workspace(assemble<double>(std::move(comps)));
            for (double g : {0.0, 1e-3, 0.1, 1.0, 10.0}) {
                const MatX<double> C = capacitance_matrix(w->assembly, w->dtn, g).matrix;
                worst_sym = std::max(worst_sym, (C - C.transpose()).norm() / C.norm());
                const Eigen::SelfAdjointEigenSolver<MatX<double>> eig(0.5 * (C + C.transpose()));
                min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
            }
        }
        return {worst_sym <= 1e-8 && min_eig > 0,
                "max asymmetry " + fnum(worst_sym) + ", min eigenvalue " + fnum(min_eig)};
    });

    criterion(4, "resolvent family is a weighted-L2 contraction", [&]() -> Verdict {
        double worst = 0;
        for (const Curve<double>& q :
             {Curve<double>::circle({0, 0}, 0.5), Curve<double>::kite({0, 0}, 0.3)})
            for (int n : {64, 128}) {
                auto w = make_workspace(assemble<double>({build_component(q, n)}));
                const int m = w->assembly.num_nodes;
                for (double g : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
                    const MatX<double> res =
                        (MatX<double>::Identity(m, m) + g * w->dtn.map).inverse();
                    worst = std::max(worst, weighted_operator_norm(w->assembly, res));
                }
            }
        return {worst <= 1.0 + 1e-6, "max operator norm " + fnum(worst) + " (tol 1+1e-6)"};
    });

    criterion(5, "trace identities hold and sharpen spectrally under refinement",
              [&]() -> Verdict {
        double k1_err = 0, ke_err = 0;
        for (const Curve<double>& q :
             {Curve<double>::circle({0, 0}, 0.5), Curve<double>::kite({0, 0}, 0.3)}) {
            auto w = make_workspace(assemble<double>({build_component(q, 128)}));
            const VecX<double> k1 =
                w->np.matrix * VecX<double>::Ones(w->assembly.num_nodes);
            k1_err = std::max(k1_err, (k1.array() - 0.5).abs().maxCoeff() / 0.5);
            const VecX<double> e = w->dtn.indicators.col(0);
            ke_err = std::max(ke_err,
                              weighted_norm(w->assembly,
                                            VecX<double>(w->np_adjoint.matrix * e - 0.5 * e)) /
                                  weighted_norm(w->assembly, e));
        }
        auto plemelj_at = [](const Curve<double>& q, int n) {
            const auto a = assemble<double>({build_component(q, n)});
            const auto S = assemble_single_layer(a);
            const auto [K, Kstar] = assemble_np(a);
            return plemelj_residual(S, K, Kstar);
        };
        const double circ = plemelj_at(Curve<double>::circle({0, 0}, 0.5), 64);
        const double kite64 = plemelj_at(Curve<double>::kite({0, 0}, 0.3), 64);
        const double kite128 = plemelj_at(Curve<double>::kite({0, 0}, 0.3), 128);
        const bool ok = k1_err <= 1e-8 && ke_err <= 1e-8 && circ <= 1e-8 &&
                        kite128 <= 1e-5 && kite64 / kite128 >= 1e2;
        return {ok, "K[1] err " + fnum(k1_err) + ", K*e err " + fnum(ke_err) +
                        ", symmetrization circle " + fnum(circ) + ", kite " + fnum(kite64) +
                        " -> " + fnum(kite128) + " under doubling (need >= 1e2 drop)"};
    });

    criterion(6, "disk transmission solve reproduces the dipole closed form",
              [&]() -> Verdict {
        double worst_dip = 0, worst_int = 0;
        for (double g : {0.0, 0.01, 0.1, 1.0}) {
            const auto sol = solve_with(disk.setup, g);
            const double ref = R * R * (g - R) / (R + g);
            worst_dip = std::max(worst_dip,
                                 std::abs(measured_dipole(sol) - ref) / std::abs(ref));
            worst_int = std::max(worst_int, std::abs(sol.interior_values()[0]));
        }
        return {worst_dip <= 1e-7 && worst_int <= 1e-9,
                "dipole rel err " + fnum(worst_dip) + ", interior state " + fnum(worst_int)};
    });

    criterion(7, "gamma -> 0 convergence rates are 1,1,1 and 2 (remainder)",
              [&]() -> Verdict {
        const auto cfg = load_config(std::string(IMPBOND_CONFIG_DIR) + "/convergence.cfg");
        const auto rep = run_convergence(cfg);
        const struct { const char* name; double target; } want[] = {
            {"slope_density", 1.0},
            {"slope_field", 1.0},
            {"slope_gradient", 1.0},
            {"slope_first_order_remainder", 2.0},
        };
        std::string detail;
        bool ok = rep.failures == 0;
        for (const auto& wrow : want) {
            const CsvRow* r = find_row(rep, wrow.name);
            if (!r || !r->value) return {false, std::string("missing row ") + wrow.name};
            ok = ok && std::abs(*r->value - wrow.target) <= 0.15;
            if (!detail.empty()) detail += ", ";
            detail += fnum(*r->value);
        }
        return {ok, "slopes {" + detail + "} vs {1,1,1,2} within 0.15"};
    });

    criterion(8, "first-order term gives the gamma-derivative of the field",
              [&]() -> Verdict {
        const auto term = first_order_term(disk.a, disk.dtn, disk.setup.phi0);
        Mat2X<double> pts(2, 3 * 12);
        int col = 0;
        for (double r : {0.8, 1.5, 4.0})
            for (int k = 0; k < 12; ++k) {
                const double th = (2 * k + 1) * pi / 12.0;
                pts.col(col++) = Vec2<double>(r * std::cos(th), r * std::sin(th));
            }
        const auto v1 = eval_first_order(term, pts);
        double worst = 0;
        for (int p = 0; p < pts.cols(); ++p) {
            const double ref = 2 * R * pts(0, p) / pts.col(p).squaredNorm();
            worst = std::max(worst, std::abs(v1.values[p] - ref));
        }
        // same derivative read off the far field: dc/dgamma(0) = 2R
        const double dg = 1e-5;
        const double fd = (measured_dipole(solve_with(disk.setup, dg)) -
                           measured_dipole(solve_with(disk.setup, 0.0))) / dg;
        const bool ok = worst <= 1e-6 && std::abs(fd - 2 * R) <= 1e-3;
        return {ok, "max |v1 - 2R x1/|x|^2| = " + fnum(worst) + ", dc/dgamma(0) = " + fnum(fd) +
                        " vs " + fnum(2 * R)};
    });

    criterion(9, "perturbation far field carries 2R^2 gamma/(R+gamma) and decays like 1/r",
              [&]() -> Verdict {
        const double g = 0.1;
        const auto sa = solve_with(disk.setup, g);
        const auto sb = solve_with(disk.setup, 0.0);
        const auto rows = decay_at_infinity(sa, sb, {10.0, 100.0, 1000.0});
        const double ref = 2 * R * R * g / (R + g);  // = 1/12
        double worst = 0, vmin = 1e300, vmax = 0;
        for (const auto& row : rows) {
            worst = std::max(worst, std::abs(row.value_scaled - ref) / ref);
            worst = std::max(worst, std::abs(row.gradient_scaled - ref) / ref);
            vmin = std::min(vmin, row.value_scaled);
            vmax = std::max(vmax, row.value_scaled);
        }
        const double flat = vmax / vmin - 1.0;
        return {worst <= 1e-4 && flat <= 0.01,
                "max rel err " + fnum(worst) + " vs 1/12, flatness " + fnum(flat)};
    });

    criterion(10, "two-disk gradient map shows the three bonding regimes",
              [&]() -> Verdict {
        const auto cfg = load_config(std::string(IMPBOND_CONFIG_DIR) + "/blowup.cfg");
        const auto t0 = std::chrono::steady_clock::now();
        const auto rep = run_blowup(cfg);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const CsvRow* eps_slope = find_row(rep, "slope_vs_eps_at_gamma_min");
        const CsvRow* plateau = find_row(rep, "plateau_ratio");
        const CsvRow* diag = find_row(rep, "slope_diagonal");
        if (!eps_slope || !plateau || !diag || !eps_slope->value || !plateau->value ||
            !diag->value)
            return {false, "missing regime rows"};
        const bool ok = rep.failures == 0 && secs < 60.0 &&
                        *eps_slope->value >= -0.6 && *eps_slope->value <= -0.4 &&
                        *plateau->value < 2.0 &&
                        *diag->value >= -0.6 && *diag->value <= -0.4;
        return {ok, "eps-slope " + fnum(*eps_slope->value) + ", plateau ratio " +
                        fnum(*plateau->value) + ", diagonal slope " + fnum(*diag->value) +
                        ", " + fnum(secs) + "s (< 60s)"};
    });

    criterion(11, "CLI verify run is reproducible byte for byte", [&]() -> Verdict {
        namespace fs = std::filesystem;
        const fs::path work(IMPBOND_WORK_DIR);
        std::string csv[2];
        for (int run = 0; run < 2; ++run) {
            const fs::path dir = work / ("run" + std::to_string(run + 1));
            fs::create_directories(dir);
            const std::string cmd = std::string("\"") + IMPBOND_CLI_PATH +
                                    "\" verify --config \"" + IMPBOND_CONFIG_DIR +
                                    "/verify.cfg\" --out \"" + dir.string() + "\" > \"" +
                                    (dir / "stdout.txt").string() + "\" 2>&1";
            const int rc = std::system(cmd.c_str());
            const int exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
            if (exit_code != 0)
                return {false, "run " + std::to_string(run + 1) + " exited " +
                                   std::to_string(exit_code) + " (see " +
                                   (dir / "stdout.txt").string() + ")"};
            csv[run] = slurp(dir / "verify.csv");
        }
        const bool ok = !csv[0].empty() && csv[0] == csv[1];
        return {ok, csv[0].empty() ? "verify.csv is empty"
                                   : (csv[0] == csv[1] ? fnum(double(csv[0].size())) +
                                                             " bytes, identical across runs"
                                                       : "runs differ")};
    });

    std::printf("%s: %d of 11 criteria failed\n", g_failures == 0 ? "ACCEPTED" : "REJECTED",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
