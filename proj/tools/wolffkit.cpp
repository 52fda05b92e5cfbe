#include <wolffkit/wolffkit.hpp>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <iostream>

namespace wk = wolffkit;
namespace io = wolffkit::io;
using io::json;
namespace fs = std::filesystem;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;
constexpr int kInconclusive = 3;

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

/// Run record written next to the outputs of every command, including failures.
struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    std::string config;
    json inputs = json::array();
    json outputs = json::array();
    json parameters = json::object();
    std::uint64_t seed = 0;
    fs::path path;
    std::string error;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void input(const std::string& p) {
        if (p.empty()) return;
        std::string digest;
        try {
            digest = sha256_hex(io::read_text(p));
        } catch (const wk::InputError&) {
            digest = "";
        }
        inputs.push_back(json{{"path", p}, {"sha256", digest.empty() ? json(nullptr) : json(digest)}});
    }
    void output(const fs::path& p) { outputs.push_back(p.string()); }

    void write(int code) const {
        if (path.empty()) return;
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json j{{"schema", io::kSchema},
               {"command", command},
               {"argv", argv},
               {"config", config.empty() ? json(nullptr) : json(config)},
               {"inputs", inputs},
               {"outputs", outputs},
               {"parameters", parameters},
               {"seed", seed},
               {"wall_time_s", wall},
               {"exit_code", code}};
        if (!error.empty()) j["error"] = error;
        try {
            io::write_json(path, j);
        } catch (const std::exception& e) {
            std::cerr << "warning: manifest not written: " << e.what() << "\n";
        }
    }
};

wk::SolveConfig solve_config_from_json(const json& j) {
    wk::SolveConfig cfg;
    cfg.p = j.value("p", 2.0);
    cfg.grid = io::domain_from_json(j.at("grid"));
    if (j.contains("ball") && !j.at("ball").is_null()) {
        cfg.ball = wk::BallMask{j.at("ball").at("center").get<wk::Point>(), j.at("ball").at("radius").get<double>()};
    }
    cfg.ladder_levels = j.value("ladder_levels", cfg.ladder_levels);
    cfg.final_bandwidth = j.value("final_bandwidth", cfg.final_bandwidth);
    cfg.min_bandwidth_cells = j.value("min_bandwidth_cells", cfg.min_bandwidth_cells);
    cfg.max_newton = j.value("max_newton", cfg.max_newton);
    cfg.damping = j.value("damping", cfg.damping);
    cfg.tolerance = j.value("tolerance", cfg.tolerance);
    cfg.eps_grad = j.value("eps_grad", cfg.eps_grad);
    cfg.validate();
    return cfg;
}

json solve_config_to_json(const wk::SolveConfig& cfg) {
    json j{{"p", cfg.p},
           {"grid", io::domain_to_json(cfg.grid)},
           {"ladder_levels", cfg.ladder_levels},
           {"final_bandwidth", cfg.final_bandwidth},
           {"min_bandwidth_cells", cfg.min_bandwidth_cells},
           {"max_newton", cfg.max_newton},
           {"damping", cfg.damping},
           {"tolerance", cfg.tolerance},
           {"eps_grad", cfg.regularization()}};
    if (cfg.ball) j["ball"] = json{{"center", cfg.ball->center}, {"radius", cfg.ball->radius}};
    return j;
}

json bundle_to_json(const wk::SolutionBundle& b) {
    json levels = json::array();
    for (const auto& d : b.levels) {
        levels.push_back(json{{"level", d.level},
                              {"bandwidth", d.bandwidth},
                              {"truncation", io::number_to_json(d.truncation)},
                              {"data_mass", d.data_mass},
                              {"energy", d.energy},
                              {"residual", d.residual},
                              {"newton_iterations", d.newton_iterations},
                              {"converged", d.converged},
                              {"absorption_l1", d.absorption_l1},
                              {"u_l1_change", d.u_l1_change},
                              {"absorption_l1_change", d.absorption_l1_change}});
    }
    return json{{"converged", b.converged},
                {"residual", b.residual},
                {"newton_iterations", b.newton_iterations},
                {"energy_trace", b.energy_trace},
                {"levels", levels},
                {"ladder", wk::to_string(b.ladder)},
                {"sandwich_violation", b.sandwich_violation},
                {"notes", b.notes}};
}

wk::Measure positive_only(const wk::SignedMeasure& s, const char* what) {
    if (!s.negative.empty()) std::cerr << "note: " << what << " uses the positive part only\n";
    return s.positive;
}

// ---- wolff ------------------------------------------------------------------------

struct WolffArgs {
    std::string measure, grid, out, R = "inf", op = "wolff";
    double alpha = 1.0, p = 2.0, eta = 0.0;
};

int cmd_wolff(const WolffArgs& a, Manifest& m) {
    m.input(a.measure);
    m.input(a.grid);
    const wk::Domain grid = io::domain_from_json(io::read_json(a.grid));
    const wk::Radius R = io::radius_from_string(a.R);
    m.parameters = {{"alpha", a.alpha}, {"p", a.p}, {"eta", a.eta}, {"R", io::radius_to_json(R)}, {"operator", a.op}};
    wk::ScalarField field;
    if (a.op == "bessel") {
        wk::require(a.alpha > 0.0 && a.alpha < grid.dim(), "0 < alpha < N");
        const wk::Measure mu = positive_only(io::read_measure(a.measure), "bessel");
        field = wk::bessel_potential(mu, a.alpha, grid);
    } else {
        const auto pp = wk::PotentialParams::make(grid.dim(), a.alpha, a.p, R, a.eta);
        const wk::Measure mu = positive_only(io::read_measure(a.measure), "wolff");
        wk::PotentialKind kind;
        if (a.op == "wolff") kind = wk::PotentialKind::Wolff;
        else if (a.op == "maximal") kind = wk::PotentialKind::FracMaximal;
        else if (a.op == "eta-maximal") kind = wk::PotentialKind::EtaMaximal;
        else throw wk::ParameterError("operator must be wolff, maximal, eta-maximal or bessel");
        if (kind == wk::PotentialKind::EtaMaximal) pp.require_eta_admissible();
        field = wk::potential_field(mu, pp, grid, kind);
    }
    io::write_field_csv(a.out, field);
    m.output(a.out);
    return kPass;
}

// ---- solve ------------------------------------------------------------------------

struct SolveArgs {
    std::string measure, config, out_dir = "solve-out";
};

int cmd_solve(const SolveArgs& a, Manifest& m) {
    m.input(a.measure);
    m.input(a.config);
    m.config = a.config;
    const json cj = io::read_json(a.config);
    const wk::SolveConfig cfg = solve_config_from_json(cj);
    const wk::AbsorptionSpec g = io::absorption_from_json(cj.value("absorption", json{{"kind", "none"}}));
    const wk::SignedMeasure mu = io::read_measure(a.measure);
    m.parameters = {{"config", solve_config_to_json(cfg)}, {"absorption", io::absorption_to_json(g)}};

    const wk::SolutionBundle b = wk::solve_measure(mu, g, cfg);
    const fs::path dir = a.out_dir;
    io::write_field_csv(dir / "u.csv", b.u);
    io::write_field_csv(dir / "absorption.csv", b.absorption);
    m.output(dir / "u.csv");
    m.output(dir / "absorption.csv");

    json report = bundle_to_json(b);
    report["schema"] = io::kSchema;
    const auto table = wk::truncation_energy_table(b.u, cfg.p, {1.0, 2.0, 4.0, 8.0});
    report["truncation_energy"] = json{{"k", table.ks}, {"value", table.values}, {"max", table.max_value}};
    if (mu.positive.density || mu.negative.density || mu.positive.atoms.size() + mu.negative.atoms.size() < 64) {
        const auto pp = wk::PotentialParams::make(cfg.grid.dim(), 1.0, cfg.p,
                                                  wk::Radius::finite(2.0 * cfg.domain_diameter()));
        report["pointwise_bound"] = io::report_to_json(wk::pointwise_bound_check(b.u, mu, pp, cfg.ball));
    }
    io::write_json(dir / "report.json", report);
    m.output(dir / "report.json");
    const bool ok = b.ladder == wk::LadderStatus::Converged;
    if (!ok) std::cerr << "solver did not converge (" << wk::to_string(b.ladder) << "); see " << (dir / "report.json") << "\n";
    return ok ? kPass : kFail;
}

// ---- capacity ---------------------------------------------------------------------

struct CapacityArgs {
    std::string grid, out_dir = "capacity-out";
    std::vector<double> box;
    std::vector<std::size_t> cells;
    double alpha = 2.0, s = 2.0, q = 2.0, step = 0.3, tolerance = 1e-5;
    int max_iter = 3000;
};

int cmd_capacity(const CapacityArgs& a, Manifest& m) {
    m.input(a.grid);
    wk::CapacityProblem prob;
    prob.grid = io::domain_from_json(io::read_json(a.grid));
    prob.alpha = a.alpha;
    prob.lp = wk::LorentzParams::make(a.s, a.q);
    prob.opt.max_iterations = a.max_iter;
    prob.opt.step = a.step;
    prob.opt.tolerance = a.tolerance;
    prob.E = a.cells;
    const int n = prob.grid.dim();
    if (!a.box.empty()) {
        wk::require(static_cast<int>(a.box.size()) == 2 * n, "box needs 2N numbers (lo then hi)");
        prob.grid.for_cells_in_box(std::span<const double>(a.box.data(), n),
                                   std::span<const double>(a.box.data() + n, n),
                                   [&](std::size_t c) { prob.E.push_back(c); });
    }
    std::sort(prob.E.begin(), prob.E.end());
    prob.E.erase(std::unique(prob.E.begin(), prob.E.end()), prob.E.end());
    m.parameters = {{"alpha", a.alpha}, {"s", a.s}, {"q", a.q}, {"cells", prob.E.size()}, {"max_iter", a.max_iter}};

    const wk::CapacityResult r = wk::capacity_estimate(prob);
    const fs::path dir = a.out_dir;
    json j{{"schema", io::kSchema},
           {"value", r.value},
           {"converged", r.converged},
           {"inconclusive", !r.converged},
           {"heuristic", r.heuristic},
           {"dual_gap", r.dual_gap},
           {"iterations", r.iterations},
           {"target_cells", prob.E},
           {"fingerprint", r.fingerprint}};
    io::write_json(dir / "capacity.json", j);
    io::write_field_csv(dir / "argmin.csv", r.argmin);
    std::string trace = "iteration,objective,margin\n";
    for (const auto& t : r.trace) {
        trace += std::to_string(t.iteration) + "," + io::format_double(t.objective) + "," + io::format_double(t.margin) + "\n";
    }
    io::write_text(dir / "trace.csv", trace);
    for (const char* f : {"capacity.json", "argmin.csv", "trace.csv"}) m.output(dir / f);
    std::cout << "capacity " << io::format_double(r.value) << (r.converged ? "" : " (inconclusive)") << "\n";
    return kPass;
}

// ---- verify -----------------------------------------------------------------------

struct VerifyArgs {
    std::string suite = "norm-equivalence", out_dir = "verify-out";
    int res = 0;
    int count = 50;
};

int cmd_verify(const VerifyArgs& a, Manifest& m) {
    wk::FitReport rep;
    m.parameters = {{"suite", a.suite}, {"res", a.res}, {"count", a.count}};
    if (a.suite == "norm-equivalence") {
        const auto ms = wk::random_atomic_measures(a.count, 3, 1, 10, 1.0, 0.1, 10.0, m.seed);
        const auto pp = wk::PotentialParams::make(3, 1.0, 2.0, wk::Radius::finite(1.0));
        rep = wk::verify_norm_equivalence(ms, pp, wk::LorentzParams::make(2.0, 2.0),
                                          wk::Domain::cube(3, 2.0, a.res > 0 ? a.res : 48));
    } else if (a.suite == "levelset") {
        wk::Measure one;
        one.atoms.push_back({wk::Point{0.0, 0.0, 0.0}, 1.0});
        const auto pp = wk::PotentialParams::make(3, 1.0, 2.0, wk::Radius::finite(1.0), 0.0);
        rep = wk::verify_levelset_decay(one, pp, {0.5, 1.0, 2.0, 4.0}, {0.4, 0.2, 0.1},
                                        wk::Domain::cube(3, 1.0, a.res > 0 ? a.res : 128));
    } else if (a.suite == "exp-integrability") {
        wk::Measure one;
        one.atoms.push_back({wk::Point{0.0, 0.0, 0.0}, 1.0});
        const auto pp = wk::PotentialParams::make(3, 1.0, 2.0, wk::Radius::finite(1.0), 0.0);
        const double d0 = wk::exp_integrability_delta0(pp);
        rep = wk::verify_exp_integrability(one, pp, wk::BallMask{wk::Point{0.0, 0.0, 0.0}, 0.5},
                                           {0.25 * d0, 0.5 * d0, 0.75 * d0, 0.9 * d0},
                                           wk::Domain::cube(3, 1.0, a.res > 0 ? a.res : 128));
    } else {
        throw wk::ParameterError("suite must be norm-equivalence, levelset or exp-integrability");
    }
    const fs::path dir = a.out_dir;
    io::write_json(dir / "report.json", io::report_to_json(rep));
    std::string table;
    for (std::size_t i = 0; i < rep.columns.size(); ++i) table += (i ? "," : "") + rep.columns[i];
    table += "\n";
    for (const auto& row : rep.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) table += (i ? "," : "") + io::format_double(row[i]);
        table += "\n";
    }
    io::write_text(dir / "table.csv", table);
    m.output(dir / "report.json");
    m.output(dir / "table.csv");
    std::cout << rep.experiment << ": " << (rep.pass ? "pass" : "fail") << "\n";
    return rep.pass ? kPass : kFail;
}

// ---- check-good -------------------------------------------------------------------

struct CheckArgs {
    std::string measure, nu, config, c_report, out_dir = "check-out";
    double c = 0.0;
    double probe_eps = 0.25;
    double probe_delta = 0.1;
};

int cmd_check_good(const CheckArgs& a, Manifest& m) {
    m.input(a.measure);
    m.input(a.nu);
    m.input(a.config);
    m.input(a.c_report);
    m.config = a.config;
    const json cj = io::read_json(a.config);
    const wk::SolveConfig cfg = solve_config_from_json(cj);
    const wk::AbsorptionSpec g = io::absorption_from_json(cj.value("absorption", json{{"kind", "none"}}));
    const wk::SignedMeasure base = io::read_measure(a.measure);
    const wk::SignedMeasure extra = a.nu.empty() ? wk::SignedMeasure{} : io::read_measure(a.nu);
    const wk::SignedMeasure mu{base.positive + extra.positive, base.negative + extra.negative};
    const int N = cfg.grid.dim();
    m.parameters = {{"config", solve_config_to_json(cfg)}, {"absorption", io::absorption_to_json(g)}};
    const fs::path dir = a.out_dir;
    json out{{"schema", io::kSchema}};
    int code = kInconclusive;

    auto run_ladder = [&]() {
        const wk::SolutionBundle b = wk::solve_measure(mu, g, cfg);
        out["ladder"] = bundle_to_json(b);
        return b.ladder;
    };

    if (g.kind == wk::AbsorptionSpec::Kind::Exponential) {
        double c = a.c;
        if (!a.c_report.empty()) c = io::report_from_json(io::read_json(a.c_report)).constant("c_hat");
        wk::require(c > 0.0, "c > 0 (give --c or --c-report)");
        // nu = the atoms plus any --nu measure; the grid densities play the role of f
        wk::CriterionReport worst;
        bool first = true;
        for (int sign = 0; sign < 2; ++sign) {
            const wk::Measure& b = sign == 0 ? base.positive : base.negative;
            const wk::Measure nu = wk::Measure{b.atoms, std::nullopt} + (sign == 0 ? extra.positive : extra.negative);
            const wk::CriterionReport r = wk::exp_good_criterion(nu, N, cfg.p, g.tau, g.lambda, c, cfg.grid,
                                                                 cfg.domain_diameter());
            if (first || r.verdict == wk::Verdict::Fail) worst = r;
            first = false;
        }
        out["criterion"] = io::criterion_to_json(worst);
        if (worst.verdict == wk::Verdict::Fail) {
            code = kFail;
        } else {
            // the criterion is sufficient; a divergent ladder contradicts it
            code = run_ladder() == wk::LadderStatus::Divergent ? kInconclusive : kPass;
        }
    } else if (g.kind == wk::AbsorptionSpec::Kind::Power) {
        const auto [alpha, s, ql] = wk::power_capacity_indices(N, cfg.p, g.q, g.beta);
        out["capacity_indices"] = json{{"alpha", alpha}, {"s", s}, {"q", ql}};
        if (N >= 3) {
            const wk::IntegralTest it = wk::subcritical_integral(g, N);
            out["subcritical_integral"] = json{{"finite", it.finite}, {"value", it.value}};
        }
        const wk::LadderStatus st = run_ladder();
        if (st == wk::LadderStatus::Converged) {
            code = kPass;
        } else if (st == wk::LadderStatus::Divergent) {
            code = kFail;
        } else {
            const wk::Domain probe_grid = wk::Domain::cube(N, 1.0, 16);
            wk::Measure atoms{mu.positive.atoms, std::nullopt};
            atoms.atoms.insert(atoms.atoms.end(), mu.negative.atoms.begin(), mu.negative.atoms.end());
            const wk::CriterionReport pr = wk::capacity_probe(atoms, alpha, wk::LorentzParams::make(s, ql),
                                                              probe_grid, a.probe_eps, a.probe_delta);
            out["probe"] = io::criterion_to_json(pr);
            code = pr.verdict == wk::Verdict::Fail ? kFail : kInconclusive;
        }
    } else {
        const wk::LadderStatus st = run_ladder();
        code = st == wk::LadderStatus::Converged ? kPass : kFail;
    }
    out["exit_code"] = code;
    out["verdict"] = code == kPass ? "pass" : code == kFail ? "fail" : "inconclusive";
    io::write_json(dir / "report.json", out);
    m.output(dir / "report.json");
    std::cout << "check-good: " << out["verdict"].get<std::string>() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wolffkit: Wolff potentials, Lorentz-Bessel capacities and p-Laplacian solves"};
    app.require_subcommand(1);
    Manifest man;
    for (int i = 0; i < argc; ++i) man.argv.emplace_back(argv[i]);
    std::string manifest_path;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--seed", man.seed, "random seed")->default_val(0);
        sub->add_option("--manifest", manifest_path, "manifest path (default: next to the outputs)");
    };

    WolffArgs wa;
    auto* w = app.add_subcommand("wolff", "evaluate a potential on a grid");
    w->add_option("--measure", wa.measure, "measure JSON")->required();
    w->add_option("--grid", wa.grid, "domain JSON")->required();
    w->add_option("--alpha", wa.alpha, "order alpha");
    w->add_option("--p", wa.p, "exponent p");
    w->add_option("--R", wa.R, "truncation radius or inf");
    w->add_option("--eta", wa.eta, "eta for the eta-maximal operator");
    w->add_option("--operator", wa.op, "wolff | maximal | eta-maximal | bessel");
    w->add_option("--out", wa.out, "output CSV")->required();
    common(w);

    SolveArgs sa;
    auto* s = app.add_subcommand("solve", "solve -Delta_p u + g(x,u) = mu by the approximation ladder");
    s->add_option("--measure", sa.measure, "measure JSON")->required();
    s->add_option("--config", sa.config, "solver config JSON")->required();
    s->add_option("--out-dir", sa.out_dir, "output directory");
    common(s);

    CapacityArgs ca;
    auto* c = app.add_subcommand("capacity", "estimate C_{alpha,s,q}(E)");
    c->add_option("--grid", ca.grid, "domain JSON")->required();
    c->add_option("--alpha", ca.alpha, "Bessel order");
    c->add_option("--s", ca.s, "Lorentz exponent s");
    c->add_option("--q", ca.q, "Lorentz exponent q");
    c->add_option("--box", ca.box, "target set: cells with centre in [lo, hi] (2N numbers)")->delimiter(',');
    c->add_option("--cells", ca.cells, "target set: cell indices")->delimiter(',');
    c->add_option("--max-iter", ca.max_iter, "iteration cap");
    c->add_option("--step", ca.step, "step constant");
    c->add_option("--tolerance", ca.tolerance, "relative change over the window");
    c->add_option("--out-dir", ca.out_dir, "output directory");
    common(c);

    VerifyArgs va;
    auto* v = app.add_subcommand("verify", "run a verification suite");
    v->add_option("--suite", va.suite, "norm-equivalence | levelset | exp-integrability");
    v->add_option("--res", va.res, "grid resolution per axis (0: suite default)");
    v->add_option("--count", va.count, "batch size (norm-equivalence)");
    v->add_option("--out-dir", va.out_dir, "output directory");
    common(v);

    CheckArgs ka;
    auto* k = app.add_subcommand("check-good", "good-measure criteria; exit 0 pass, 1 fail, 3 inconclusive");
    k->add_option("--measure", ka.measure, "measure JSON")->required();
    k->add_option("--nu", ka.nu, "extra measure counted in nu");
    k->add_option("--config", ka.config, "solver config JSON (with absorption)")->required();
    k->add_option("--c", ka.c, "pointwise constant for the exponential threshold");
    k->add_option("--c-report", ka.c_report, "FitReport JSON holding c_hat");
    k->add_option("--probe-eps", ka.probe_eps, "largest probe cube side");
    k->add_option("--probe-delta", ka.probe_delta, "minimal atom weight probed");
    k->add_option("--out-dir", ka.out_dir, "output directory");
    common(k);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    int code = kFail;
    try {
        if (*w) {
            man.command = "wolff";
            man.path = manifest_path.empty() ? fs::path(wa.out + ".manifest.json") : fs::path(manifest_path);
            code = cmd_wolff(wa, man);
        } else if (*s) {
            man.command = "solve";
            man.path = manifest_path.empty() ? fs::path(sa.out_dir) / "manifest.json" : fs::path(manifest_path);
            code = cmd_solve(sa, man);
        } else if (*c) {
            man.command = "capacity";
            man.path = manifest_path.empty() ? fs::path(ca.out_dir) / "manifest.json" : fs::path(manifest_path);
            code = cmd_capacity(ca, man);
        } else if (*v) {
            man.command = "verify";
            man.path = manifest_path.empty() ? fs::path(va.out_dir) / "manifest.json" : fs::path(manifest_path);
            code = cmd_verify(va, man);
        } else if (*k) {
            man.command = "check-good";
            man.path = manifest_path.empty() ? fs::path(ka.out_dir) / "manifest.json" : fs::path(manifest_path);
            code = cmd_check_good(ka, man);
        }
    } catch (const wk::ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        man.error = e.what();
        code = kUsage;
    } catch (const wk::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        man.error = e.what();
        code = kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        man.error = e.what();
        code = kFail;
    }
    man.write(code);
    return code;
}
