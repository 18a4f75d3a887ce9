#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "switchheat/closed_forms.hpp"
#include "switchheat/config.hpp"
#include "switchheat/errors.hpp"
#include "switchheat/hybrid.hpp"
#include "switchheat/oracles.hpp"
#include "switchheat/spectral.hpp"
#include "switchheat/stats.hpp"
#include "switchheat/switching.hpp"
#include "switchheat/verify.hpp"

namespace {

using switchheat::config_error;
using switchheat::convergence_error;
using switchheat::io_error;
using switchheat::stat_failure;
using switchheat::cli::ExampleKind;
using switchheat::cli::RunConfig;
namespace spectral = switchheat::spectral;
namespace closedform = switchheat::closedform;
namespace verify = switchheat::verify;
namespace stats = switchheat::stats;
namespace hybrid = switchheat::hybrid;
namespace oracle = switchheat::oracle;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open output file: " + path);
    out << content;
    out.flush();
    if (!out) throw io_error("failed writing output file: " + path);
}

// ----------------------------------------------------------------------------
// option plumbing
// ----------------------------------------------------------------------------

struct CommonFlags {
    std::string config_path;
    std::optional<std::string> example;
    std::optional<double> r0, r1, D, L, b, tol;
    std::optional<int> K, G;
    std::optional<std::int64_t> N;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
    int threads = 0;
};

void add_common_flags(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config_path, "JSON config file; flags override its keys");
    sub->add_option("--example", f.example, "example family: dd, dn, or ode1d");
    sub->add_option("--r0", f.r0, "switching rate out of the forcing phase");
    sub->add_option("--r1", f.r1, "switching rate out of the relaxing phase");
    sub->add_option("--D", f.D, "diffusivity");
    sub->add_option("--L", f.L, "interval length");
    sub->add_option("--b", f.b, "boundary amplitude");
    sub->add_option("--K,--modes", f.K, "spectral modes");
    sub->add_option("--N,--samples", f.N, "Monte Carlo sample count");
    sub->add_option("--seed", f.seed, "RNG seed");
    sub->add_option("--G,--grid", f.G, "grid cells (interior points are j*L/G)");
    sub->add_option("--tol", f.tol, "pullback residual tolerance");
    sub->add_option("--output", f.output, "output path prefix; empty prints CSV to stdout");
    sub->add_option("--threads", f.threads, "worker cap for parallel suites (0 = all cores)");
}

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig c;
    if (!f.config_path.empty()) c = switchheat::cli::load_config_file(f.config_path);
    if (f.example) c.example = switchheat::cli::example_from_string(*f.example);
    if (f.r0) c.r0 = *f.r0;
    if (f.r1) c.r1 = *f.r1;
    if (f.D) c.D = *f.D;
    if (f.L) c.L = *f.L;
    if (f.b) c.b = *f.b;
    if (f.K) c.K = *f.K;
    if (f.N) c.N = *f.N;
    if (f.seed) c.seed = *f.seed;
    if (f.G) c.G = *f.G;
    if (f.tol) c.tol = *f.tol;
    if (f.output) c.output = *f.output;
    c.validate();
    return c;
}

verify::McOptions mc_options(const RunConfig& c, int threads) {
    verify::McOptions opts;
    opts.n_samples = c.N;
    opts.seed = c.seed;
    opts.tol = c.tol;
    opts.threads = threads;
    return opts;
}

// ----------------------------------------------------------------------------
// closed-form
// ----------------------------------------------------------------------------

int run_closed_form(const RunConfig& config, const std::string& which, double x, int k,
                    const std::string& family, int n, int m) {
    const auto params = config.params();
    params.validate();

    nlohmann::ordered_json out;
    out["name"] = which;
    out["params"] = {{"r0", params.r0}, {"r1", params.r1}, {"D", params.D},
                     {"L", params.L},   {"b", params.b}};

    if (which == "dn-slope") {
        out["value"] = closedform::dn_slope(params);
    } else if (which == "dd-mean") {
        out["value"] = closedform::dd_mean(params, x);
    } else if (which == "dd-variance") {
        out["value"] = closedform::dd_l2_variance(params);
    } else if (which == "beta-marginal") {
        const auto fam = family == "y1" ? closedform::Family::Y1 : closedform::Family::Y0;
        if (family != "y0" && family != "y1")
            throw config_error("closed-form: --family must be y0 or y1");
        const auto marg = closedform::beta_marginal(params, k, fam);
        out["value"] = nlohmann::ordered_json{
            {"alpha", marg.alpha}, {"beta", marg.beta}, {"scale", marg.scale}};
    } else if (which == "joint-moment") {
        out["value"] = closedform::dd_joint_second_moment(params, n, m);
    } else if (which == "flux") {
        out["value"] = closedform::insect_flux(params);
    } else {
        throw config_error("closed-form: unknown name '" + which + "'");
    }
    std::cout << out.dump() << "\n";
    return 0;
}

// ----------------------------------------------------------------------------
// sample
// ----------------------------------------------------------------------------

std::string csv_header(const char* first, bool scalar, const Eigen::VectorXd& xs) {
    std::ostringstream head;
    head << first;
    if (scalar) {
        head << ",u";
    } else {
        for (Eigen::Index j = 0; j < xs.size(); ++j) head << ",x=" << fmt9(xs[j]);
    }
    head << "\n";
    return head.str();
}

void append_row(std::ostringstream& out, const std::string& first, bool scalar,
                const Eigen::MatrixXd& eval, const spectral::Coeffs& c) {
    out << first;
    if (scalar) {
        out << ',' << fmt17(c[0]);
    } else {
        const Eigen::VectorXd values = eval * c;
        for (Eigen::Index j = 0; j < values.size(); ++j) out << ',' << fmt17(values[j]);
    }
    out << "\n";
}

int run_sample(const RunConfig& config, const std::string& kind,
               const std::vector<double>& times, const std::string& family) {
    const auto params = config.params();
    const auto example = config.spectral_example();
    const int modes = config.effective_modes();
    const bool scalar = config.example == ExampleKind::ode1d;

    auto model = spectral::make_heat_model(example, params, modes);
    Eigen::MatrixXd eval;
    Eigen::VectorXd xs;
    if (!scalar) {
        eval = spectral::evaluation_matrix(model.basis, config.G);
        xs = spectral::interior_grid(params.L, config.G);
    }

    std::ostringstream csv;
    std::ostringstream coeffs;

    if (kind == "path") {
        if (times.empty()) throw config_error("sample path: --times must be nonempty");
        for (double t : times)
            if (!(t >= 0.0) || !std::isfinite(t))
                throw config_error("sample path: times must be nonnegative and finite");
        csv << csv_header("t", scalar, xs);
        const auto laws = switchheat::exponential_laws(params.r0, params.r1);
        switchheat::Environment env(laws, switchheat::RngStream(config.seed));
        for (double t : times) {
            const auto u = hybrid::process_at(model.flows, env, model.zero(), t);
            append_row(csv, fmt17(t), scalar, eval, u);
        }
    } else if (kind == "pullback" || kind == "stationary") {
        if (family != "y0" && family != "y1")
            throw config_error("sample: --family must be y0 or y1");
        const auto target = family == "y1" ? hybrid::PullbackTarget::Y1
                                           : hybrid::PullbackTarget::Y0;
        verify::McOptions opts = mc_options(config, 0);
        verify::StationarySampler sampler(example, params, modes, opts);
        csv << csv_header("sample", scalar, xs);
        for (std::int64_t i = 0; i < config.N; ++i) {
            const auto c = kind == "stationary" ? sampler.stationary(i)
                                                : sampler.attractor(i, target);
            append_row(csv, std::to_string(i), scalar, eval, c);
            if (!config.output.empty())
                coeffs << spectral::to_json(sampler.model().field(c)) << "\n";
        }
    } else {
        throw config_error("sample: unknown kind '" + kind + "'");
    }

    if (config.output.empty()) {
        std::cout << csv.str();
    } else {
        write_file(config.output + ".csv", csv.str());
        if (kind != "path") write_file(config.output + ".coeffs.jsonl", coeffs.str());
    }
    return 0;
}

// ----------------------------------------------------------------------------
// verify
// ----------------------------------------------------------------------------

struct ReportLine {
    std::string text;
    bool effective_fail = false; ///< failed and not smoke-flagged
};

class SuiteRunner {
public:
    SuiteRunner(const RunConfig& config, int threads)
        : config_(config), threads_(threads) {}

    void slope() {
        const auto params = config_.params();
        const bool smoke = config_.N < 100000;
        {
            const double closed = closedform::dn_slope(params);
            const double series = closedform::dn_slope_series(params, 100000);
            stats::StatReport r;
            r.estimate = series;
            r.target = closed;
            r.n = 100000;
            r.z = (series - closed) / (1e-4 * std::abs(closed));
            r.pass = std::abs(r.z) <= 1.0;
            add(verify::report_line("slope", "series_consistency", r), r.pass, false);
        }
        auto opts = mc_options(config_, threads_);
        const double x_max = 0.9375 * params.L;
        const auto r = verify::estimate_dn_slope(params, config_.K, config_.G, x_max, opts);
        add(verify::report_line("slope", "dn_slope_mc", r, smoke), r.pass, smoke);
    }

    void marginals(const std::vector<int>& ks) {
        const auto params = config_.params();
        const bool smoke = config_.N < 10000;
        auto opts = mc_options(config_, threads_);
        const int modes = config_.effective_modes();
        for (int k : ks) {
            for (auto fam : {closedform::Family::Y0, closedform::Family::Y1}) {
                const auto r = verify::ks_beta_marginal(params, modes, k, fam, 0.01, opts);
                const std::string test =
                    std::string(fam == closedform::Family::Y0 ? "y0_k" : "y1_k") +
                    std::to_string(k);
                add(verify::report_line("marginals", test, r, smoke), r.pass, smoke);
            }
        }
    }

    void variance() {
        const bool smoke = config_.N < 100000;
        auto opts = mc_options(config_, threads_);
        const auto r = verify::estimate_l2_variance(spectral::Example::dd, config_.params(),
                                                    config_.K, opts);
        add(verify::report_line("variance", "l2_variance", r, smoke), r.pass, smoke);
    }

    void joint() {
        const bool smoke = config_.N < 100000;
        auto opts = mc_options(config_, threads_);
        for (auto [n, m] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{2, 3}}) {
            const auto r = verify::estimate_joint_moment(config_.params(), config_.K, n, m, opts);
            const std::string test = "n" + std::to_string(n) + "_m" + std::to_string(m);
            add(verify::report_line("joint", test, r, smoke), r.pass, smoke);
        }
    }

    void age() {
        const bool smoke = config_.N < 10000;
        auto opts = mc_options(config_, threads_);
        const auto laws = switchheat::exponential_laws(config_.r0, config_.r1);
        const double t_large = 50.0 * std::max(laws.state0.mean(), laws.state1.mean());
        const auto r = verify::age_distribution_test(laws, t_large, 0.01, opts);
        add(verify::report_line("age", "age_state0", r.age_state0, smoke), r.age_state0.pass, smoke);
        add(verify::report_line("age", "age_state1", r.age_state1, smoke), r.age_state1.pass, smoke);
        add(verify::report_line("age", "occupancy", r.occupancy, smoke), r.occupancy.pass, smoke);
    }

    void invariance(const std::vector<int>& ks) {
        const bool smoke = config_.N < 5000;
        auto opts = mc_options(config_, threads_);
        for (int k : ks) {
            verify::InvarianceOptions inv;
            inv.example = config_.spectral_example();
            inv.k = k;
            const auto r = verify::invariance_two_sample(config_.params(),
                                                         config_.effective_modes(), inv,
                                                         0.01, opts);
            const std::string test = "k" + std::to_string(k);
            add(verify::report_line("invariance", test, r, smoke), r.pass, smoke);
        }
    }

    void pde() {
        const bool smoke = config_.N < 100000;
        auto opts = mc_options(config_, threads_);
        const auto example = config_.spectral_example();
        const auto mean_r = verify::weak_mean_pde_residual(example, config_.params(),
                                                           config_.K, 0.5, 1e-3, opts);
        add(verify::report_line("pde", "mean_evolution", mean_r, smoke), mean_r.pass, smoke);
        const auto stat_r = verify::stationary_weak_pde(example, config_.params(), config_.K, opts);
        add(verify::report_line("pde", "stationary", stat_r, smoke), stat_r.pass, smoke);
    }

    void sandwich() {
        const bool smoke = config_.N < 10000;
        auto opts = mc_options(config_, threads_);
        const std::vector<std::pair<int, int>> pairs = {{1, 2}, {1, 3}, {2, 4}};
        const auto sw = verify::sandwich_pathwise_check(config_.params(), config_.K, pairs,
                                                        1e-12, opts);
        {
            stats::StatReport r;
            r.estimate = sw.fraction;
            r.target = 1.0;
            r.n = sw.n;
            r.z = double(sw.violations);
            r.pass = sw.violations == 0;
            add(verify::report_line("sandwich", "mode_pairs", r, smoke), r.pass, smoke);
        }
        const auto box = verify::sup_norm_box_check(config_.params(), config_.K, config_.G, opts);
        {
            stats::StatReport r;
            r.estimate = box.fraction;
            r.target = 1.0;
            r.n = box.n;
            r.z = double(box.n) * (1.0 - box.fraction);
            r.pass = box.fraction == 1.0;
            add(verify::report_line("sandwich", "sup_norm_box", r, smoke), r.pass, smoke);
        }
    }

    void oracles() {
        const auto params = config_.params();
        const auto laws = switchheat::exponential_laws(params.r0, params.r1);
        {
            switchheat::Environment env(laws, switchheat::RngStream(config_.seed));
            env.materialize(2);
            const double t_end = env.cycle_end(1) + 0.5 * env.tau0(1);
            const double gap = verify::rk4_vs_spectral_gap(params, 8, env, t_end, 1e-4);
            stats::StatReport r;
            r.estimate = gap;
            r.target = 1e-8;
            r.n = 1;
            r.z = gap / 1e-8;
            r.pass = gap <= 1e-8;
            add(verify::report_line("oracles", "rk4_gap", r), r.pass, false);
        }
        {
            switchheat::Environment env(laws, switchheat::RngStream(config_.seed));
            const double bound = 5e-3 * params.b;
            const double gap = verify::cn_vs_spectral_gap(spectral::Example::dn, params, 64,
                                                          env, 1.0, 512, 1e-4);
            stats::StatReport r;
            r.estimate = gap;
            r.target = bound;
            r.n = 1;
            r.z = bound > 0.0 ? gap / bound : 0.0;
            r.pass = gap <= bound;
            add(verify::report_line("oracles", "cn_gap", r), r.pass, false);

            if (!config_.output.empty()) {
                auto model = spectral::make_heat_model(spectral::Example::dn, params, 64);
                switchheat::Environment env2(laws, switchheat::RngStream(config_.seed));
                const auto u = hybrid::process_at(model.flows, env2, model.zero(), 1.0);
                const Eigen::VectorXd spec_vals =
                    spectral::evaluation_matrix(model.basis, 512) * u;
                switchheat::Environment env3(laws, switchheat::RngStream(config_.seed));
                const auto fd = oracle::fd_oracle(
                    spectral::Example::dn, params, [](double) { return 0.0; }, 1.0, 512,
                    1e-4, env3);
                const Eigen::VectorXd fd_vals =
                    spectral::evaluation_matrix(model.basis, 512) *
                    verify::project_onto_modes(model.basis, fd.x, fd.u);
                const Eigen::VectorXd grid_x = spectral::interior_grid(params.L, 512);
                write_file(config_.output + ".csv",
                           verify::grid_comparison_csv(grid_x, spec_vals, fd_vals));
            }
        }
        {
            switchheat::Environment env(laws, switchheat::RngStream(config_.seed));
            const double ratio = verify::cn_convergence_ratio(spectral::Example::dn, params,
                                                              env, 1.0, 512, 1e-4);
            stats::StatReport r;
            r.estimate = ratio;
            r.target = 5.0;
            r.n = 1;
            r.z = (ratio - 5.0) / 5.0;
            r.pass = ratio >= 3.0 && ratio <= 5.5;
            add(verify::report_line("oracles", "cn_order", r), r.pass, false);
        }
    }

    [[nodiscard]] int finish() const {
        bool any_fail = false;
        for (const auto& line : lines_)
            if (!line.effective_fail) std::cout << line.text << "\n";
        std::ostringstream all;
        for (const auto& line : lines_) {
            all << line.text << "\n";
            if (line.effective_fail) {
                std::cout << line.text << "\n";
                any_fail = true;
            }
        }
        if (!config_.output.empty()) write_file(config_.output + ".jsonl", all.str());
        return any_fail ? 4 : 0;
    }

private:
    void add(std::string text, bool pass, bool smoke) {
        lines_.push_back({std::move(text), !pass && !smoke});
    }

    RunConfig config_;
    int threads_;
    std::vector<ReportLine> lines_;
};

int run_verify(const RunConfig& config, const std::string& suite,
               const std::vector<int>& klist, int threads) {
    if (config.example == ExampleKind::ode1d) {
        static const std::vector<std::string> allowed = {"marginals", "age", "invariance"};
        if (std::find(allowed.begin(), allowed.end(), suite) == allowed.end())
            throw config_error("verify: ode1d supports only the marginals, age, and "
                               "invariance suites");
    }
    std::vector<int> ks = klist;
    SuiteRunner runner(config, threads);
    if (suite == "slope") {
        runner.slope();
    } else if (suite == "marginals") {
        if (ks.empty()) ks = config.example == ExampleKind::ode1d ? std::vector<int>{1}
                                                                  : std::vector<int>{1, 2, 3, 4};
        runner.marginals(ks);
    } else if (suite == "variance") {
        runner.variance();
    } else if (suite == "joint") {
        runner.joint();
    } else if (suite == "age") {
        runner.age();
    } else if (suite == "invariance") {
        if (ks.empty()) ks = config.example == ExampleKind::ode1d ? std::vector<int>{1}
                                                                  : std::vector<int>{1, 2};
        runner.invariance(ks);
    } else if (suite == "pde") {
        runner.pde();
    } else if (suite == "sandwich") {
        runner.sandwich();
    } else if (suite == "oracles") {
        runner.oracles();
    } else if (suite == "all") {
        runner.slope();
        runner.marginals(ks.empty() ? std::vector<int>{1, 2, 3, 4} : ks);
        runner.variance();
        runner.joint();
        runner.age();
        runner.invariance({1, 2});
        runner.pde();
        runner.sandwich();
        runner.oracles();
    } else {
        throw config_error("verify: unknown suite '" + suite + "'");
    }
    return runner.finish();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Switching-boundary heat equation: simulation and verification"};
    app.require_subcommand(1);

    CommonFlags cf_closed, cf_sample, cf_verify;

    auto* closed = app.add_subcommand("closed-form", "print a closed-form quantity as JSON");
    std::string which;
    double cf_x = 0.5;
    int cf_k = 1, cf_n = 1, cf_m = 2;
    std::string cf_family = "y0";
    closed->add_option("which", which, "one of dn-slope, dd-mean, dd-variance, beta-marginal, joint-moment, flux")
        ->required();
    add_common_flags(closed, cf_closed);
    closed->add_option("--x", cf_x, "evaluation point for dd-mean");
    closed->add_option("--k", cf_k, "mode index for beta-marginal");
    closed->add_option("--family", cf_family, "beta-marginal family: y0 or y1");
    closed->add_option("--n", cf_n, "first mode for joint-moment");
    closed->add_option("--m", cf_m, "second mode for joint-moment");

    auto* sample = app.add_subcommand("sample", "draw paths or stationary/pullback fields");
    std::string kind;
    std::vector<double> times = {0.0, 0.5, 1.0};
    std::string sample_family = "y0";
    sample->add_option("kind", kind, "one of path, pullback, stationary")->required();
    add_common_flags(sample, cf_sample);
    sample->add_option("--times", times, "snapshot times for kind=path")->delimiter(',');
    sample->add_option("--family", sample_family, "pullback target: y0 or y1");

    auto* verify_cmd = app.add_subcommand("verify", "run a statistical verification suite");
    std::string suite;
    std::vector<int> klist;
    verify_cmd
        ->add_option("suite", suite,
                     "one of all, slope, marginals, variance, joint, age, invariance, "
                     "pde, sandwich, oracles")
        ->required();
    add_common_flags(verify_cmd, cf_verify);
    verify_cmd->add_option("--k", klist, "mode indices for marginals/invariance")->delimiter(',');

    bool x_given = false;
    try {
        app.parse(argc, argv);
        x_given = closed->count("--x") > 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (*closed) {
            RunConfig config = resolve_config(cf_closed);
            if (!x_given) cf_x = config.L / 2.0;
            return run_closed_form(config, which, cf_x, cf_k, cf_family, cf_n, cf_m);
        }
        if (*sample) {
            RunConfig config = resolve_config(cf_sample);
            return run_sample(config, kind, times, sample_family);
        }
        if (*verify_cmd) {
            RunConfig config = resolve_config(cf_verify);
            return run_verify(config, suite, klist, cf_verify.threads);
        }
        return 2;
    } catch (const convergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const stat_failure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
