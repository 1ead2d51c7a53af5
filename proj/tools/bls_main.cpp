// bls: numerics and Monte Carlo for the Brownian loop soup CFT with general
// random marks. Subcommands: dim, corr, halfplane, blocks, identities, mc.
//
// Exit codes: 0 success, 2 usage/config error, 3 numeric-accuracy/identity
// failure, 4 MC inconclusive.

#include <complex>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bls/blocks.hpp"
#include "bls/correlators.hpp"
#include "bls/dimensions.hpp"
#include "bls/io.hpp"
#include "bls/mc/loopsoup.hpp"
#include "bls/special.hpp"

using json = nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::string format = "json";
    std::optional<double> lambda;
    std::optional<std::string> dist_spec;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file (flags override it)");
    cmd->add_option("--out", opts.out_path, "output path (default: stdout)");
    cmd->add_option("--format", opts.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--lambda", opts.lambda, "loop-soup intensity");
    cmd->add_option("--dist", opts.dist_spec,
                    "distribution spec, e.g. bernoulli | gaussian:sigma=1 | unit_vector:d=3 | "
                    "lattice:b=1,atoms=1:0.5;-1:0.5");
    cmd->add_option("--seed", opts.seed, "RNG seed (MC determinism)");
}

json load_config(const CommonOpts& opts) {
    if (opts.config_path.empty()) return json::object();
    std::ifstream in(opts.config_path);
    if (!in) throw std::invalid_argument("cannot open config: " + opts.config_path);
    json j;
    in >> j;
    return j;
}

void emit(const CommonOpts& opts, const json& payload, const std::string& csv) {
    const std::string body = (opts.format == "csv") ? csv : payload.dump(2) + "\n";
    if (opts.out_path.empty()) {
        std::cout << body;
    } else {
        bls::io::write_text_file(opts.out_path, body);
    }
}

bls::MarkDistribution resolve_dist(const CommonOpts& opts, const json& cfg) {
    if (opts.dist_spec) return bls::io::distribution_from_spec(*opts.dist_spec);
    if (cfg.contains("distribution")) return bls::io::distribution_from_json(cfg["distribution"]);
    return bls::MarkDistribution::bernoulli();
}

double resolve_lambda(const CommonOpts& opts, const json& cfg) {
    if (opts.lambda) return *opts.lambda;
    return cfg.value("lambda", 1.0);
}

// ---------------------------------------------------------------- dim
int cmd_dim(const CommonOpts& opts, double beta_min, double beta_max, int steps, double tol) {
    const json cfg = load_config(opts);
    const auto dist = resolve_dist(opts, cfg);
    const double lambda = resolve_lambda(opts, cfg);
    if (steps < 1) throw std::invalid_argument("dim: empty sweep");
    json rows = json::array();
    std::ostringstream csv;
    csv << "beta,delta,delta_w\n" << std::setprecision(17);
    for (int i = 0; i <= steps; ++i) {
        const double beta = beta_min + (beta_max - beta_min) * i / steps;
        const double d = bls::delta_layering(lambda, dist, beta);
        const double dw = bls::delta_winding(lambda, dist, beta, tol);
        rows.push_back({{"beta", beta}, {"delta", d}, {"delta_w", dw}});
        csv << beta << ',' << d << ',' << dw << '\n';
    }
    json payload = {{"schema_version", bls::io::schema_version},
                    {"command", "dim"},
                    {"config",
                     {{"lambda", lambda},
                      {"distribution", bls::io::to_json(dist)},
                      {"beta_min", beta_min},
                      {"beta_max", beta_max},
                      {"steps", steps},
                      {"tol", tol}}},
                    {"rows", rows}};
    emit(opts, payload, csv.str());
    return 0;
}

// ---------------------------------------------------------------- corr / halfplane
bls::CorrelatorConfig build_corr_config(const CommonOpts& opts, const json& cfg,
                                        bls::Domain domain) {
    if (!cfg.contains("points"))
        throw std::invalid_argument("corr: config with a points array is required");
    bls::CorrelatorConfig ccfg = bls::io::correlator_config_from_json(cfg);
    ccfg.domain = domain;
    if (opts.lambda) ccfg.lambda = *opts.lambda;
    if (opts.dist_spec) ccfg.dist = bls::io::distribution_from_spec(*opts.dist_spec);
    return ccfg;
}

int cmd_corr(const CommonOpts& opts, bls::Domain domain) {
    const json cfg = load_config(opts);
    const auto ccfg = build_corr_config(opts, cfg, domain);
    const auto res = bls::evaluate(ccfg);
    std::ostringstream csv;
    csv << "value,vanishes_by_charge,x_re,x_im,A\n" << std::setprecision(17);
    csv << res.value << ',' << (res.vanishes_by_charge ? 1 : 0) << ','
        << (res.cross_ratio ? res.cross_ratio->real() : 0.0) << ','
        << (res.cross_ratio ? res.cross_ratio->imag() : 0.0) << ','
        << (res.a_value ? *res.a_value : 0.0) << '\n';
    json payload = {{"schema_version", bls::io::schema_version},
                    {"command", domain == bls::Domain::plane ? "corr" : "halfplane"},
                    {"config", bls::io::to_json(ccfg)},
                    {"result", bls::io::to_json(res)}};
    emit(opts, payload, csv.str());
    return 0;
}

// ---------------------------------------------------------------- blocks
int cmd_blocks(const CommonOpts& opts, int pmax) {
    const json cfg = load_config(opts);
    auto ccfg = build_corr_config(opts, cfg, bls::Domain::plane);
    const auto table = bls::blocks::extract_coefficients(ccfg, pmax);
    json entries = json::array();
    for (const auto& e : table.entries) {
        json row = {{"p", e.label.p},
                    {"p_bar", e.label.p_bar},
                    {"delta", e.delta},
                    {"delta_bar", e.delta_bar},
                    {"coeff", e.coeff}};
        entries.push_back(row);
    }
    json payload = {{"schema_version", bls::io::schema_version},
                    {"command", "blocks"},
                    {"config", bls::io::to_json(ccfg)},
                    {"pmax", table.pmax},
                    {"residual", table.residual},
                    {"degeneracy_margin", table.degeneracy_margin},
                    {"entries", entries}};
    emit(opts, payload, bls::io::coeff_table_csv(table));
    return 0;
}

// ---------------------------------------------------------------- identities
struct IdentityCheck {
    std::string name;
    double max_deviation = 0.0;
    double tolerance = 0.0;

    bool pass() const { return max_deviation < tolerance; }
};

int cmd_identities(const CommonOpts& opts, double perturb_mu) {
    std::vector<IdentityCheck> checks;
    std::mt19937_64 gen(opts.seed.value_or(20240613));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    bls::special::AOptions aopt;
    aopt.mu += perturb_mu;

    // crossing identities of A on a grid in the lens
    {
        IdentityCheck c1{"A(x)-A(1-x)", 0.0, 1e-10};
        IdentityCheck c2{"A(x)-A(1/x)+log|x|", 0.0, 1e-10};
        for (int i = 0; i < 200; ++i) {
            const double re = 0.05 + 0.6 * ((i * 37) % 200) / 200.0;
            const double im = -0.45 + 0.9 * ((i * 53) % 199) / 199.0;
            const std::complex<double> x(re, im);
            const double ax = bls::special::a_function(x, aopt);
            c1.max_deviation =
                std::max(c1.max_deviation, std::fabs(ax - bls::special::a_function(1.0 - x, aopt)));
            c2.max_deviation = std::max(
                c2.max_deviation,
                std::fabs(ax - bls::special::a_function(1.0 / x, aopt) + std::log(std::abs(x))));
        }
        checks.push_back(c1);
        checks.push_back(c2);
    }

    const auto dist = bls::MarkDistribution::gaussian(1.0);

    // Ward / Mobius covariance of the 4-point function
    {
        IdentityCheck c{"mobius_covariance_4pt", 0.0, 1e-8};
        for (int rep = 0; rep < 40; ++rep) {
            bls::CorrelatorConfig cfg;
            cfg.lambda = 0.7;
            cfg.dist = dist;
            double bsum = 0.0;
            for (int j = 0; j < 4; ++j) {
                const double beta = (j < 3) ? unif(gen) : -bsum;
                bsum += beta;
                cfg.points.push_back({{2.0 * unif(gen), 2.0 * unif(gen)}, beta});
            }
            const double a = 1.0 + 0.3 * unif(gen), b = 0.4 * unif(gen), c2 = 0.2 * unif(gen);
            bls::MobiusMap map{a, b, c2, (1.0 + b * c2) / a};
            const auto img = bls::mobius_image(cfg.points, map);
            bls::CorrelatorConfig moved = cfg;
            moved.points = img.points;
            try {
                const double lhs = bls::four_point_plane(moved).value;
                double rhs = bls::four_point_plane(cfg).value;
                for (size_t j = 0; j < 4; ++j)
                    rhs *= std::pow(img.fprime_abs[j],
                                    -2.0 * bls::delta_layering(cfg.lambda, dist, cfg.points[j].beta));
                c.max_deviation = std::max(c.max_deviation, std::fabs(lhs / rhs - 1.0));
            } catch (const std::domain_error&) {
                --rep; // degenerate random geometry; redraw
            }
        }
        checks.push_back(c);
    }

    // lambda-power property on a 4-point config
    {
        IdentityCheck c{"lambda_power", 0.0, 1e-12};
        for (int rep = 0; rep < 25; ++rep) {
            bls::CorrelatorConfig cfg;
            cfg.lambda = 0.3 + 2.0 * std::fabs(unif(gen));
            cfg.dist = dist;
            double bsum = 0.0;
            for (int j = 0; j < 4; ++j) {
                const double beta = (j < 3) ? unif(gen) : -bsum;
                bsum += beta;
                cfg.points.push_back({{3.0 * unif(gen), 3.0 * unif(gen)}, beta});
            }
            try {
                const auto pair = bls::lambda_power_property(cfg);
                c.max_deviation =
                    std::max(c.max_deviation, std::fabs(pair.at_lambda / pair.at_half_power - 1.0));
            } catch (const std::domain_error&) {
                --rep;
            }
        }
        checks.push_back(c);
    }

    // 4 -> 3 point reduction at beta4 = 0
    {
        IdentityCheck c{"four_to_three_reduction", 0.0, 1e-10};
        for (int rep = 0; rep < 20; ++rep) {
            bls::CorrelatorConfig cfg;
            cfg.lambda = 1.1;
            cfg.dist = dist;
            const double b1 = unif(gen), b2 = unif(gen);
            cfg.points = {{{unif(gen), unif(gen)}, b1},
                          {{2.0 + unif(gen), unif(gen)}, b2},
                          {{unif(gen), 2.0 + unif(gen)}, -b1 - b2},
                          {{-2.0 + unif(gen), -2.0 + unif(gen)}, 0.0}};
            bls::CorrelatorConfig three = cfg;
            three.points.pop_back();
            try {
                const double lhs = bls::four_point_plane(cfg).value;
                const double rhs = bls::three_point_plane(three).value;
                c.max_deviation = std::max(c.max_deviation, std::fabs(lhs / rhs - 1.0));
            } catch (const std::domain_error&) {
                --rep;
            }
        }
        checks.push_back(c);
    }

    // half-plane cluster factorization trend
    {
        IdentityCheck c{"halfplane_factorization", 0.0, 1e-3};
        bls::CorrelatorConfig cfg;
        cfg.lambda = 1.0;
        cfg.dist = dist;
        cfg.domain = bls::Domain::upper_half_plane;
        double prev = 1e300;
        bool monotone = true;
        for (double sep = 10.0; sep <= 1e6; sep *= 10.0) {
            cfg.points = {{{0.0, 1.0}, 0.8}, {{sep, 2.0}, -0.3}};
            const double two = bls::two_point_halfplane(cfg).value;
            bls::CorrelatorConfig p1 = cfg, p2 = cfg;
            p1.points = {cfg.points[0]};
            p2.points = {cfg.points[1]};
            const double ratio =
                two / (bls::one_point_halfplane(p1).value * bls::one_point_halfplane(p2).value);
            const double gap = std::fabs(ratio - 1.0);
            if (gap > prev + 1e-15) monotone = false;
            prev = gap;
        }
        c.max_deviation = monotone ? prev : 1.0; // final gap at separation 1e6
        checks.push_back(c);
    }

    json jchecks = json::array();
    bool all = true;
    std::ostringstream csv;
    csv << "name,max_deviation,tolerance,pass\n" << std::setprecision(17);
    for (const auto& c : checks) {
        all = all && c.pass();
        jchecks.push_back({{"name", c.name},
                           {"max_deviation", c.max_deviation},
                           {"tolerance", c.tolerance},
                           {"pass", c.pass()}});
        csv << c.name << ',' << c.max_deviation << ',' << c.tolerance << ',' << c.pass() << '\n';
        std::cerr << (c.pass() ? "[pass] " : "[FAIL] ") << c.name
                  << "  max deviation " << c.max_deviation << " (tol " << c.tolerance << ")\n";
    }
    json payload = {{"schema_version", bls::io::schema_version},
                    {"command", "identities"},
                    {"config", {{"perturb_mu", perturb_mu}, {"seed", opts.seed.value_or(20240613)}}},
                    {"checks", jchecks},
                    {"all_pass", all}};
    emit(opts, payload, csv.str());
    return all ? 0 : 3;
}

// ---------------------------------------------------------------- mc
int cmd_mc(const CommonOpts& opts, const std::string& estimator, int k, double beta,
           std::string dump_path, bls::mc::McConfig mcc, bool probe_truncation) {
    const json cfg = load_config(opts);
    bls::mc::McConfig mc = mcc;
    if (cfg.contains("lambda")) mc.lambda = cfg["lambda"].get<double>();
    if (cfg.contains("delta")) mc.delta = cfg["delta"].get<double>();
    if (cfg.contains("R")) mc.R = cfg["R"].get<double>();
    if (cfg.contains("M")) mc.M = cfg["M"].get<int>();
    if (cfg.contains("n_soups")) mc.n_soups = cfg["n_soups"].get<long>();
    if (cfg.contains("seed")) mc.seed = cfg["seed"].get<std::uint64_t>();
    if (cfg.contains("threads")) mc.threads = cfg["threads"].get<int>();
    if (cfg.contains("z")) mc.z = {cfg["z"].value("re", 0.0), cfg["z"].value("im", 0.0)};
    std::string est = estimator;
    if (est.empty()) est = cfg.value("estimator", "alpha");
    if (cfg.contains("k") && k == 1) k = cfg["k"].get<int>();
    if (cfg.contains("beta") && beta == std::numbers::pi) beta = cfg["beta"].get<double>();
    if (opts.lambda) mc.lambda = *opts.lambda;
    if (opts.seed) mc.seed = *opts.seed;
    mc.probe_truncation = probe_truncation;
    const auto dist = resolve_dist(opts, cfg);

    bls::mc::EstimatorResult res;
    double target = 0.0;
    const double log_ratio = std::log(mc.R / mc.delta);
    if (est == "alpha") {
        res = bls::mc::estimate_alpha_layering(mc);
        target = log_ratio / 5.0;
    } else if (est == "winding") {
        res = bls::mc::estimate_winding_weight(mc, k);
        target = log_ratio / (2.0 * std::numbers::pi * std::numbers::pi * k * k);
    } else if (est == "vertex_layering" || est == "vertex_winding") {
        const auto kind = est == "vertex_layering" ? bls::mc::VertexKind::layering
                                                   : bls::mc::VertexKind::winding;
        res = bls::mc::estimate_vertex_onepoint(kind, dist, beta, mc);
        const double d = kind == bls::mc::VertexKind::layering
                             ? bls::delta_layering(mc.lambda, dist, beta)
                             : bls::delta_winding(mc.lambda, dist, beta);
        target = std::exp(-2.0 * d * log_ratio);
    } else {
        throw std::invalid_argument("mc: unknown estimator '" + est + "'");
    }

    if (!dump_path.empty()) {
        // reproducible loop dump of a single soup for re-marking experiments
        bls::mc::PhiloxStream rng(mc.seed, 0xD00Dull);
        const bls::mc::Window w{mc.z.real() - 4.0, mc.z.imag() - 4.0, mc.z.real() + 4.0,
                                mc.z.imag() + 4.0};
        const auto soup =
            bls::mc::sample_soup(mc.lambda, w, {0.25, 16.0}, mc.M, dist, rng);
        std::ofstream out(dump_path, std::ios::binary);
        bls::io::dump_loops(out, soup.loops);
    }

    const double z_score = res.std_error > 0.0 ? (res.mean - target) / res.std_error : 0.0;
    json payload = {{"schema_version", bls::io::schema_version},
                    {"command", "mc"},
                    {"config",
                     {{"estimator", est},
                      {"lambda", mc.lambda},
                      {"delta", mc.delta},
                      {"R", mc.R},
                      {"M", mc.M},
                      {"n_soups", mc.n_soups},
                      {"seed", mc.seed},
                      {"k", k},
                      {"beta", beta},
                      {"z", {{"re", mc.z.real()}, {"im", mc.z.imag()}}},
                      {"distribution", bls::io::to_json(dist)}}},
                    {"estimate", res.mean},
                    {"stderr", res.std_error},
                    {"n", res.n_samples},
                    {"target", target},
                    {"z_score", z_score},
                    {"bias_notes", res.bias_notes}};
    std::ostringstream csv;
    csv << "estimator,estimate,stderr,n,target,z_score\n"
        << std::setprecision(17) << est << ',' << res.mean << ',' << res.std_error << ','
        << res.n_samples << ',' << target << ',' << z_score << '\n';
    emit(opts, payload, csv.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Brownian loop soup CFT numerics"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* dim = app.add_subcommand("dim", "dimension tables over a beta sweep");
    double beta_min = 0.0, beta_max = 2.0 * std::numbers::pi, tol = 1e-10;
    int steps = 128;
    add_common(dim, opts);
    dim->add_option("--beta-min", beta_min);
    dim->add_option("--beta-max", beta_max);
    dim->add_option("--steps", steps, "number of sweep intervals");
    dim->add_option("--tol", tol, "winding-series tolerance");

    auto* corr = app.add_subcommand("corr", "plane correlator (2..4 points) from a config");
    add_common(corr, opts);
    auto* half = app.add_subcommand("halfplane", "half-plane correlator (1..2 points)");
    add_common(half, opts);

    auto* blk = app.add_subcommand("blocks", "extract block coefficients C34 C12");
    int pmax = 5;
    add_common(blk, opts);
    blk->add_option("--pmax", pmax, "largest label component (<= 6)");

    auto* ident = app.add_subcommand("identities", "run crossing/Ward/lambda-power self-checks");
    double perturb_mu = 0.0;
    add_common(ident, opts);
    ident->add_option("--perturb-mu", perturb_mu, "fault injection: shift mu by this amount");

    auto* mc = app.add_subcommand("mc", "loop-soup Monte Carlo estimators");
    std::string estimator;
    int winding_k = 1;
    double mc_beta = std::numbers::pi;
    std::string dump_path;
    bool probe_truncation = false;
    bls::mc::McConfig mcc;
    add_common(mc, opts);
    mc->add_option("--estimator", estimator, "alpha | winding | vertex_layering | vertex_winding");
    mc->add_option("--k", winding_k, "winding number for the winding estimator");
    mc->add_option("--beta", mc_beta, "charge for the vertex estimators");
    mc->add_option("--delta", mcc.delta, "small diameter cutoff");
    mc->add_option("--R", mcc.R, "large diameter cutoff");
    mc->add_option("--M", mcc.M, "bridge discretization (power of two >= 64)");
    mc->add_option("--n-soups", mcc.n_soups);
    mc->add_option("--threads", mcc.threads, "0 = hardware concurrency");
    mc->add_flag("--probe-truncation", probe_truncation,
                 "estimate duration-window truncation bias (4x wider window)");
    mc->add_option("--dump-loops", dump_path, "write a binary loop dump of one soup");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (dim->parsed()) return cmd_dim(opts, beta_min, beta_max, steps, tol);
        if (corr->parsed()) return cmd_corr(opts, bls::Domain::plane);
        if (half->parsed()) return cmd_corr(opts, bls::Domain::upper_half_plane);
        if (blk->parsed()) return cmd_blocks(opts, pmax);
        if (ident->parsed()) return cmd_identities(opts, perturb_mu);
        if (mc->parsed())
            return cmd_mc(opts, estimator, winding_k, mc_beta, dump_path, mcc, probe_truncation);
    } catch (const bls::accuracy_error& e) {
        std::cerr << "numeric accuracy: " << e.what() << "\n";
        return 3;
    } catch (const bls::resolution_error& e) {
        std::cerr << "mc inconclusive: " << e.what() << "\n";
        return 4;
    } catch (const bls::degeneracy_error& e) {
        std::cerr << "degenerate configuration: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
