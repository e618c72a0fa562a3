#include "kerrsol/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "kerrsol/meanfield.hpp"
#include "kerrsol/output.hpp"
#include "kerrsol/stability.hpp"
#include "kerrsol/stationary.hpp"

namespace kerrsol {

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"fig1",  "fig2",        "fig3",         "fig4",       "fig5",
                                                "fig6",  "vec-profile", "vec-breaking", "vec-growth", "fig10",
                                                "fig11", "fig12",       "fig13",        "custom"};
    return names;
}

const char* to_string(GreenMethod m) noexcept { return m == GreenMethod::linearized ? "linearized" : "difference"; }

namespace {

const std::map<std::string, LoModel> lo_map{{"uniform", LoModel::uniform}, {"matched", LoModel::matched}};
const std::map<std::string, PolarizationBasis> basis_map{{"circular", PolarizationBasis::circular},
                                                         {"linear", PolarizationBasis::linear}};
const std::map<std::string, GreenMethod> method_map{{"linearized", GreenMethod::linearized},
                                                    {"difference", GreenMethod::difference}};

std::vector<double> range(double first, double last, double step) {
    std::vector<double> z;
    const auto count = static_cast<long>(std::lround((last - first) / step));
    for (long k = 0; k <= count; ++k) z.push_back(first + static_cast<double>(k) * step);
    return z;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_number(v[k]);
    return s;
}

}  // namespace

ScenarioConfig parse_arguments(const std::vector<std::string>& args, std::string* help, bool* validate_only) {
    ScenarioConfig c;
    CLI::App app{"Quantum fluctuations of one-dimensional Kerr solitons", "kerrsol"};
    app.set_config("--config", "", "Key = value configuration file (flags take precedence)");
    app.allow_config_extras(CLI::config_extras_mode::error);
    bool no_plots = false, no_cache = false, vector_field = false, dry = false;
    app.add_option("--scenario", c.scenario, "Experiment to run")
        ->check(CLI::IsMember(scenario_names()))
        ->capture_default_str();
    app.add_option("--seed", c.seed, "Master RNG seed")->capture_default_str();
    app.add_option("--out", c.out, "Output directory")->capture_default_str();
    app.add_option("--zeta", c.zeta, "Comma-separated propagation distances")->delimiter(',');
    app.add_option("--lo", c.lo, "Local oscillator model")->transform(CLI::CheckedTransformer(lo_map));
    app.add_option("--basis", c.basis, "Polarization basis")->transform(CLI::CheckedTransformer(basis_map));
    app.add_option("--n", c.n, "Grid points")->capture_default_str();
    app.add_option("--half-width", c.half_width, "Transverse half window")->capture_default_str();
    app.add_option("--dz", c.dz, "Propagation step")->capture_default_str();
    app.add_flag("--no-plots", no_plots, "Skip SVG output");
    app.add_option("--mu-plus", c.mu_plus, "Propagation constant of U")->capture_default_str();
    app.add_option("--mu-minus", c.mu_minus, "Propagation constant of V")->capture_default_str();
    app.add_option("--xpm-ratio", c.xpm_ratio, "Cross-phase ratio B")->capture_default_str();
    app.add_option("--photons", c.photons_per_unit, "Photons per unit normalized power")->capture_default_str();
    app.add_option("--runs", c.runs, "Wigner ensemble size")->capture_default_str();
    app.add_option("--zeta-max", c.zeta_max, "Ensemble propagation limit")->capture_default_str();
    app.add_option("--threshold", c.threshold, "Asymmetry that counts as breaking")->capture_default_str();
    app.add_option("--fourier-width", c.fourier_width, "Fourier aperture total width, cycles per unit r")
        ->capture_default_str();
    app.add_option("--stop-half-width", c.stop_half_width, "Central stop half width")->capture_default_str();
    app.add_option("--method", c.method, "Green's matrix construction")
        ->transform(CLI::CheckedTransformer(method_map));
    app.add_option("--epsilon", c.epsilon, "Difference-method step")->capture_default_str();
    app.add_flag("--no-cache", no_cache, "Do not reuse or store Green's matrices");
    app.add_flag("--vector", vector_field, "custom scenario: use the vector bound state");
    app.add_flag("--validate", dry, "Check the configuration and exit");
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        if (help) *help = app.help();
        return c;
    } catch (const CLI::ParseError& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    c.plots = !no_plots;
    c.cache = !no_cache;
    c.vector_field = vector_field;
    if (validate_only) *validate_only = dry;
    return c;
}

std::string resolved_config_text(const ScenarioConfig& c) {
    std::ostringstream os;
    os << "scenario = " << c.scenario << '\n'
       << "n = " << c.n << '\n'
       << "half-width = " << format_number(c.half_width) << '\n'
       << "dz = " << format_number(c.dz) << '\n'
       << "zeta = \"" << join(effective_zeta(c)) << "\"\n"
       << "lo = " << to_string(c.lo) << '\n'
       << "basis = " << to_string(c.basis) << '\n'
       << "seed = " << c.seed << '\n'
       << "no-plots = " << (c.plots ? "false" : "true") << '\n'
       << "mu-plus = " << format_number(c.mu_plus) << '\n'
       << "mu-minus = " << format_number(c.mu_minus) << '\n'
       << "xpm-ratio = " << format_number(c.xpm_ratio) << '\n'
       << "photons = " << format_number(c.photons_per_unit) << '\n'
       << "runs = " << c.runs << '\n'
       << "zeta-max = " << format_number(c.zeta_max) << '\n'
       << "threshold = " << format_number(c.threshold) << '\n'
       << "fourier-width = " << format_number(c.fourier_width) << '\n'
       << "stop-half-width = " << format_number(c.stop_half_width) << '\n'
       << "method = " << to_string(c.method) << '\n'
       << "epsilon = " << format_number(c.epsilon) << '\n'
       << "vector = " << (c.vector_field ? "true" : "false") << '\n';
    return os.str();
}

// The output directory and cache switch do not change any number.
std::string config_hash(const ScenarioConfig& c) { return hash_hex(fnv1a(resolved_config_text(c))); }

std::vector<double> effective_zeta(const ScenarioConfig& c) {
    if (!c.zeta.empty()) return c.zeta;
    const std::string& s = c.scenario;
    if (s == "fig1" || s == "fig10" || s == "fig11") return range(0.0, 3.0, 0.25);
    if (s == "fig2" || s == "fig4") return {0.3, 3.0};
    if (s == "fig3") return range(0.0, 3.0, 0.05);
    if (s == "fig5") return {0.3, 1.0, 3.0};
    if (s == "fig6") return range(0.0, 3.0, 0.1);
    if (s == "fig12") return {0.6, 2.0};
    if (s == "fig13") return range(0.0, 6.0, 0.5);
    if (s == "vec-profile") return {10.0};
    if (s == "vec-growth") return {25.0};
    if (s == "vec-breaking") return {c.zeta_max};
    return {0.3, 1.0, 3.0};
}

bool ValidationReport::ok() const noexcept {
    return std::none_of(entries.begin(), entries.end(),
                        [](const auto& e) { return e.severity == ValidationEntry::Severity::error; });
}

std::string ValidationReport::text() const {
    if (entries.empty()) return "ok";
    std::string s;
    for (const auto& e : entries)
        s += std::string(e.severity == ValidationEntry::Severity::error ? "error: " : "warning: ") + e.message + "\n";
    s.pop_back();
    return s;
}

namespace {

bool is_vector_scenario(const ScenarioConfig& c) {
    const std::string& s = c.scenario;
    return s.rfind("vec-", 0) == 0 || s == "fig10" || s == "fig11" || s == "fig12" || s == "fig13" ||
           (s == "custom" && c.vector_field);
}

}  // namespace

ValidationReport validate(const ScenarioConfig& c) {
    ValidationReport r;
    auto error = [&](std::string m) { r.entries.push_back({ValidationEntry::Severity::error, std::move(m)}); };
    auto warn = [&](std::string m) { r.entries.push_back({ValidationEntry::Severity::warning, std::move(m)}); };

    if (std::find(scenario_names().begin(), scenario_names().end(), c.scenario) == scenario_names().end())
        error("unknown scenario '" + c.scenario + "'");
    if (c.n < 16 || c.n > (std::size_t{1} << 20)) error("n must lie in [16, 2^20]");
    else if ((c.n & (c.n - 1)) != 0) warn("n is not a power of two");
    if (!(c.half_width > 0.0) || !std::isfinite(c.half_width)) error("half-width must be positive");
    else if (c.half_width < 8.0) warn("window below 8 soliton widths");
    if (c.half_width > 0.0 && c.n >= 16 && 2.0 * c.half_width / static_cast<double>(c.n) > 0.5)
        warn("grid spacing above half a soliton width");
    // Kerr phase per step on a unit-peak soliton is 2 dz.
    if (!(c.dz > 0.0) || !std::isfinite(c.dz)) error("dz must be positive");
    else if (c.dz > 1.0) error("dz must not exceed one diffraction length");
    else if (2.0 * c.dz > 0.1) error("dz = " + format_number(c.dz) + " gives a Kerr phase above 0.1 rad per step");
    for (double z : effective_zeta(c)) {
        if (!(z >= 0.0) || !std::isfinite(z)) {
            error("zeta values must be non-negative");
            break;
        }
        if (c.dz > 0.0 && std::abs(z / c.dz - std::round(z / c.dz)) > 1e-6) {
            error("zeta = " + format_number(z) + " is not a multiple of dz");
            break;
        }
    }
    if (!(c.photons_per_unit > 0.0)) error("photons must be positive");
    if (c.method == GreenMethod::difference && !(c.epsilon >= 1e-6 && c.epsilon <= 1e-2))
        error("epsilon must lie in [1e-6, 1e-2]");
    if (c.scenario == "fig6" && !(c.fourier_width > 0.0)) error("fourier-width must be positive");
    if (c.scenario == "fig6" && !(c.stop_half_width > 0.0)) error("stop-half-width must be positive");
    if (is_vector_scenario(c)) {
        if (!(c.xpm_ratio > 1.0)) error("xpm-ratio must exceed 1 for a bound state");
        if (!(c.mu_plus > 0.0) || !(c.mu_minus > 0.0)) error("mu-plus and mu-minus must be positive");
        else if (c.xpm_ratio > 1.0) {
            const double nu = 0.5 * (-1.0 + std::sqrt(1.0 + 8.0 * c.xpm_ratio));
            const double upper = (nu - 1.0) * (nu - 1.0);
            const double ratio = c.mu_minus / c.mu_plus;
            if (ratio >= upper || ratio <= 1.0)
                error("mu-minus / mu-plus = " + format_number(ratio) + " lies outside the bound-state band (1, " +
                      format_number(upper) + ")");
            else if (ratio < 1.1)
                warn("mu-minus / mu-plus close to the lower edge of the bound-state band");
        }
    }
    if (c.scenario == "vec-breaking") {
        if (c.runs == 0) error("runs must be at least 1");
        if (!(c.threshold > 0.0 && c.threshold < 1.0)) error("threshold must lie in (0, 1)");
        if (!(c.zeta_max > 0.0)) error("zeta-max must be positive");
    }
    return r;
}

namespace {

struct Context {
    const ScenarioConfig& cfg;
    std::ostream* log;
    Grid grid;
    KerrParams params;
    std::filesystem::path out;
    Provenance prov;
    ScenarioResult result;

    void say(const std::string& m) const {
        if (log) *log << m << std::endl;
    }
    void csv(const std::string& name, const CsvTable& t) {
        const auto p = out / (cfg.scenario + "_" + name + ".csv");
        t.save(p, prov);
        result.files.push_back(p);
    }
    void svg(const std::string& name, const std::string& text) {
        if (!cfg.plots) return;
        const auto p = out / (cfg.scenario + "_" + name + ".svg");
        save_text(p, text);
        result.files.push_back(p);
    }
    void note(std::string n) { prov.notes.push_back(std::move(n)); }
    void summary(const std::string& key, double v) { result.summary.push_back(key + " = " + format_number(v)); }
};

std::string green_key(const Context& ctx, const std::string& kind, double zeta) {
    std::ostringstream os;
    os << kind << ' ' << ctx.grid.size() << ' ' << format_number(ctx.grid.half_width()) << ' '
       << format_number(ctx.grid.dz()) << ' ' << format_number(ctx.params.spm) << ' '
       << format_number(ctx.params.xpm_ratio) << ' ' << format_number(zeta) << ' ' << to_string(ctx.cfg.method);
    if (ctx.cfg.method == GreenMethod::difference) os << ' ' << format_number(ctx.cfg.epsilon);
    if (kind == "vector") os << ' ' << format_number(ctx.cfg.mu_plus) << ' ' << format_number(ctx.cfg.mu_minus);
    return os.str();
}

std::filesystem::path cache_path(const Context& ctx, const std::string& key) {
    return ctx.out / "cache" / ("green-" + hash_hex(fnv1a(key)) + ".bin");
}

// Green's matrices at every zeta from one trajectory, reusing cached dumps.
std::vector<GreenPair> greens(Context& ctx, const std::string& kind, const std::vector<double>& zetas,
                              const std::function<Trajectory(double)>& propagate) {
    std::vector<GreenPair> out(zetas.size());
    std::vector<bool> have(zetas.size(), false);
    if (ctx.cfg.cache) {
        for (std::size_t k = 0; k < zetas.size(); ++k) {
            const auto p = cache_path(ctx, green_key(ctx, kind, zetas[k]));
            std::ifstream f(p, std::ios::binary);
            if (!f) continue;
            try {
                out[k] = read_green(f);
                have[k] = out[k].grid == ctx.grid;
            } catch (const Error&) {
                have[k] = false;
            }
        }
    }
    std::vector<double> missing;
    for (std::size_t k = 0; k < zetas.size(); ++k)
        if (!have[k]) missing.push_back(zetas[k]);
    if (missing.empty()) {
        ctx.say("reused cached Green's matrices");
        return out;
    }
    const double zmax = *std::max_element(missing.begin(), missing.end());
    ctx.say("propagating " + kind + " mean field to zeta = " + format_number(zmax));
    const Trajectory traj = propagate(zmax);
    std::vector<GreenPair> built;
    if (ctx.cfg.method == GreenMethod::linearized) {
        ctx.say("building linearized Green's matrices at " + std::to_string(missing.size()) + " distances");
        built = kind == "vector" ? build_green_vector(traj, missing) : build_green_scalar(traj, missing);
    } else {
        for (double z : missing) {
            ctx.say("difference-method Green's matrices at zeta = " + format_number(z));
            const std::size_t last = ctx.grid.steps_for(z);
            DifferenceOptions opt;
            opt.epsilon = ctx.cfg.epsilon;
            if (last == 0) {
                const auto& u0 = traj.u.front();
                const double s = std::sqrt(ctx.grid.dr());
                Eigen::VectorXcd mean(static_cast<Eigen::Index>(u0.size() * (kind == "vector" ? 2 : 1)));
                for (std::size_t j = 0; j < u0.size(); ++j) mean[static_cast<Eigen::Index>(j)] = u0[j] * s;
                if (kind == "vector")
                    for (std::size_t j = 0; j < u0.size(); ++j)
                        mean[static_cast<Eigen::Index>(u0.size() + j)] = traj.v.front()[j] * s;
                built.push_back(to_local_frame(identity_green(ctx.grid, kind == "vector" ? 2 : 1, mean)));
            } else {
                built.push_back(build_green_difference(traj.slice(0, last), opt));
            }
        }
    }
    for (std::size_t k = 0, m = 0; k < zetas.size(); ++k) {
        if (have[k]) continue;
        out[k] = std::move(built[m++]);
        if (ctx.cfg.cache) {
            const auto p = cache_path(ctx, green_key(ctx, kind, zetas[k]));
            std::filesystem::create_directories(p.parent_path());
            std::ofstream f(p, std::ios::binary);
            if (f) write_green(f, out[k]);
        }
    }
    return out;
}

std::vector<GreenPair> scalar_greens(Context& ctx, const std::vector<double>& zetas) {
    const ComplexField u0 = scalar_soliton(ctx.grid);
    return greens(ctx, "scalar", zetas, [&](double z) { return propagate_scalar(u0, ctx.params, z, 1); });
}

VectorSolitonSolution bound_state(Context& ctx) {
    ctx.say("solving the vector bound state");
    auto s = solve_vector_soliton(ctx.grid, ctx.params, ctx.cfg.mu_plus, ctx.cfg.mu_minus);
    ctx.note("bound state mu_plus = " + format_number(s.mu_plus) + ", mu_minus = " + format_number(s.mu_minus) +
             ", residual = " + format_number(s.residual));
    return s;
}

std::vector<GreenPair> vector_greens(Context& ctx, const std::vector<double>& zetas, PolarizationBasis basis) {
    const auto sol = bound_state(ctx);
    auto gs = greens(ctx, "vector", zetas,
                     [&](double z) { return propagate_vector(sol.profile, ctx.params, z, 1); });
    if (basis == PolarizationBasis::linear)
        for (auto& g : gs) g = to_linear(g);
    return gs;
}

void symplectic_note(Context& ctx, const std::vector<GreenPair>& gs) {
    double worst = 0.0;
    for (const auto& g : gs) worst = std::max(worst, g.defect.worst());
    ctx.note("max symplectic defect = " + format_number(worst));
    ctx.summary("max_symplectic_defect", worst);
}

// ---- scalar figures ----

void run_fig1(Context& ctx, const std::vector<double>& zetas) {
    const auto gs = scalar_greens(ctx, zetas);
    symplectic_note(ctx, gs);
    CsvTable t({"zeta", "v_best_soliton", "theta_best", "v_plane_wave"});
    for (std::size_t k = 0; k < zetas.size(); ++k) {
        const auto rep = best_quadrature(gs[k], DetectorSpec::full(ctx.grid.size(), ctx.cfg.lo));
        t.add_row({zetas[k], rep.variance_snu, rep.theta, plane_wave_squeezing(zetas[k])});
    }
    ctx.note("plane-wave oracle evaluated at nonlinear phase phi = zeta");
    ctx.csv("squeezing", t);
    ctx.summary("v_best_final", t.rows().back()[1]);
    ctx.svg("squeezing", render_svg(LinePlot{"Best full-beam squeezing",
                                             "zeta",
                                             "variance (SNU)",
                                             {{"soliton", t.column(0), t.column(1)},
                                              {"plane wave", t.column(0), t.column(3), true}},
                                             {1.0}}));
}

void run_fig2(Context& ctx, const std::vector<double>& zetas) {
    const auto gs = scalar_greens(ctx, zetas);
    std::vector<std::string> cols{"x"};
    for (double z : zetas) {
        cols.push_back("v_min_z" + format_number(z));
        cols.push_back("theta_z" + format_number(z));
    }
    CsvTable t(cols);
    std::vector<PixelSqueezing> maps;
    for (const auto& g : gs) maps.push_back(pixel_squeezing_map(g, ctx.cfg.lo));
    for (std::size_t j = 0; j < ctx.grid.size(); ++j) {
        std::vector<double> row{ctx.grid.position(j)};
        for (const auto& m : maps) {
            row.push_back(m.variance[j]);
            row.push_back(m.theta[j]);
        }
        t.add_row(row);
    }
    ctx.csv("pixel_map", t);
    LinePlot plot{"Best single-pixel squeezing", "x", "variance (SNU)", {}, {1.0}};
    for (std::size_t k = 0; k < zetas.size(); ++k) {
        plot.series.push_back({"zeta = " + format_number(zetas[k]), t.column(0), t.column(1 + 2 * k)});
        ctx.summary("central_pixel_z" + format_number(zetas[k]), maps[k].variance[ctx.grid.center()]);
    }
    ctx.svg("pixel_map", render_svg(plot));
}

void run_fig3(Context& ctx, const std::vector<double>& zetas) {
    const auto gs = scalar_greens(ctx, zetas);
    CsvTable t({"zeta", "v_best_center", "theta_best"});
    for (std::size_t k = 0; k < zetas.size(); ++k) {
        const auto rep = best_quadrature(gs[k], DetectorSpec::pixel(ctx.grid.size(), ctx.grid.center(), ctx.cfg.lo));
        t.add_row({zetas[k], rep.variance_snu, rep.theta});
    }
    ctx.csv("central_pixel", t);
    const auto v = t.column(1);
    const auto best = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
    ctx.summary("optimal_zeta", zetas[best]);
    ctx.summary("optimal_variance", v[best]);
    ctx.svg("central_pixel", render_svg(LinePlot{"Central-pixel best squeezing",
                                                 "zeta",
                                                 "variance (SNU)",
                                                 {{"central pixel", t.column(0), v}},
                                                 {1.0}}));
}

void run_fig4(Context& ctx, const std::vector<double>& zetas) {
    const auto gs = scalar_greens(ctx, zetas);
    const auto axis = ctx.grid.positions();
    for (std::size_t k = 0; k < zetas.size(); ++k) {
        const auto rep = best_quadrature(gs[k], DetectorSpec::full(ctx.grid.size(), ctx.cfg.lo));
        const auto cov = covariance_map(gs[k], rep.theta, ctx.cfg.lo);
        const Eigen::MatrixXd off = cov.off_diagonal();
        const std::string tag = "z" + format_number(zetas[k]);
        ctx.note("zeta = " + format_number(zetas[k]) + ": theta = total-beam best " + format_number(rep.theta));
        ctx.csv("covariance_" + tag, matrix_triplets(axis, off, "covariance"));
        ctx.svg("covariance_" + tag, render_svg(Heatmap{"Pixel covariance, zeta = " + format_number(zetas[k]), axis, off}));
        ctx.prov.notes.pop_back();
        Eigen::Index i = 0, j = 0;
        off.cwiseAbs().maxCoeff(&i, &j);
        ctx.summary("largest_covariance_" + tag, off(i, j));
        ctx.summary("largest_covariance_separation_" + tag, std::abs(axis[static_cast<std::size_t>(i)] - axis[static_cast<std::size_t>(j)]));
    }
}

void run_fig5(Context& ctx, const std::vector<double>& zetas) {
    const auto gs = scalar_greens(ctx, zetas);
    CsvTable t({"zeta", "half_width_pixels", "radius", "transmission", "v_best", "chord"});
    LinePlot plot{"Best squeezing versus aperture transmission", "transmission", "variance (SNU)", {}, {1.0}};
    for (std::size_t k = 0; k < zetas.size(); ++k) {
        const auto scan = aperture_scan(gs[k], ctx.cfg.lo);
        const double v1 = scan.samples.back().variance;
        Series s{"zeta = " + format_number(zetas[k]), {}, {}};
        Series chord{"chord " + format_number(zetas[k]), {}, {}, true};
        for (const auto& a : scan.samples) {
            const double c = 1.0 + a.transmission * (v1 - 1.0);
            t.add_row({zetas[k], static_cast<double>(a.half_width_pixels), a.radius, a.transmission, a.variance, c});
            s.x.push_back(a.transmission);
            s.y.push_back(a.variance);
            chord.x.push_back(a.transmission);
            chord.y.push_back(c);
        }
        plot.series.push_back(std::move(s));
        plot.series.push_back(std::move(chord));
        const std::string tag = "_z" + format_number(zetas[k]);
        ctx.summary("best_transmission" + tag, scan.samples[scan.best].transmission);
        ctx.summary("best_radius" + tag, scan.samples[scan.best].radius);
        ctx.summary("chord_deviation" + tag, scan.chord_deviation);
    }
    ctx.csv("aperture", t);
    ctx.svg("aperture", render_svg(plot));
}

void run_fig6(Context& ctx, const std::vector<double>& zetas) {
    const auto gs = scalar_greens(ctx, zetas);
    const auto fmask = fourier_aperture_mask(ctx.grid, ctx.cfg.fourier_width);
    const auto smask = central_stop_mask(ctx.grid, ctx.cfg.stop_half_width);
    ctx.note("Fourier axis in cycles per unit r; aperture keeps |f| <= " + format_number(ctx.cfg.fourier_width / 2));
    ctx.note("central stop blocks |r| < " + format_number(ctx.cfg.stop_half_width));
    CsvTable t({"zeta", "fano_fourier", "fano_fourier_db", "fano_full_beam", "fano_central_stop", "fano_central_stop_db"});
    for (std::size_t k = 0; k < zetas.size(); ++k) {
        const GreenPair f = to_fourier(gs[k]);
        const auto fourier = intensity_noise(f, DetectorSpec{fmask, Plane::fourier, ctx.cfg.lo, std::nullopt});
        const auto full = intensity_noise(gs[k], DetectorSpec::full(ctx.grid.size()));
        const auto stop = intensity_noise(gs[k], DetectorSpec{smask, Plane::direct, ctx.cfg.lo, std::nullopt});
        t.add_row({zetas[k], fourier.fano, fourier.db, full.fano, stop.fano, stop.db});
    }
    ctx.csv("intensity", t);
    const auto db = t.column(2);
    ctx.summary("min_fourier_db", *std::min_element(db.begin(), db.end()));
    ctx.svg("intensity", render_svg(LinePlot{"Intensity noise",
                                             "zeta",
                                             "Fano factor (dB)",
                                             {{"Fourier aperture", t.column(0), db},
                                              {"central stop", t.column(0), t.column(5), true}},
                                             {0.0}}));
}

// ---- vector runs ----

void run_vec_profile(Context& ctx, const std::vector<double>& zetas) {
    const auto sol = bound_state(ctx);
    CsvTable t({"r", "u", "v"});
    for (std::size_t j = 0; j < ctx.grid.size(); ++j)
        t.add_row({ctx.grid.position(j), sol.profile.plus[j].real(), sol.profile.minus[j].real()});
    ctx.summary("residual", sol.residual);
    ctx.summary("newton_iterations", sol.iterations);
    ctx.summary("continuation_steps", sol.continuation_steps);
    ctx.summary("power_u", sol.profile.plus.power());
    ctx.summary("power_v", sol.profile.minus.power());
    const double z = zetas.back();
    const auto traj = propagate_vector(sol.profile, ctx.params, z, ctx.grid.steps_for(z) ? ctx.grid.steps_for(z) : 1);
    auto intensity_error = [&](const CVector& a, std::span<const cplx> b) {
        CVector ia(a.size()), ib(a.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
            ia[j] = std::norm(a[j]);
            ib[j] = std::norm(b[j]);
        }
        return l2_distance(ctx.grid, ia, ib);
    };
    const double eu = intensity_error(traj.u.back(), sol.profile.plus.samples());
    const double ev = intensity_error(traj.v.back(), sol.profile.minus.samples());
    ctx.note("intensity L2 change after zeta = " + format_number(z) + ": U " + format_number(eu) + ", V " +
             format_number(ev));
    ctx.summary("intensity_change_u", eu);
    ctx.summary("intensity_change_v", ev);
    ctx.csv("profile", t);
    ctx.svg("profile", render_svg(LinePlot{"Bound-state profile",
                                           "r",
                                           "amplitude",
                                           {{"U", t.column(0), t.column(1)}, {"V", t.column(0), t.column(2)}},
                                           {}}));
}

void run_vec_growth(Context& ctx, const std::vector<double>& zetas) {
    const auto sol = bound_state(ctx);
    ctx.say("computing the linear spectrum");
    const auto spec = bogoliubov_spectrum(sol);
    CsvTable ev({"re_lambda", "im_lambda"});
    for (const auto& l : spec.eigenvalues) ev.add_row({l.real(), l.imag()});
    ctx.csv("eigenvalues", ev);
    if (spec.unstable.empty()) throw Error(ErrorCode::InvalidArgument, "the bound state has no unstable mode");
    const auto& m = spec.unstable.front();
    ctx.summary("growth_rate", m.growth);
    ctx.summary("oscillation_frequency", std::abs(m.lambda.imag()));
    ctx.summary("odd_u_fraction", m.odd_u_fraction);
    ctx.summary("even_v_fraction", m.even_v_fraction);
    const QuantumConvention qc{ctx.cfg.photons_per_unit, 0.5};
    ctx.say("seeded propagation");
    const auto trace = seeded_growth(sol, spec, qc, zetas.back());
    CsvTable t({"zeta", "norm", "ln_norm", "fit"});
    for (std::size_t k = 0; k < trace.zeta.size(); ++k) {
        const double z = trace.zeta[k];
        const bool in = trace.fitted && z >= trace.window_begin && z <= trace.window_end;
        t.add_row({z, trace.norm[k], std::log(trace.norm[k]),
                   in ? trace.fit_intercept + trace.fit_slope * z : std::numeric_limits<double>::quiet_NaN()});
    }
    ctx.note("seed energy 1 photon; fit window [" + format_number(trace.window_begin) + ", " +
             format_number(trace.window_end) + "]");
    ctx.summary("fitted_slope", trace.fit_slope);
    ctx.summary("slope_ratio", trace.fit_slope / m.growth);
    ctx.csv("growth", t);
    ctx.svg("growth", render_svg(LinePlot{"Seeded divergence",
                                          "zeta",
                                          "ln norm",
                                          {{"nonlinear", t.column(0), t.column(2)},
                                           {"exponential fit", t.column(0), t.column(3), true}},
                                          {}}));
}

void run_vec_breaking(Context& ctx, const std::vector<double>&) {
    const auto sol = bound_state(ctx);
    const QuantumConvention qc{ctx.cfg.photons_per_unit, 0.5};
    EnsembleOptions opt;
    opt.n_runs = ctx.cfg.runs;
    opt.zeta_max = ctx.cfg.zeta_max;
    opt.threshold = ctx.cfg.threshold;
    opt.seed = ctx.cfg.seed;
    ctx.say("Wigner ensemble of " + std::to_string(opt.n_runs) + " runs");
    const auto stats = wigner_ensemble(sol, qc, opt);
    CsvTable t({"run", "breaking_zeta", "direction", "censored"});
    for (std::size_t k = 0; k < stats.n_runs; ++k)
        t.add_row({static_cast<double>(k), stats.breaking_distance[k], static_cast<double>(stats.direction[k]),
                   stats.censored[k] ? 1.0 : 0.0});
    ctx.note("photons per unit power = " + format_number(ctx.cfg.photons_per_unit) + ", asymmetry threshold = " +
             format_number(ctx.cfg.threshold));
    ctx.csv("ensemble", t);
    ctx.summary("broken", static_cast<double>(stats.broken()));
    ctx.summary("left", static_cast<double>(stats.left()));
    if (stats.broken() > 0) {
        ctx.summary("binomial_p", binomial_two_sided_p(stats.left(), stats.broken()));
        ctx.summary("mean_breaking_zeta", stats.mean_breaking_distance());
    }

    ctx.say("seeded amplitude sweep");
    const double linear_threshold = std::min(0.1, ctx.cfg.threshold);
    CsvTable s({"amplitude", "breaking_zeta", "direction", "breaking_zeta_linear_regime"});
    for (double a : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2}) {
        const auto b = seeded_breaking(sol, a, std::max(ctx.cfg.zeta_max, 150.0), ctx.cfg.threshold, 10);
        const auto l = seeded_breaking(sol, a, std::max(ctx.cfg.zeta_max, 150.0), linear_threshold, 10);
        s.add_row({a, b.distance, static_cast<double>(b.direction), l.distance});
    }
    ctx.note("linear-regime column uses threshold " + format_number(linear_threshold));
    ctx.csv("seed_sweep", s);
    std::vector<double> la;
    for (double a : s.column(0)) la.push_back(std::log10(a));
    ctx.svg("seed_sweep", render_svg(LinePlot{"Breaking distance versus seed amplitude",
                                              "log10 amplitude",
                                              "zeta",
                                              {{"threshold " + format_number(ctx.cfg.threshold), la, s.column(1)},
                                               {"threshold " + format_number(linear_threshold), la, s.column(3), true}},
                                              {}}));
}

void run_polarization(Context& ctx, const std::vector<double>& zetas, PolarizationBasis basis, const std::string& file) {
    const auto gs = vector_greens(ctx, zetas, basis);
    symplectic_note(ctx, gs);
    const bool lin = basis == PolarizationBasis::linear;
    const std::string a = lin ? "x" : "plus", b = lin ? "y" : "minus";
    CsvTable t({"zeta", "v_total", "theta_total", "v_" + a, "v_" + b, "v_" + a + "_at_theta", "v_" + b + "_at_theta",
                "correlation"});
    for (std::size_t k = 0; k < zetas.size(); ++k) {
        const auto p = polarization_statistics(gs[k], ctx.cfg.lo);
        t.add_row({zetas[k], p.total, p.theta, p.plus, p.minus, p.plus_at_theta, p.minus_at_theta, p.correlation});
    }
    ctx.csv(file, t);
    ctx.summary("correlation_final", t.rows().back()[7]);
    ctx.summary("v_total_final", t.rows().back()[1]);
    if (ctx.cfg.scenario == "fig11") {
        ctx.svg(file, render_svg(LinePlot{"Best squeezing per polarization",
                                          "zeta",
                                          "variance (SNU)",
                                          {{a, t.column(0), t.column(3)}, {b, t.column(0), t.column(4)},
                                           {"total", t.column(0), t.column(1), true}},
                                          {1.0}}));
    } else {
        ctx.svg(file, render_svg(LinePlot{"Total squeezing and correlation",
                                          "zeta",
                                          "variance (SNU) / correlation",
                                          {{"total variance", t.column(0), t.column(1)},
                                           {"V(" + a + ") at theta", t.column(0), t.column(5)},
                                           {"V(" + b + ") at theta", t.column(0), t.column(6)},
                                           {"correlation", t.column(0), t.column(7), true}},
                                          {0.0, 1.0}}));
    }
}

void run_fig12(Context& ctx, const std::vector<double>& zetas) {
    const auto gs = vector_greens(ctx, zetas, ctx.cfg.basis);
    const auto axis = ctx.grid.positions();
    for (std::size_t k = 0; k < zetas.size(); ++k) {
        const auto p = polarization_statistics(gs[k], ctx.cfg.lo);
        const auto maps = vector_covariance_maps(gs[k], p.theta, ctx.cfg.lo);
        const std::string tag = "z" + format_number(zetas[k]);
        ctx.note("zeta = " + format_number(zetas[k]) + ": theta = total-beam best " + format_number(p.theta));
        for (const auto& [name, m] : {std::pair{"uu", &maps.uu}, std::pair{"vv", &maps.vv}, std::pair{"uv", &maps.uv}}) {
            ctx.csv(std::string(name) + "_" + tag, matrix_triplets(axis, *m, "covariance"));
            ctx.svg(std::string(name) + "_" + tag,
                    render_svg(Heatmap{std::string(name) + " covariance, zeta = " + format_number(zetas[k]), axis, *m}));
            ctx.summary(std::string("min_") + name + "_" + tag, m->minCoeff());
        }
        ctx.prov.notes.pop_back();
    }
}

void run_custom(Context& ctx, const std::vector<double>& zetas) {
    if (ctx.cfg.vector_field) {
        run_polarization(ctx, zetas, ctx.cfg.basis, "polarization");
        return;
    }
    const auto gs = scalar_greens(ctx, zetas);
    symplectic_note(ctx, gs);
    CsvTable t({"zeta", "v_best_full", "theta_best", "v_best_center", "fano_full"});
    for (std::size_t k = 0; k < zetas.size(); ++k) {
        const auto full = best_quadrature(gs[k], DetectorSpec::full(ctx.grid.size(), ctx.cfg.lo));
        const auto center = best_quadrature(gs[k], DetectorSpec::pixel(ctx.grid.size(), ctx.grid.center(), ctx.cfg.lo));
        const auto fano = intensity_noise(gs[k], DetectorSpec::full(ctx.grid.size()));
        t.add_row({zetas[k], full.variance_snu, full.theta, center.variance_snu, fano.fano});
    }
    ctx.csv("summary", t);
    ctx.svg("summary", render_svg(LinePlot{"Best squeezing",
                                           "zeta",
                                           "variance (SNU)",
                                           {{"full beam", t.column(0), t.column(1)},
                                            {"central pixel", t.column(0), t.column(3)}},
                                           {1.0}}));
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg, std::ostream* log) {
    const auto report = validate(cfg);
    if (!report.ok()) {
        for (const auto& e : report.entries)
            if (e.severity == ValidationEntry::Severity::error) throw Error(ErrorCode::ConfigError, e.message);
    }
    Context ctx{cfg, log, make_grid(cfg.n, cfg.half_width, cfg.dz), KerrParams{2.0, cfg.xpm_ratio}, cfg.out, {}, {}};
    ctx.params.validate();
    const auto zetas = effective_zeta(cfg);
    const bool fig13 = cfg.scenario == "fig13";
    ctx.prov.version = version_string;
    ctx.prov.scenario = cfg.scenario;
    ctx.prov.config_hash = config_hash(cfg);
    ctx.prov.config_text = resolved_config_text(cfg);
    ctx.prov.zeta = zetas;
    ctx.prov.lo = to_string(cfg.lo);
    ctx.prov.basis = to_string(fig13 ? PolarizationBasis::linear : cfg.basis);
    ctx.prov.seed = cfg.seed;
    ctx.note(std::string("Green's method = ") + to_string(cfg.method));
    std::filesystem::create_directories(ctx.out);

    const std::string& s = cfg.scenario;
    if (s == "fig1") run_fig1(ctx, zetas);
    else if (s == "fig2") run_fig2(ctx, zetas);
    else if (s == "fig3") run_fig3(ctx, zetas);
    else if (s == "fig4") run_fig4(ctx, zetas);
    else if (s == "fig5") run_fig5(ctx, zetas);
    else if (s == "fig6") run_fig6(ctx, zetas);
    else if (s == "vec-profile") run_vec_profile(ctx, zetas);
    else if (s == "vec-growth") run_vec_growth(ctx, zetas);
    else if (s == "vec-breaking") run_vec_breaking(ctx, zetas);
    else if (s == "fig10") run_polarization(ctx, zetas, cfg.basis, "polarization");
    else if (s == "fig11") run_polarization(ctx, zetas, cfg.basis, "components");
    else if (s == "fig12") run_fig12(ctx, zetas);
    else if (s == "fig13") run_polarization(ctx, zetas, PolarizationBasis::linear, "linear");
    else run_custom(ctx, zetas);
    return std::move(ctx.result);
}

std::string error_line(const std::string& code, const std::string& message) {
    std::string m;
    for (char c : message) {
        if (c == '\n' || c == '\r') m += ' ';
        else if (c == '"' || c == '\\') m += std::string("\\") + c;
        else m += c;
    }
    return "error code=" + code + " message=\"" + m + "\"";
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    ScenarioConfig cfg;
    std::string help;
    bool dry = false;
    try {
        cfg = parse_arguments(args, &help, &dry);
    } catch (const Error& e) {
        const std::string what = e.what();
        const std::string prefix = std::string(to_string(e.code())) + ": ";
        err << error_line(to_string(e.code()), what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what) << '\n';
        return 2;
    }
    if (!help.empty()) {
        out << help;
        return 0;
    }
    const auto report = validate(cfg);
    if (dry) {
        out << report.text() << '\n';
        return report.ok() ? 0 : 2;
    }
    for (const auto& e : report.entries) {
        if (e.severity == ValidationEntry::Severity::error) {
            err << error_line("ConfigError", e.message) << '\n';
            return 2;
        }
        err << "warning: " << e.message << '\n';
    }
    try {
        const auto result = run_scenario(cfg, &err);
        for (const auto& line : result.summary) out << line << '\n';
        for (const auto& f : result.files) out << "wrote " << f.string() << '\n';
    } catch (const Error& e) {
        const std::string what = e.what();
        const std::string prefix = std::string(to_string(e.code())) + ": ";
        err << error_line(to_string(e.code()), what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what) << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << error_line("IoError", e.what()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << error_line("Internal", e.what()) << '\n';
        return 1;
    }
    return 0;
}

}  // namespace kerrsol
