#include "kerrsol/stability.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "kerrsol/fft.hpp"

namespace kerrsol {

namespace {

double odd_fraction(const Grid& grid, const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    double odd = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const auto rj = static_cast<Eigen::Index>(grid.reflect(j));
        odd += std::norm(0.5 * (a(jj) - a(rj))) + std::norm(0.5 * (b(jj) - b(rj)));
        total += std::norm(a(jj)) + std::norm(b(jj));
    }
    return total > 0.0 ? odd / total : 0.0;
}

// Inverse iteration on (M - lambda I) sharpens an eigenpair from the dense QR
// solver, whose accuracy on a 1024-dimensional non-normal matrix is limited.
void refine(const Eigen::MatrixXd& m, cplx& lambda, Eigen::VectorXcd& v) {
    const Eigen::MatrixXcd mc = m.cast<cplx>();
    for (int pass = 0; pass < 3; ++pass) {
        Eigen::MatrixXcd shifted = mc;
        shifted.diagonal().array() -= lambda;
        Eigen::VectorXcd w = shifted.partialPivLu().solve(v);
        if (!w.allFinite() || w.norm() == 0.0) break;
        v = w / w.norm();
        const Eigen::VectorXcd mv = mc * v;
        lambda = v.dot(mv);  // v^H M v with |v| = 1
        if ((mv - lambda * v).norm() < 1e-12 * std::max(1.0, std::abs(lambda))) break;
    }
}

BogoliubovSpectrum analyse(const Eigen::MatrixXd& m, const Grid& grid, bool has_v, double threshold) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, true);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::SpectralResidual, "dense eigensolver failed");
    BogoliubovSpectrum out;
    out.threshold = threshold;
    const Eigen::VectorXcd ev = solver.eigenvalues();
    out.eigenvalues.assign(ev.data(), ev.data() + ev.size());

    std::vector<Eigen::Index> picks;
    for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (ev(k).real() > threshold && ev(k).imag() >= 0.0) picks.push_back(k);
    std::ranges::sort(picks, [&](auto a, auto b) { return ev(a).real() > ev(b).real(); });

    const Eigen::MatrixXcd vectors = solver.eigenvectors();
    for (const auto k : picks) {
        UnstableMode mode;
        mode.lambda = ev(k);
        Eigen::VectorXcd v = vectors.col(k);
        v /= v.norm();
        refine(m, mode.lambda, v);
        // Fix the arbitrary complex phase: largest component real positive.
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        v *= std::polar(1.0, -std::arg(v(imax)));
        mode.vector = v;
        mode.growth = mode.lambda.real();
        mode.residual = (m.cast<cplx>() * v - mode.lambda * v).norm();
        if (mode.residual > 1e-8)
            throw Error(ErrorCode::SpectralResidual, "unstable mode residual " + std::to_string(mode.residual));
        const Eigen::Index stride = has_v ? 2 * n : n;
        mode.odd_u_fraction = odd_fraction(grid, v.segment(0, n), v.segment(stride, n));
        mode.even_v_fraction = has_v ? 1.0 - odd_fraction(grid, v.segment(n, n), v.segment(stride + n, n)) : 0.0;
        double partner = std::numeric_limits<double>::infinity();
        for (const auto& e : out.eigenvalues) partner = std::min(partner, std::abs(e + mode.lambda));
        mode.partner_defect = partner;
        if (!has_v) {
            // Embed into the (U, V) layout with zero V parts.
            Eigen::VectorXcd full = Eigen::VectorXcd::Zero(4 * n);
            full.segment(0, n) = v.segment(0, n);
            full.segment(2 * n, n) = v.segment(n, n);
            mode.vector = full;
        }
        out.unstable.push_back(std::move(mode));
    }
    return out;
}

}  // namespace

Eigen::VectorXcd UnstableMode::bogoliubov_components() const {
    const auto n = vector.size() / 4;
    Eigen::VectorXcd out(4 * n);
    const cplx i(0.0, 1.0);
    out.segment(0, n) = vector.segment(0, n) + i * vector.segment(2 * n, n);
    out.segment(n, n) = vector.segment(0, n) - i * vector.segment(2 * n, n);
    out.segment(2 * n, n) = vector.segment(n, n) + i * vector.segment(3 * n, n);
    out.segment(3 * n, n) = vector.segment(n, n) - i * vector.segment(3 * n, n);
    return out;
}

PolarizedField UnstableMode::perturbation(const Grid& grid) const {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (vector.size() != 4 * n) throw Error(ErrorCode::InvalidArgument, "mode does not match the grid");
    CVector du(grid.size()), dv(grid.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        du[static_cast<std::size_t>(j)] = {vector(j).real(), vector(2 * n + j).real()};
        dv[static_cast<std::size_t>(j)] = {vector(n + j).real(), vector(3 * n + j).real()};
    }
    return {{grid, std::move(du)}, {grid, std::move(dv)}};
}

BogoliubovSpectrum bogoliubov_spectrum(const VectorSolitonSolution& solution, double threshold) {
    const Grid& grid = solution.profile.grid();
    const auto n = static_cast<Eigen::Index>(grid.size());
    const double g = solution.params.spm;
    const double b = solution.params.xpm_ratio;
    const Eigen::MatrixXd lap = laplacian_matrix(grid, solution.laplacian);

    // dU = a + i b: a' = -L0 b, b' = L1 a, with L0 block diagonal and L1
    // carrying the XPM coupling 2 spm B U V.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4 * n, 4 * n);
    for (int c = 0; c < 2; ++c) {
        m.block(c * n, 2 * n + c * n, n, n) = -lap;
        m.block(2 * n + c * n, c * n, n, n) = lap;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const double u = solution.profile.plus[static_cast<std::size_t>(j)].real();
        const double v = solution.profile.minus[static_cast<std::size_t>(j)].real();
        const double u2 = u * u;
        const double v2 = v * v;
        m(j, 2 * n + j) -= g * (u2 + b * v2) - solution.mu_plus;
        m(n + j, 3 * n + j) -= g * (v2 + b * u2) - solution.mu_minus;
        m(2 * n + j, j) += g * (3.0 * u2 + b * v2) - solution.mu_plus;
        m(3 * n + j, n + j) += g * (3.0 * v2 + b * u2) - solution.mu_minus;
        m(2 * n + j, n + j) = 2.0 * g * b * u * v;
        m(3 * n + j, j) = 2.0 * g * b * u * v;
    }
    return analyse(m, grid, true, threshold);
}

BogoliubovSpectrum bogoliubov_spectrum_scalar_block(const VectorSolitonSolution& solution, double threshold) {
    const Grid& grid = solution.profile.grid();
    const auto n = static_cast<Eigen::Index>(grid.size());
    const double g = solution.params.spm;
    const double b = solution.params.xpm_ratio;
    const Eigen::MatrixXd lap = laplacian_matrix(grid, solution.laplacian);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    m.block(0, n, n, n) = -lap;
    m.block(n, 0, n, n) = lap;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double u2 = std::norm(solution.profile.plus[static_cast<std::size_t>(j)]);
        const double v2 = std::norm(solution.profile.minus[static_cast<std::size_t>(j)]);
        m(j, n + j) -= g * (u2 + b * v2) - solution.mu_plus;
        m(n + j, j) += g * (3.0 * u2 + b * v2) - solution.mu_plus;
    }
    return analyse(m, grid, false, threshold);
}

double asymmetry(const PolarizedField& field) {
    const Grid& grid = field.grid();
    const std::size_t n = grid.size();
    const std::size_t c = grid.center();
    auto intensity = [&](std::size_t j) { return std::norm(field.plus[j]) + std::norm(field.minus[j]); };
    double left = 0.5 * (intensity(0) + intensity(c));
    double right = left;
    for (std::size_t j = 1; j < c; ++j) left += intensity(j);
    for (std::size_t j = c + 1; j < n; ++j) right += intensity(j);
    const double total = left + right;
    return total > 0.0 ? (left - right) / total : 0.0;
}

namespace {

double block_asymmetry(const FftBlock& block, const Grid& grid) {
    const auto u = block.column(0);
    const auto v = block.column(1);
    const std::size_t n = grid.size();
    const std::size_t c = grid.center();
    auto intensity = [&](std::size_t j) { return std::norm(u[j]) + std::norm(v[j]); };
    double left = 0.5 * (intensity(0) + intensity(c));
    double right = left;
    for (std::size_t j = 1; j < c; ++j) left += intensity(j);
    for (std::size_t j = c + 1; j < n; ++j) right += intensity(j);
    const double total = left + right;
    return total > 0.0 ? (left - right) / total : 0.0;
}

struct BreakResult {
    double distance = 0.0;
    int direction = 0;
    bool censored = true;
};

// Removes the parity-breaking part (U odd, V even) left by round-off.
void project_symmetric(FftBlock& block, const Grid& grid) {
    auto u = block.column(0);
    auto v = block.column(1);
    for (std::size_t j = 0; j <= grid.center(); ++j) {
        const std::size_t m = grid.reflect(j);
        const cplx ue = 0.5 * (u[j] + u[m]);
        const cplx vo = 0.5 * (v[j] - v[m]);
        u[j] = ue;
        u[m] = ue;
        v[j] = vo;
        v[m] = -vo;
    }
}

// Propagates the two columns of `block` until |asymmetry| exceeds the threshold.
BreakResult run_until_break(const SplitStepper& stepper, FftBlock& block, double zeta_max, double threshold,
                            std::size_t check_stride, bool keep_symmetric = false) {
    const Grid& grid = stepper.grid();
    const std::size_t total = grid.steps_for(zeta_max);
    std::size_t done = 0;
    while (done < total) {
        const std::size_t chunk = std::min(check_stride, total - done);
        stepper.advance_vector(block, 0, 1, chunk);
        done += chunk;
        if (keep_symmetric) project_symmetric(block, grid);
        const double a = block_asymmetry(block, grid);
        if (std::abs(a) > threshold) return {static_cast<double>(done) * grid.dz(), a > 0.0 ? 1 : -1, false};
    }
    return {zeta_max, 0, true};
}

std::mt19937_64 run_engine(std::uint64_t seed, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index & 0xffffffffu),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
    return std::mt19937_64(seq);
}

// Complex Gaussian field noise with per-pixel mode variance `variance`
// photons: real and imaginary parts each carry variance / 2.
void add_vacuum_noise(std::span<cplx> u, std::mt19937_64& rng, double variance, double dr, double photons) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double s = std::sqrt(0.5 * variance / (dr * photons));
    for (auto& x : u) {
        const double re = normal(rng);
        const double im = normal(rng);
        x += s * cplx(re, im);
    }
}

void check_solution(const VectorSolitonSolution& solution) {
    if (solution.profile.plus.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty stationary solution");
}

}  // namespace

GrowthTrace seeded_growth(const VectorSolitonSolution& solution, const BogoliubovSpectrum& spectrum,
                          const QuantumConvention& convention, double zeta_max, double seed_photons,
                          std::size_t record_stride) {
    check_solution(solution);
    if (spectrum.unstable.empty()) throw Error(ErrorCode::InvalidArgument, "no unstable mode to seed");
    if (!(convention.photons_per_unit > 0.0)) throw Error(ErrorCode::InvalidArgument, "photons_per_unit must be positive");
    if (!(seed_photons >= 0.0)) throw Error(ErrorCode::InvalidArgument, "seed energy must be non-negative");
    const Grid& grid = solution.profile.grid();
    const UnstableMode& mode = spectrum.unstable.front();
    PolarizedField pert = mode.perturbation(grid);
    const double energy = pert.power() * convention.photons_per_unit;
    const double scale = energy > 0.0 ? std::sqrt(seed_photons / energy) : 0.0;

    PolarizedField seeded = solution.profile;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        seeded.plus[j] += scale * pert.plus[j];
        seeded.minus[j] += scale * pert.minus[j];
    }
    const Trajectory base = propagate_vector(solution.profile, solution.params, zeta_max, record_stride);
    const Trajectory test = propagate_vector(seeded, solution.params, zeta_max, record_stride);

    GrowthTrace trace;
    trace.modulation_frequency = std::abs(mode.lambda.imag());
    trace.soliton_norm = std::sqrt(solution.profile.power());
    for (std::size_t k = 0; k < base.size(); ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j)
            s += std::norm(test.u[k][j] - base.u[k][j]) + std::norm(test.v[k][j] - base.v[k][j]);
        trace.zeta.push_back(base.zeta[k]);
        trace.norm.push_back(std::sqrt(s * grid.dr()));
    }
    trace.seed_norm = trace.norm.front();
    trace.fit_residual.assign(trace.zeta.size(), 0.0);

    const double lo = 10.0 * trace.seed_norm;
    const double hi = 0.01 * trace.soliton_norm;
    std::vector<std::size_t> window;
    for (std::size_t k = 0; k < trace.norm.size(); ++k) {
        if (trace.norm[k] > hi) break;
        if (trace.norm[k] >= lo) window.push_back(k);
    }
    if (trace.seed_norm > 0.0 && window.size() >= 3) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto k : window) {
            const double x = trace.zeta[k];
            const double y = std::log(trace.norm[k]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double cnt = static_cast<double>(window.size());
        trace.fit_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
        trace.fit_intercept = (sy - trace.fit_slope * sx) / cnt;
        trace.window_begin = trace.zeta[window.front()];
        trace.window_end = trace.zeta[window.back()];
        for (const auto k : window)
            trace.fit_residual[k] = std::log(trace.norm[k]) - (trace.fit_intercept + trace.fit_slope * trace.zeta[k]);
        trace.fitted = true;
    }
    return trace;
}

std::size_t EnsembleStats::broken() const {
    return static_cast<std::size_t>(std::ranges::count(censored, false));
}

std::size_t EnsembleStats::left() const { return static_cast<std::size_t>(std::ranges::count(direction, 1)); }

double EnsembleStats::mean_breaking_distance() const {
    double s = 0.0;
    std::size_t c = 0;
    for (std::size_t k = 0; k < breaking_distance.size(); ++k)
        if (!censored[k]) {
            s += breaking_distance[k];
            ++c;
        }
    return c > 0 ? s / static_cast<double>(c) : std::numeric_limits<double>::quiet_NaN();
}

EnsembleStats wigner_ensemble(const VectorSolitonSolution& solution, const QuantumConvention& convention,
                              const EnsembleOptions& options) {
    check_solution(solution);
    if (options.n_runs == 0) throw Error(ErrorCode::InvalidArgument, "n_runs must be at least 1");
    if (!(convention.photons_per_unit > 0.0) || !(convention.wigner_noise_variance >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "invalid quantum convention");
    if (!(options.threshold > 0.0 && options.threshold < 1.0))
        throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
    if (options.check_stride == 0) throw Error(ErrorCode::InvalidArgument, "check stride must be positive");
    const Grid& grid = solution.profile.grid();
    grid.steps_for(options.zeta_max);
    const SplitStepper stepper(grid, solution.params);

    EnsembleStats stats;
    stats.n_runs = options.n_runs;
    stats.seed = options.seed;
    stats.threshold = options.threshold;
    stats.zeta_max = options.zeta_max;
    stats.breaking_distance.assign(options.n_runs, options.zeta_max);
    stats.direction.assign(options.n_runs, 0);
    std::vector<char> censored(options.n_runs, 1);

    parallel_chunks(options.n_runs, 4, [&](std::size_t begin, std::size_t end) {
        FftBlock block(grid.size(), 2);
        for (std::size_t k = begin; k < end; ++k) {
            auto u = block.column(0);
            auto v = block.column(1);
            std::ranges::copy(solution.profile.plus.samples(), u.begin());
            std::ranges::copy(solution.profile.minus.samples(), v.begin());
            if (!options.noiseless) {
                auto rng = run_engine(options.seed, k);
                add_vacuum_noise(u, rng, convention.wigner_noise_variance, grid.dr(), convention.photons_per_unit);
                add_vacuum_noise(v, rng, convention.wigner_noise_variance, grid.dr(), convention.photons_per_unit);
            }
            const auto r = run_until_break(stepper, block, options.zeta_max, options.threshold, options.check_stride,
                                           options.noiseless);
            stats.breaking_distance[k] = r.distance;
            stats.direction[k] = r.direction;
            censored[k] = r.censored ? 1 : 0;
        }
    });
    stats.censored.assign(censored.begin(), censored.end());
    return stats;
}

SeededBreaking seeded_breaking(const VectorSolitonSolution& solution, double amplitude, double zeta_max,
                               double threshold, std::size_t check_stride) {
    check_solution(solution);
    if (check_stride == 0) throw Error(ErrorCode::InvalidArgument, "check stride must be positive");
    const Grid& grid = solution.profile.grid();
    const SplitStepper stepper(grid, solution.params);
    FftBlock block(grid.size(), 2);
    auto u = block.column(0);
    auto v = block.column(1);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        u[j] = solution.profile.plus[j] * (1.0 + amplitude * std::tanh(grid.position(j)));
        v[j] = solution.profile.minus[j];
    }
    const auto r = run_until_break(stepper, block, zeta_max, threshold, check_stride);
    return {amplitude, r.distance, r.direction, r.censored};
}

WignerQuadrature wigner_quadrature_variance(const ComplexField& input, const KerrParams& params, double zeta,
                                            std::span<const cplx> lo_weights, double theta,
                                            const QuantumConvention& convention, std::size_t n_runs,
                                            std::uint64_t seed) {
    const Grid& grid = input.grid();
    if (lo_weights.size() != grid.size()) throw Error(ErrorCode::InvalidArgument, "LO weights do not match the grid");
    if (n_runs < 2) throw Error(ErrorCode::InvalidArgument, "at least two runs are needed for a variance");
    double wn = 0.0;
    for (const auto& w : lo_weights) wn += std::norm(w);
    if (!(wn > 0.0)) throw Error(ErrorCode::EmptyDetector, "LO weights vanish");
    const double wscale = 1.0 / std::sqrt(wn);
    const std::size_t steps = grid.steps_for(zeta);
    const SplitStepper stepper(grid, params);

    FftBlock mean_block(grid.size(), 1);
    std::ranges::copy(input.samples(), mean_block.column(0).begin());
    stepper.advance_scalar(mean_block, 0, steps);
    const CVector mean(mean_block.column(0).begin(), mean_block.column(0).end());

    const double to_modes = std::sqrt(grid.dr() * convention.photons_per_unit);
    const cplx phase = std::polar(1.0, -theta);
    std::vector<double> x(n_runs);
    parallel_chunks(n_runs, 64, [&](std::size_t begin, std::size_t end) {
        FftBlock block(grid.size(), 1);
        for (std::size_t k = begin; k < end; ++k) {
            auto u = block.column(0);
            std::ranges::copy(input.samples(), u.begin());
            auto rng = run_engine(seed, k);
            add_vacuum_noise(u, rng, convention.wigner_noise_variance, grid.dr(), convention.photons_per_unit);
            stepper.advance_scalar(block, 0, steps);
            cplx q = 0.0;
            for (std::size_t j = 0; j < grid.size(); ++j) q += std::conj(lo_weights[j] * wscale) * (u[j] - mean[j]);
            x[k] = 2.0 * (phase * q * to_modes).real();
        }
    });
    const double avg = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n_runs);
    double ss = 0.0;
    for (const double xi : x) ss += (xi - avg) * (xi - avg);
    WignerQuadrature out;
    out.samples = n_runs;
    out.variance = ss / static_cast<double>(n_runs - 1);
    out.standard_error = out.variance * std::sqrt(2.0 / static_cast<double>(n_runs - 1));
    return out;
}

double binomial_two_sided_p(std::size_t k, std::size_t n) {
    if (k > n) throw Error(ErrorCode::InvalidArgument, "more successes than trials");
    const double nd = static_cast<double>(n);
    auto logp = [&](std::size_t j) {
        const double jd = static_cast<double>(j);
        return std::lgamma(nd + 1.0) - std::lgamma(jd + 1.0) - std::lgamma(nd - jd + 1.0) - nd * std::log(2.0);
    };
    const double ref = logp(k);
    double p = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        const double lj = logp(j);
        if (lj <= ref + 1e-9) p += std::exp(lj);
    }
    return std::min(p, 1.0);
}

void write_ensemble_csv(std::ostream& os, const EnsembleStats& stats) {
    os << "index,breaking_zeta,direction,censored\n" << std::setprecision(17);
    for (std::size_t k = 0; k < stats.n_runs; ++k)
        os << k << ',' << stats.breaking_distance[k] << ',' << stats.direction[k] << ','
           << (stats.censored[k] ? 1 : 0) << '\n';
}

void write_growth_csv(std::ostream& os, const GrowthTrace& trace) {
    os << "zeta,norm,fit,residual\n" << std::setprecision(17);
    for (std::size_t k = 0; k < trace.zeta.size(); ++k) {
        const double fit = trace.fitted ? std::exp(trace.fit_intercept + trace.fit_slope * trace.zeta[k]) : 0.0;
        os << trace.zeta[k] << ',' << trace.norm[k] << ',' << fit << ',' << trace.fit_residual[k] << '\n';
    }
}

}  // namespace kerrsol
