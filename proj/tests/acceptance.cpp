// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when everything passes).

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "kerrsol/detection.hpp"
#include "kerrsol/fluctuations.hpp"
#include "kerrsol/stability.hpp"
#include "kerrsol/stationary.hpp"

using namespace kerrsol;

namespace {

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::printf("%s [%2d] %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str(), s);
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Best variance of a single mode after a linearized Kerr phase phi, from the
// quadrature covariance matrix pushed through many small shear steps
// (X, P) -> (X, P + 2 dphi X) starting from vacuum.
double covariance_oracle(double phi) {
    Eigen::Matrix2d sigma = Eigen::Matrix2d::Identity();
    const int steps = 1000;
    Eigen::Matrix2d shear;
    shear << 1.0, 0.0, 2.0 * phi / steps, 1.0;
    for (int k = 0; k < steps; ++k) sigma = shear * sigma * shear.transpose();
    return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(sigma).eigenvalues().minCoeff();
}

std::vector<double> range(double begin, double end, double step) {
    std::vector<double> out;
    const auto n = static_cast<int>(std::lround((end - begin) / step));
    for (int k = 0; k <= n; ++k) out.push_back(std::round((begin + k * step) * 1e9) / 1e9);
    return out;
}

struct ScalarGreens {
    std::vector<double> zeta;
    std::vector<GreenPair> green;

    const GreenPair& at(double z) const {
        for (std::size_t k = 0; k < zeta.size(); ++k)
            if (std::abs(zeta[k] - z) < 1e-9) return green[k];
        throw Error(ErrorCode::InvalidArgument, "distance not prepared");
    }
};

}  // namespace

int main() {
    const Grid grid = default_grid();
    const std::size_t n = grid.size();
    const KerrParams params;
    const QuantumConvention quantum{1e8, 0.5};
    const ComplexField sech = scalar_soliton(grid);

    criterion(1, "symplectic structure", [&] {
        double worst = 0.0, slowest = 0.0;
        std::string cases;
        for (double z : {0.3, 1.0, 3.0}) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto gp = build_green_scalar(propagate_scalar(sech, params, z));
            slowest = std::max(slowest, seconds_since(t0));
            worst = std::max(worst, gp.defect.worst());
            cases += fmt(" s%.1f=%.1e", z, gp.defect.worst());
        }
        const auto sol = solve_vector_soliton(grid, params, 0.4, 1.0);
        for (double z : {0.6, 2.0}) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto gp = build_green_vector(propagate_vector(sol.profile, params, z));
            slowest = std::max(slowest, seconds_since(t0));
            worst = std::max(worst, gp.defect.worst());
            cases += fmt(" v%.1f=%.1e", z, gp.defect.worst());
        }
        return Verdict{worst < 1e-6 && slowest <= 120.0,
                       fmt("max defect %.2e, slowest case %.1f s;", worst, slowest) + cases};
    });

    criterion(2, "shot-noise anchor", [&] {
        const auto modes = pixel_modes(sech);
        const GreenPair direct = identity_green(grid, 1, Eigen::Map<const Eigen::VectorXcd>(modes.data(), n));
        const GreenPair fourier = to_fourier(direct);
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst_v = 0.0, worst_f = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            DetectorSpec det;
            det.mask.resize(n);
            for (auto& m : det.mask) m = u(rng) < 0.5 ? 0.0 : u(rng);
            det.mask[grid.center()] = 1.0;
            det.lo = trial % 2 ? LoModel::matched : LoModel::uniform;
            det.plane = trial % 3 == 0 ? Plane::fourier : Plane::direct;
            if (trial % 4 != 0) det.theta = std::numbers::pi * u(rng);
            const GreenPair& gp = det.plane == Plane::fourier ? fourier : direct;
            const auto rep = det.theta ? quadrature_variance(gp, det) : best_quadrature(gp, det);
            worst_v = std::max(worst_v, std::abs(rep.variance_snu - 1.0));
            worst_f = std::max(worst_f, std::abs(intensity_noise(gp, det).fano - 1.0));
        }
        return Verdict{worst_v <= 1e-10 && worst_f <= 1e-10,
                       fmt("max |V-1| %.1e, max |F-1| %.1e over 20 detectors", worst_v, worst_f)};
    });

    criterion(3, "plane-wave oracle", [&] {
        double worst_lib = 0.0, worst_closed = 0.0;
        for (double phi : {0.1, 0.3, 1.0, 3.0}) {
            const double oracle = covariance_oracle(phi);
            const double closed = 1.0 + 2.0 * phi * phi - 2.0 * phi * std::sqrt(1.0 + phi * phi);
            worst_closed = std::max(worst_closed, std::abs(closed - oracle));
            const double lib = best_quadrature(single_mode_kerr(phi), DetectorSpec::full(1)).variance_snu;
            worst_lib = std::max({worst_lib, std::abs(lib - oracle), std::abs(plane_wave_squeezing(phi) - oracle)});
        }
        return Verdict{worst_lib <= 1e-10 && worst_closed <= 1e-10,
                       fmt("library vs covariance oracle %.1e, closed form vs oracle %.1e", worst_lib, worst_closed)};
    });

    // Scalar Green's matrices on the 0.05 grid, shared by the scalar figures.
    ScalarGreens scalar;
    scalar.zeta = range(0.0, 3.0, 0.05);
    {
        const auto traj = propagate_scalar(sech, params, 3.0);
        scalar.green = build_green_scalar(traj, scalar.zeta);
    }
    auto full_matched = [&] { return DetectorSpec::full(n, LoModel::matched); };

    criterion(4, "full-beam squeezing landmarks", [&] {
        bool below = true, monotone = true;
        double prev = 1e300;
        for (double z : range(0.25, 3.0, 0.25)) {
            const double v = best_quadrature(scalar.at(z), full_matched()).variance_snu;
            below = below && v < 1.0;
            monotone = monotone && v <= prev + 1e-12;
            prev = v;
        }
        const double pw = covariance_oracle(3.0);
        const double ratio = prev / pw;
        return Verdict{below && monotone && ratio <= 2.0 && ratio >= 0.5,
                       fmt("all < 1: %s, non-increasing: %s, V(3) = %.4f vs plane wave %.4f (ratio %.2f)",
                           below ? "yes" : "no", monotone ? "yes" : "no", prev, pw, ratio)};
    });

    criterion(5, "central-pixel optimum", [&] {
        double best = 1e300, best_z = -1.0;
        for (double z : scalar.zeta) {
            if (z == 0.0) continue;
            const double v =
                best_quadrature(scalar.at(z), DetectorSpec::pixel(n, grid.center(), LoModel::matched)).variance_snu;
            if (v < best) {
                best = v;
                best_z = z;
            }
        }
        const double v3 =
            best_quadrature(scalar.at(3.0), DetectorSpec::pixel(n, grid.center(), LoModel::matched)).variance_snu;
        return Verdict{std::abs(best_z - 0.3) <= 0.1 + 1e-9 && v3 > 1.0,
                       fmt("minimum %.4f at zeta = %.2f, V(3) = %.4f", best, best_z, v3)};
    });

    criterion(6, "pixel covariance structure", [&] {
        const auto axis = grid.positions();
        auto off_at = [&](double z) {
            const auto& gp = scalar.at(z);
            const double theta = best_quadrature(gp, full_matched()).theta;
            return covariance_map(gp, theta, LoModel::matched).off_diagonal();
        };
        const Eigen::MatrixXd near = off_at(0.3);
        const double peak = near.cwiseAbs().maxCoeff();
        bool negative = true, confined = true;
        double widest = 0.0;
        for (Eigen::Index i = 0; i < near.rows(); ++i)
            for (Eigen::Index j = 0; j < near.cols(); ++j)
                if (i != j && std::abs(near(i, j)) >= 0.5 * peak) {
                    negative = negative && near(i, j) < 0.0;
                    const double sep = std::abs(axis[static_cast<std::size_t>(i)] - axis[static_cast<std::size_t>(j)]);
                    widest = std::max(widest, sep);
                    confined = confined && sep < 2.0;
                }
        const Eigen::MatrixXd far = off_at(3.0);
        const auto c = static_cast<Eigen::Index>(grid.center());
        const double adjacent = far(c, c + 1);
        double left_right = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (axis[i] < 0.0 && axis[j] > 0.0) left_right += far(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        return Verdict{negative && confined && adjacent > 0.0 && left_right < 0.0,
                       fmt("zeta 0.3: entries above half of max |C| = %.4f are %s, widest separation %.3f; "
                           "zeta 3: adjacent %.4f, left-right block sum %.4f",
                           peak, negative ? "negative" : "NOT all negative", widest, adjacent, left_right)};
    });

    criterion(7, "aperture landmarks", [&] {
        std::string chords;
        bool chord_ok = true;
        double t03 = 0.0, t3 = 0.0;
        for (double z : {0.3, 1.0, 3.0}) {
            const auto scan = aperture_scan(scalar.at(z), LoModel::matched);
            const double t = scan.samples[scan.best].transmission;
            if (z == 0.3) t03 = t;
            if (z == 3.0) t3 = t;
            chord_ok = chord_ok && std::abs(scan.chord_deviation - 0.10) <= 0.05;
            chords += fmt(" %.1f:%.3f", z, scan.chord_deviation);
        }
        const bool opt_ok = std::abs(t03 - 0.8) <= 0.05 && t3 >= 1.0 - 1e-12;
        return Verdict{opt_ok && chord_ok,
                       fmt("optimum transmission %.3f at zeta 0.3, %.5f at zeta 3; chord deviation / span:", t03, t3) +
                           chords + " (target 0.10 +/- 0.05)"};
    });

    criterion(8, "intensity noise", [&] {
        const auto mask = fourier_aperture_mask(grid, 0.25);
        std::size_t run = 0, longest = 0;
        double min_db = 1e300, worst_full = 0.0;
        for (double z : range(0.0, 3.0, 0.1)) {
            const auto& gp = scalar.at(z);
            const auto f = intensity_noise(to_fourier(gp), DetectorSpec{mask, Plane::fourier, LoModel::matched, {}});
            min_db = std::min(min_db, f.db);
            run = (z > 0.0 && f.fano < 1.0) ? run + 1 : 0;
            longest = std::max(longest, run);
            worst_full = std::max(worst_full, std::abs(intensity_noise(gp, DetectorSpec::full(n)).fano - 1.0));
        }
        return Verdict{longest >= 2 && worst_full <= 1e-6,
                       fmt("Fourier aperture below shot noise on %zu consecutive samples (min %.2f dB); "
                           "full beam max |F-1| %.1e",
                           longest, min_db, worst_full)};
    });

    criterion(9, "Wigner vs Green cross-check", [&] {
        const auto& gp = scalar.at(0.3);
        const auto best = best_quadrature(gp, full_matched());
        const Eigen::VectorXcd w = gp.mean;
        const double green = quadrature_curve(gp.g, gp.h, w)(best.theta) / w.squaredNorm();
        std::vector<cplx> lo(w.data(), w.data() + w.size());
        const auto wig = wigner_quadrature_variance(sech, params, 0.3, lo, best.theta, quantum, 10000, 1);
        const double z = (wig.variance - green) / wig.standard_error;
        return Verdict{std::abs(z) <= 3.0,
                       fmt("Green %.5f, Wigner %.5f +/- %.5f (%zu runs), %.2f standard errors", green, wig.variance,
                           wig.standard_error, wig.samples, z)};
    });

    const auto bound = solve_vector_soliton(grid, params, 0.4, 1.0);
    const auto spectrum = bogoliubov_spectrum(bound);

    criterion(10, "vector instability", [&] {
        if (spectrum.unstable.empty()) return Verdict{false, "no unstable mode"};
        const auto& m = spectrum.unstable.front();
        const auto trace = seeded_growth(bound, spectrum, quantum, 25.0);
        const double ratio = trace.fitted ? trace.fit_slope / m.growth : 0.0;
        return Verdict{m.symmetry_breaking_parity() && trace.fitted && std::abs(ratio - 1.0) <= 0.1,
                       fmt("lambda = %.5f%+.5fi, odd U %.4f, even V %.4f, seeded slope %.5f (ratio %.3f)",
                           m.lambda.real(), m.lambda.imag(), m.odd_u_fraction, m.even_v_fraction, trace.fit_slope,
                           ratio)};
    });

    criterion(11, "breaking statistics", [&] {
        EnsembleOptions opt;
        opt.n_runs = 200;
        opt.zeta_max = 100.0;
        opt.threshold = 0.5;
        opt.seed = 1;
        const auto st = wigner_ensemble(bound, quantum, opt);
        const double p = st.broken() > 0 ? binomial_two_sided_p(st.left(), st.broken()) : 0.0;

        const std::vector<double> amps{1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
        std::vector<double> far, lin;
        bool monotone = true;
        for (double a : amps) {
            far.push_back(seeded_breaking(bound, a, 150.0, 0.5, 10).distance);
            lin.push_back(seeded_breaking(bound, a, 150.0, 0.1, 10).distance);
        }
        for (std::size_t k = 1; k < amps.size(); ++k) monotone = monotone && far[k] < far[k - 1];
        // Logarithmic law in the linear regime: distance drops by ln(ratio)/g.
        const double g = spectrum.max_growth();
        double worst = 0.0;
        for (std::size_t k = 1; k < amps.size(); ++k) {
            const double expect = std::log(amps[k] / amps[k - 1]) / g;
            worst = std::max(worst, std::abs((lin[k - 1] - lin[k]) / expect - 1.0));
        }
        std::string sweep;
        for (std::size_t k = 0; k < amps.size(); ++k) sweep += fmt(" %.0e:%.1f/%.1f", amps[k], far[k], lin[k]);
        return Verdict{p > 0.01 && st.broken() > 0 && monotone && worst <= 0.25,
                       fmt("%zu of %zu broke, %zu left, binomial p = %.3f; distances (0.5/0.1 threshold):",
                           st.broken(), st.n_runs, st.left(), p) +
                           sweep + fmt("; worst log-law deviation %.1f%%", 100.0 * worst)};
    });

    criterion(12, "polarization correlations", [&] {
        const std::vector<double> zs{0.6, 2.0, 4.0, 6.0};
        const auto greens = build_green_vector(propagate_vector(bound.profile, params, 6.0), zs);
        const auto circ = polarization_statistics(greens[1], LoModel::matched);
        const bool circ_ok = circ.correlation <= -0.5 && circ.total < 1.0 && circ.plus > circ.total &&
                             circ.minus > circ.total;
        std::vector<PolarizationStatistics> lin;
        for (const auto& gp : greens) lin.push_back(polarization_statistics(to_linear(gp), LoModel::matched));
        bool grows = true;
        for (std::size_t k = 1; k < lin.size(); ++k)
            grows = grows && lin[k].plus > lin[0].plus && lin[k].minus > lin[0].minus;
        grows = grows && lin.back().plus >= 10.0 * lin[0].plus && lin.back().minus >= 10.0 * lin[0].minus;
        const bool anti = lin.back().correlation <= -0.99 && lin.back().correlation < lin[0].correlation;
        std::string trend;
        for (std::size_t k = 0; k < zs.size(); ++k) trend += fmt(" %.1f:%.3g/%.3f", zs[k], lin[k].plus, lin[k].correlation);
        return Verdict{circ_ok && grows && anti,
                       fmt("circular zeta 2: corr %.3f, total %.3f, plus %.3f, minus %.3f; linear V_x/corr:",
                           circ.correlation, circ.total, circ.plus, circ.minus) +
                           trend};
    });

    criterion(13, "difference vs linearized", [&] {
        const auto st = propagate_scalar(sech, params, 0.3);
        const double ds = max_abs_difference(build_green_difference(st), to_local_frame(build_green_scalar(st)));
        const auto vt = propagate_vector(bound.profile, params, 0.6);
        const double dv = max_abs_difference(build_green_difference(vt), to_local_frame(build_green_vector(vt)));
        return Verdict{ds <= 1e-4 && dv <= 1e-4, fmt("scalar zeta 0.3: %.2e, vector zeta 0.6: %.2e", ds, dv)};
    });

    std::printf("%d criteria failed\n", failures);
    return failures;
}
