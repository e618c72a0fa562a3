#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "kerrsol/detection.hpp"
#include "kerrsol/stationary.hpp"

using namespace kerrsol;

namespace {

constexpr double pi = std::numbers::pi;

Grid small_grid() { return make_grid(64, 8.0, 1e-3); }

GreenPair soliton_green(double zeta) {
    const Grid g = small_grid();
    return build_green_scalar(propagate_scalar(scalar_soliton(g), KerrParams{}, zeta));
}

// Vacuum variance of X = sum_j (w_j^* e^{-i theta} b_j + h.c.), b = G a + H a^dagger,
// from the coefficient of each input annihilator.
double brute_variance(const GreenPair& gp, const Eigen::VectorXcd& w, double theta) {
    const cplx e = std::polar(1.0, theta);
    const Eigen::VectorXcd c = std::conj(e) * (gp.g.transpose() * w.conjugate()) + e * (gp.h.adjoint() * w);
    return c.squaredNorm() / w.squaredNorm();
}

std::vector<double> random_mask(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> m(n);
    for (auto& x : m) x = u(rng) < 0.3 ? 0.0 : u(rng);
    m[n / 2] = 1.0;
    return m;
}

}  // namespace

TEST_CASE("vacuum through the identity is at shot noise for any detector") {
    const Grid g = small_grid();
    const auto u0 = scalar_soliton(g);
    const auto id = identity_green(g, 1, Eigen::Map<const Eigen::VectorXcd>(pixel_modes(u0).data(), 64));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> th(0.0, pi);
    for (int trial = 0; trial < 20; ++trial) {
        DetectorSpec det;
        det.mask = random_mask(64, rng);
        det.lo = trial % 2 ? LoModel::matched : LoModel::uniform;
        CHECK(quadrature_variance(id, det, th(rng)).variance_snu == doctest::Approx(1.0).epsilon(1e-12));
        const auto best = best_quadrature(id, det);
        CHECK(best.degenerate);
        CHECK(best.variance_snu == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(intensity_noise(id, det).fano == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (double v : pixel_squeezing_map(id, LoModel::uniform).variance) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single-mode Kerr map against a direct two-by-two computation") {
    for (double phi : {0.0, 0.1, 0.6, 2.0, 6.0}) {
        const GreenPair gp = single_mode_kerr(phi);
        CHECK(gp.defect.worst() < 1e-12);
        const cplx gg = gp.g(0, 0);
        const cplx hh = gp.h(0, 0);
        const double oracle = std::norm(gg) + std::norm(hh) - 2.0 * std::abs(gg * hh);
        CHECK(std::abs(plane_wave_squeezing(phi) - oracle) < 1e-10);
        const auto best = best_quadrature(gp, DetectorSpec::full(1));
        CHECK(std::abs(best.variance_snu - oracle) < 1e-10);
        CHECK(std::abs(brute_variance(gp, Eigen::VectorXcd::Ones(1), best.theta) - oracle) < 1e-10);
    }
}

TEST_CASE("quadrature variance matches the mode-coefficient oracle") {
    const auto gp = soliton_green(0.3);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> th(-pi, pi);
    for (int trial = 0; trial < 10; ++trial) {
        DetectorSpec det;
        det.mask = random_mask(64, rng);
        det.lo = trial % 2 ? LoModel::matched : LoModel::uniform;
        const double theta = th(rng);
        const auto w = measurement_vector(gp, det);
        CHECK(w.norm() == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(std::abs(quadrature_variance(gp, det, theta).variance_snu - brute_variance(gp, w, theta)) < 1e-10);
    }
}

TEST_CASE("quadrature curve: period pi, three-point fit, optimum") {
    const auto gp = soliton_green(0.3);
    const auto det = DetectorSpec::full(64, LoModel::matched);
    const auto curve = best_quadrature(gp, det).curve;
    for (double t : {0.0, 0.3, 1.1, 2.5}) CHECK(curve(t + pi) == doctest::Approx(curve(t)).epsilon(1e-12));

    const double v0 = quadrature_variance(gp, det, 0.0).variance_snu;
    const double v45 = quadrature_variance(gp, det, pi / 4).variance_snu;
    const double v90 = quadrature_variance(gp, det, pi / 2).variance_snu;
    const double a = 0.5 * (v0 + v90);
    CHECK(curve.a == doctest::Approx(a).epsilon(1e-12));
    CHECK(curve.b == doctest::Approx(0.5 * (v0 - v90)).epsilon(1e-12));
    CHECK(curve.c == doctest::Approx(v45 - a).epsilon(1e-12));

    const auto best = best_quadrature(gp, det);
    double sampled = 1e300;
    for (int k = 0; k < 64; ++k) sampled = std::min(sampled, curve(pi * k / 64.0));
    CHECK(best.variance_snu <= sampled + 1e-12);
    CHECK(best.variance_snu > sampled - 1e-2);
    CHECK(best.variance_snu < 1.0);
    CHECK(best.db == doctest::Approx(10.0 * std::log10(best.variance_snu)));
    CHECK(curve(best.theta) == doctest::Approx(best.variance_snu).epsilon(1e-12));
}

TEST_CASE("Fano factor does not depend on the mean-field scale") {
    auto gp = soliton_green(0.3);
    const auto det = DetectorSpec::full(64);
    const double f1 = intensity_noise(gp, det).fano;
    gp.mean *= 3.7;
    CHECK(intensity_noise(gp, det).fano == doctest::Approx(f1).epsilon(1e-12));
    // The number-conserving map leaves the full-beam count at shot noise.
    CHECK(f1 == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("covariance map bookkeeping") {
    const auto gp = soliton_green(0.3);
    for (LoModel lo : {LoModel::uniform, LoModel::matched}) {
        const auto cov = covariance_map(gp, 0.4, lo);
        CHECK((cov.full - cov.full.transpose()).cwiseAbs().maxCoeff() < 1e-14);
        // Sum of entries is the variance of the summed quadrature.
        const double summed = quadrature_curve(gp.g, gp.h, cov.weights)(0.4);
        CHECK(cov.total() == doctest::Approx(summed).epsilon(1e-10));
        const auto off = cov.off_diagonal();
        for (Eigen::Index j = 0; j < off.rows(); ++j) CHECK(off(j, j) == 0.0);
    }
    const auto id = identity_green(small_grid(), 1, gp.mean);
    const auto flat = covariance_map(id, 1.0, LoModel::uniform);
    CHECK(flat.off_diagonal().cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("detector errors") {
    const auto gp = soliton_green(0.05);
    DetectorSpec dark;
    dark.mask.assign(64, 0.0);
    try {
        best_quadrature(gp, dark);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyDetector);
    }
    CHECK_THROWS_AS(intensity_noise(gp, dark), Error);

    auto fourier = DetectorSpec::full(64);
    fourier.plane = Plane::fourier;
    try {
        best_quadrature(gp, fourier);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BasisMismatch);
    }
    CHECK_THROWS_AS(best_quadrature(gp, DetectorSpec::full(63)), Error);
    CHECK_THROWS_AS(polarization_statistics(gp, LoModel::matched), Error);
    CHECK_THROWS_AS(DetectorSpec::pixel(64, 64), Error);

    const auto empty = identity_green(small_grid(), 1, Eigen::VectorXcd::Zero(64));
    CHECK_THROWS_AS(best_quadrature(empty, DetectorSpec::full(64, LoModel::matched)), Error);
}

TEST_CASE("masks") {
    const Grid g = small_grid();
    const auto fm = fourier_aperture_mask(g, 0.25);
    const auto f = g.centered_frequencies();
    for (std::size_t k = 0; k < fm.size(); ++k) CHECK(fm[k] == (std::abs(f[k]) <= 0.125 + 1e-12 ? 1.0 : 0.0));
    CHECK_THROWS_AS(fourier_aperture_mask(g, 0.0), Error);
    const auto stop = central_stop_mask(g, 0.5);
    CHECK(stop[g.center()] == 0.0);
    CHECK(stop[g.center() + 2] == 1.0);  // r = 0.5 is not blocked
    CHECK(stop[0] == 1.0);
}

TEST_CASE("aperture scan through the identity") {
    const Grid g = small_grid();
    const auto u0 = scalar_soliton(g);
    const auto id = identity_green(g, 1, Eigen::Map<const Eigen::VectorXcd>(pixel_modes(u0).data(), 64));
    const auto scan = aperture_scan(id, LoModel::matched);
    REQUIRE_FALSE(scan.samples.empty());
    for (const auto& s : scan.samples) CHECK(s.variance == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(scan.samples.back().transmission == doctest::Approx(1.0));
    for (std::size_t k = 1; k < scan.samples.size(); ++k)
        CHECK(scan.samples[k].transmission >= scan.samples[k - 1].transmission);
}

TEST_CASE("polarization statistics at zero distance") {
    const Grid g = small_grid();
    const auto sol = solve_vector_soliton(g, KerrParams{}, 0.4, 1.0);
    const auto traj = propagate_vector(sol.profile, KerrParams{}, 0.01);
    const auto gp = build_green_vector(traj, {0.0}).front();
    for (const auto& green : {gp, to_linear(gp)}) {
        const auto st = polarization_statistics(green, LoModel::matched);
        CHECK(st.total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(st.plus == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(st.minus == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(st.correlation) < 1e-12);
    }
    const auto maps = vector_covariance_maps(gp, 0.0, LoModel::uniform);
    CHECK(maps.uv.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("detector variances survive grid refinement") {
    // Same window, half the pixel size. A hard-edged iris would cover a
    // different physical width on each grid, so the partial detector is smooth.
    auto report = [](std::size_t n) {
        const Grid g = make_grid(n, 16.0, 1e-3);
        const auto gp = build_green_scalar(propagate_scalar(scalar_soliton(g), KerrParams{}, 0.3));
        const double full = best_quadrature(gp, DetectorSpec::full(n, LoModel::matched)).variance_snu;
        DetectorSpec iris = DetectorSpec::full(n, LoModel::matched);
        for (std::size_t j = 0; j < n; ++j) iris.mask[j] = std::exp(-g.position(j) * g.position(j));
        const double aperture = best_quadrature(gp, iris).variance_snu;
        const auto fmask = fourier_aperture_mask(g, 0.25);
        const double fourier =
            intensity_noise(to_fourier(gp), DetectorSpec{fmask, Plane::fourier, LoModel::matched, {}}).fano;
        return std::array<double, 3>{full, aperture, fourier};
    };
    const auto coarse = report(256);
    const auto fine = report(512);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(coarse[k] - fine[k]) < 1e-3);
}
