#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "kerrsol/meanfield.hpp"
#include "kerrsol/stability.hpp"
#include "kerrsol/stationary.hpp"

using namespace kerrsol;

namespace {

double sech_error(double dz, double zeta) {
    const Grid g = make_grid(256, 16.0, dz);
    const auto u0 = scalar_soliton(g);
    const auto traj = propagate_scalar(u0, KerrParams{}, zeta, g.steps_for(zeta));
    CVector exact(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) exact[j] = u0[j] * std::polar(1.0, zeta);
    return l2_distance(g, traj.u.back(), exact);
}

}  // namespace

TEST_CASE("sech soliton is invariant up to its phase") {
    CHECK(sech_error(1e-3, 3.0) < 1e-5);
}

TEST_CASE("second-order convergence in dz") {
    const double e1 = sech_error(0.02, 2.0);
    const double e2 = sech_error(0.01, 2.0);
    const double ratio = e1 / e2;
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
}

TEST_CASE("linear diffraction of a Gaussian matches the Fresnel solution") {
    const Grid g = default_grid();
    ComplexField u0(g);
    for (std::size_t j = 0; j < g.size(); ++j) u0[j] = std::exp(-0.5 * g.position(j) * g.position(j));
    const double zeta = 1.0;
    const auto traj = propagate_scalar(u0, KerrParams{0.0, 0.0}, zeta, g.steps_for(zeta));
    // u_zeta = i u_rr: sigma^2 -> 1 + 2 i zeta
    const cplx s2(1.0, 2.0 * zeta);
    CVector exact(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double r = g.position(j);
        exact[j] = std::exp(-r * r / (2.0 * s2)) / std::sqrt(s2);
    }
    CHECK(l2_distance(g, traj.u.back(), exact) < 1e-6);
}

TEST_CASE("zero field stays zero") {
    const Grid g = default_grid();
    const auto traj = propagate_scalar(ComplexField(g), KerrParams{}, 0.5, 100);
    CHECK(l2_norm(g, traj.u.back()) == 0.0);
}

TEST_CASE("power is conserved per component") {
    const Grid g = default_grid();
    ComplexField u(g), v(g);
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double r = g.position(j);
        u[j] = 1.2 / std::cosh(r - 0.3);
        v[j] = cplx(0.4 * r, 0.1) * std::exp(-r * r);
    }
    const auto traj = propagate_vector({u, v}, KerrParams{}, 2.0, 2000);
    const double pu = l2_norm(g, traj.u.back()), pv = l2_norm(g, traj.v.back());
    CHECK(std::abs(pu * pu - u.power()) / u.power() < 2e-10);
    CHECK(std::abs(pv * pv - v.power()) / v.power() < 2e-10);
    CHECK(traj.max_power_drift < 1e-10);
}

TEST_CASE("vector propagation with V = 0 reduces to the scalar one") {
    const Grid g = default_grid();
    const auto u0 = scalar_soliton(g);
    const auto s = propagate_scalar(u0, KerrParams{}, 0.5, 250);
    const auto v = propagate_vector({u0, ComplexField(g)}, KerrParams{}, 0.5, 250);
    REQUIRE(s.size() == v.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        CHECK(s.u[k] == v.u[k]);
        CHECK(l2_norm(g, v.v[k]) == 0.0);
    }
}

TEST_CASE("recording stride and slicing") {
    const Grid g = default_grid();
    const auto traj = propagate_scalar(scalar_soliton(g), KerrParams{}, 0.1, 30);
    // 100 steps at stride 30: 0, 30, 60, 90, 100
    REQUIRE(traj.size() == 5);
    CHECK(traj.zeta[1] == doctest::Approx(0.03));
    CHECK(traj.zeta.back() == doctest::Approx(0.1));
    const auto full = propagate_scalar(scalar_soliton(g), KerrParams{}, 0.1, 1);
    const auto part = full.slice(20, 50);
    CHECK(part.size() == 31);
    CHECK(part.zeta.front() == 0.0);
    CHECK(part.zeta.back() == doctest::Approx(0.03));
    CHECK(part.u.front() == full.u[20]);
    CHECK_THROWS_AS(full.slice(50, 20), Error);
}

TEST_CASE("propagation rejects bad arguments") {
    const Grid g = default_grid();
    const auto u0 = scalar_soliton(g);
    CHECK_THROWS_AS(propagate_scalar(u0, KerrParams{}, 0.0), Error);
    CHECK_THROWS_AS(propagate_scalar(u0, KerrParams{}, 0.0105), Error);
    CHECK_THROWS_AS(propagate_scalar(u0, KerrParams{}, 0.1, 0), Error);
    CHECK_THROWS_AS(propagate_scalar(u0, KerrParams{-1.0, 7.0}, 0.1), Error);
    CHECK_THROWS_AS(propagate_scalar(u0, KerrParams{2.0, -1.0}, 0.1), Error);
}

TEST_CASE("antisymmetric seed on the bound state breaks the symmetry") {
    const Grid g = default_grid();
    const auto sol = solve_vector_soliton(g, KerrParams{}, default_mu_plus, default_mu_minus);
    PolarizedField f = sol.profile;
    for (std::size_t j = 0; j < g.size(); ++j) f.plus[j] *= 1.0 + 1e-3 * std::tanh(g.position(j));
    const auto traj = propagate_vector(f, KerrParams{}, 60.0, 100);
    double first = -1.0;
    for (std::size_t k = 0; k < traj.size() && first < 0.0; ++k)
        if (std::abs(asymmetry(traj.polarized(k))) > 0.5) first = traj.zeta[k];
    CHECK(first > 0.0);
    CHECK(std::abs(asymmetry(traj.polarized(0))) < 1e-2);
}

TEST_CASE("trajectory CSV layout") {
    const Grid g = make_grid(16, 4.0, 0.01);
    const auto traj = propagate_scalar(scalar_soliton(g), KerrParams{}, 0.02, 1);
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "zeta,r,re_u,im_u");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 3 * 16);
}
