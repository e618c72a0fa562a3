#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "kerrsol/core.hpp"
#include "kerrsol/stationary.hpp"

using namespace kerrsol;

TEST_CASE("default grid geometry") {
    const Grid g = default_grid();
    CHECK(g.size() == 256);
    CHECK(g.half_width() == 16.0);
    CHECK(g.dr() == doctest::Approx(0.125));
    CHECK(g.dz() == 1e-3);
    CHECK(g.position(g.center()) == 0.0);
    CHECK(g.position(0) == -16.0);
    CHECK_FALSE(g.narrow_window());
    CHECK(make_grid(64, 4.0, 1e-3).narrow_window());
}

TEST_CASE("grid rejects bad parameters") {
    CHECK_THROWS_AS(make_grid(8, 16.0, 1e-3), Error);
    CHECK_THROWS_AS(make_grid(256, 0.0, 1e-3), Error);
    CHECK_THROWS_AS(make_grid(256, 16.0, 0.0), Error);
    CHECK_THROWS_AS(make_grid(256, 16.0, -1.0), Error);
    CHECK_THROWS_AS(make_grid(256, 16.0, 1.5), Error);
    CHECK_THROWS_AS(make_grid(256, std::nan(""), 1e-3), Error);
    try {
        make_grid(256, 16.0, 2.0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidArgument);
    }
}

TEST_CASE("reflection pairs r and -r") {
    const Grid g = make_grid(32, 4.0, 1e-2);
    for (std::size_t j = 1; j < g.size(); ++j) CHECK(g.position(g.reflect(j)) == doctest::Approx(-g.position(j)));
    CHECK(g.reflect(0) == 0);  // the edge pixel is its own periodic image
    CHECK(g.reflect(g.center()) == g.center());
}

TEST_CASE("steps land on zeta exactly or throw") {
    const Grid g = default_grid();
    CHECK(g.steps_for(0.0) == 0);
    CHECK(g.steps_for(0.3) == 300);
    CHECK(g.steps_for(3.0) == 3000);
    CHECK_THROWS_AS(g.steps_for(0.0005), Error);
    CHECK_THROWS_AS(g.steps_for(-1.0), Error);
}

TEST_CASE("frequency axes") {
    const Grid g = make_grid(16, 4.0, 1e-2);
    const auto f = g.centered_frequencies();
    CHECK(f[g.center()] == 0.0);
    CHECK(f[g.center() + 1] == doctest::Approx(1.0 / 8.0));
    const auto k = g.wavenumbers();
    CHECK(k[0] == 0.0);
    CHECK(k[1] == doctest::Approx(2.0 * std::numbers::pi / 8.0));
    CHECK(k[g.size() - 1] == doctest::Approx(-2.0 * std::numbers::pi / 8.0));
}

TEST_CASE("sech power integrates to 2") {
    const Grid g = default_grid();
    CHECK(std::abs(scalar_soliton(g).power() - 2.0) < 1e-10);
}

TEST_CASE("field containers") {
    const Grid g = make_grid(16, 2.0, 1e-2);
    CHECK_THROWS_AS(ComplexField(g, CVector(5)), Error);
    ComplexField z(g);
    CHECK(z.power() == 0.0);
    ComplexField a(g);
    CHECK_THROWS_AS(PolarizedField(a, ComplexField(make_grid(32, 2.0, 1e-2))), Error);
}

TEST_CASE("polarization basis round trip and power") {
    const Grid g = make_grid(64, 8.0, 1e-2);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    ComplexField u(g), v(g);
    for (std::size_t j = 0; j < g.size(); ++j) {
        u[j] = {n(rng), n(rng)};
        v[j] = {n(rng), n(rng)};
    }
    const PolarizedField f(u, v);
    const auto lin = circular_to_linear(f);
    CHECK(lin.power() == doctest::Approx(f.power()).epsilon(1e-14));
    const auto back = linear_to_circular(lin);
    for (std::size_t j = 0; j < g.size(); ++j) {
        CHECK(std::abs(back.plus[j] - u[j]) < 1e-14);
        CHECK(std::abs(back.minus[j] - v[j]) < 1e-14);
    }
    CHECK(std::abs(lin.plus[3] - (u[3] + v[3]) / std::sqrt(2.0)) < 1e-14);
}

TEST_CASE("pixel modes carry unit commutator normalization") {
    const Grid g = make_grid(32, 4.0, 1e-2);
    ComplexField d(g);
    for (std::size_t j = 0; j < g.size(); ++j) d[j] = cplx(std::sin(0.3 * j), std::cos(0.1 * j));
    const auto a = pixel_modes(d);
    double sum = 0.0;
    for (const auto& x : a) sum += std::norm(x);
    CHECK(sum == doctest::Approx(d.power()).epsilon(1e-14));  // sum |a|^2 = sum |du|^2 dr
    const auto back = field_from_modes(g, a);
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(back[j] - d[j]) < 1e-14);
}

TEST_CASE("quantum convention defaults") {
    const QuantumConvention q;
    CHECK(q.wigner_noise_variance == 0.5);
    CHECK(q.photons_per_unit > 0.0);
}

TEST_CASE("physical scaling round trip") {
    PhysicalScaling s;
    s.n0 = 1.63;
    s.n2 = 3e-18;
    s.wavelength = 1.064e-6;
    s.eta = 25.0;
    s.validate();
    for (double x : {-3e-5, 0.0, 1.7e-5}) CHECK(std::abs(s.to_x(s.to_r(x)) - x) <= 1e-12 * std::max(1e-5, std::abs(x)));
    for (double z : {0.0, 0.01, 0.4}) CHECK(std::abs(s.to_z(s.to_zeta(z)) - z) <= 1e-12 * std::max(1e-2, z));
    const cplx e(2.5e5, -1.1e5);
    CHECK(std::abs(s.to_envelope(s.to_u(e)) - e) <= 1e-12 * std::abs(e));
    // r = x sqrt(2 eta k)
    CHECK(s.to_r(1e-5) == doctest::Approx(1e-5 * std::sqrt(2.0 * 25.0 * 2.0 * std::numbers::pi * 1.63 / 1.064e-6)));
    PhysicalScaling bad = s;
    bad.eta = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}
