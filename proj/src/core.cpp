#include "kerrsol/core.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace kerrsol {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::PowerDrift: return "PowerDrift";
        case ErrorCode::StrideMismatch: return "StrideMismatch";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::TrivialSolution: return "TrivialSolution";
        case ErrorCode::NonlinearityLeak: return "NonlinearityLeak";
        case ErrorCode::BasisMismatch: return "BasisMismatch";
        case ErrorCode::EmptyDetector: return "EmptyDetector";
        case ErrorCode::SpectralResidual: return "SpectralResidual";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Grid make_grid(std::size_t n_points, double half_width, double dz) {
    if (n_points < 16 || n_points > (std::size_t{1} << 20))
        throw Error(ErrorCode::InvalidArgument, "n_points must lie in [16, 2^20], got " + std::to_string(n_points));
    if (!std::isfinite(half_width) || half_width <= 0.0)
        throw Error(ErrorCode::InvalidArgument, "half_width must be positive");
    if (!std::isfinite(dz) || dz <= 0.0)
        throw Error(ErrorCode::InvalidArgument, "dz must be positive");
    if (dz > 1.0)
        throw Error(ErrorCode::InvalidArgument, "dz must not exceed one diffraction length");
    Grid g;
    g.n_ = n_points;
    g.half_width_ = half_width;
    g.dr_ = 2.0 * half_width / static_cast<double>(n_points);
    g.dz_ = dz;
    return g;
}

Grid default_grid() { return make_grid(256, 16.0, 1e-3); }

std::vector<double> Grid::positions() const {
    std::vector<double> r(n_);
    for (std::size_t j = 0; j < n_; ++j) r[j] = position(j);
    return r;
}

std::vector<double> Grid::wavenumbers() const {
    std::vector<double> k(n_);
    const double dk = 2.0 * std::numbers::pi / (static_cast<double>(n_) * dr_);
    for (std::size_t m = 0; m < n_; ++m) {
        const auto signed_m = m < n_ / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(n_);
        k[m] = signed_m * dk;
    }
    return k;
}

std::vector<double> Grid::centered_frequencies() const {
    std::vector<double> f(n_);
    const double df = 1.0 / (static_cast<double>(n_) * dr_);
    for (std::size_t m = 0; m < n_; ++m)
        f[m] = (static_cast<double>(m) - static_cast<double>(n_ / 2)) * df;
    return f;
}

std::size_t Grid::steps_for(double zeta) const {
    if (!std::isfinite(zeta) || zeta < 0.0)
        throw Error(ErrorCode::InvalidArgument, "propagation distance must be non-negative");
    const double exact = zeta / dz_;
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-6)
        throw Error(ErrorCode::InvalidArgument,
                    "zeta = " + std::to_string(zeta) + " is not a multiple of dz = " + std::to_string(dz_));
    return static_cast<std::size_t>(rounded);
}

ComplexField::ComplexField(const Grid& grid) : grid_(grid), samples_(grid.size()) {}

ComplexField::ComplexField(const Grid& grid, CVector samples) : grid_(grid), samples_(std::move(samples)) {
    if (samples_.size() != grid_.size())
        throw Error(ErrorCode::InvalidArgument, "field length does not match grid");
}

double ComplexField::power() const noexcept {
    double p = 0.0;
    for (const auto& s : samples_) p += std::norm(s);
    return p * grid_.dr();
}

PolarizedField::PolarizedField(ComplexField u, ComplexField v) : plus(std::move(u)), minus(std::move(v)) {
    if (!(plus.grid() == minus.grid()))
        throw Error(ErrorCode::InvalidArgument, "polarization components must share one grid");
}

namespace {

PolarizedField hadamard(const PolarizedField& field) {
    const double s = std::numbers::sqrt2 / 2.0;
    ComplexField a(field.grid());
    ComplexField b(field.grid());
    for (std::size_t j = 0; j < a.size(); ++j) {
        a[j] = s * (field.plus[j] + field.minus[j]);
        b[j] = s * (field.plus[j] - field.minus[j]);
    }
    return {std::move(a), std::move(b)};
}

}  // namespace

// The 2x2 Hadamard map is its own inverse.
PolarizedField circular_to_linear(const PolarizedField& field) { return hadamard(field); }
PolarizedField linear_to_circular(const PolarizedField& field) { return hadamard(field); }

CVector pixel_modes(const ComplexField& delta) {
    const double s = std::sqrt(delta.grid().dr());
    CVector a(delta.size());
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = delta[j] * s;
    return a;
}

ComplexField field_from_modes(const Grid& grid, std::span<const cplx> modes) {
    if (modes.size() != grid.size()) throw Error(ErrorCode::InvalidArgument, "mode vector length does not match grid");
    const double s = 1.0 / std::sqrt(grid.dr());
    CVector u(modes.size());
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = modes[j] * s;
    return {grid, std::move(u)};
}

double PhysicalScaling::wavenumber() const { return 2.0 * std::numbers::pi * n0 / wavelength; }
double PhysicalScaling::kerr_gamma() const { return 2.0 * std::numbers::pi * n2 / wavelength; }

void PhysicalScaling::validate() const {
    if (!(n0 > 0.0) || !(n2 > 0.0) || !(wavelength > 0.0) || !(eta > 0.0))
        throw Error(ErrorCode::InvalidArgument, "physical scaling needs positive n0, n2, wavelength and eta");
}

double PhysicalScaling::to_r(double x) const { return x * std::sqrt(2.0 * eta * wavenumber()); }
double PhysicalScaling::to_zeta(double z) const { return eta * z; }
cplx PhysicalScaling::to_u(cplx envelope) const { return envelope * std::sqrt(kerr_gamma() / (2.0 * eta)); }
double PhysicalScaling::to_x(double r) const { return r / std::sqrt(2.0 * eta * wavenumber()); }
double PhysicalScaling::to_z(double zeta) const { return zeta / eta; }
cplx PhysicalScaling::to_envelope(cplx u) const { return u / std::sqrt(kerr_gamma() / (2.0 * eta)); }

}  // namespace kerrsol
