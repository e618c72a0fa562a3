#pragma once

// Normalized units, transverse grid, field containers and quantum-mode
// conventions shared by every module.
//
// Normalized propagation equation:  du/dzeta = i d2u/dr2 + 2i|u|^2 u
// so that sech(r) exp(i zeta) is the exact soliton.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "kerrsol/error.hpp"

namespace kerrsol {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

/// Uniform periodic transverse lattice r_j = -half_width + j*dr plus the
/// propagation step dz (in diffraction lengths).
class Grid {
public:
    Grid() = default;

    std::size_t size() const noexcept { return n_; }
    double dr() const noexcept { return dr_; }
    double half_width() const noexcept { return half_width_; }
    double dz() const noexcept { return dz_; }

    double position(std::size_t j) const noexcept { return -half_width_ + static_cast<double>(j) * dr_; }
    std::vector<double> positions() const;

    /// Angular wavenumbers in FFT storage order.
    std::vector<double> wavenumbers() const;

    /// Spatial frequencies (cycles per unit r) in centered order, index n/2 is zero.
    std::vector<double> centered_frequencies() const;

    /// Index of r = 0.
    std::size_t center() const noexcept { return n_ / 2; }

    /// Index of the pixel at -r_j (periodic).
    std::size_t reflect(std::size_t j) const noexcept { return (n_ - j) % n_; }

    /// Window narrower than 8 soliton widths on each side.
    bool narrow_window() const noexcept { return half_width_ < 8.0; }

    /// Number of dz steps that land exactly on zeta; throws if zeta is off-grid.
    std::size_t steps_for(double zeta) const;

    bool operator==(const Grid&) const = default;

private:
    friend Grid make_grid(std::size_t, double, double);
    std::size_t n_ = 0;
    double dr_ = 0.0;
    double half_width_ = 0.0;
    double dz_ = 0.0;
};

Grid make_grid(std::size_t n_points, double half_width, double dz);

/// Default grid: 256 points, half width 16, dz = 1e-3.
Grid default_grid();

class ComplexField {
public:
    ComplexField() = default;
    explicit ComplexField(const Grid& grid);
    ComplexField(const Grid& grid, CVector samples);

    const Grid& grid() const noexcept { return grid_; }
    std::span<const cplx> samples() const noexcept { return samples_; }
    std::span<cplx> samples() noexcept { return samples_; }
    const CVector& vector() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }

    cplx operator[](std::size_t j) const noexcept { return samples_[j]; }
    cplx& operator[](std::size_t j) noexcept { return samples_[j]; }

    /// P = sum |u_j|^2 dr
    double power() const noexcept;

private:
    Grid grid_;
    CVector samples_;
};

/// Two circular components U (plus) and V (minus) on one grid. After
/// circular_to_linear the same container holds (E_x, E_y).
struct PolarizedField {
    PolarizedField() = default;
    PolarizedField(ComplexField u, ComplexField v);

    const Grid& grid() const noexcept { return plus.grid(); }
    double power() const noexcept { return plus.power() + minus.power(); }

    ComplexField plus;
    ComplexField minus;
};

/// E_x = (U + V)/sqrt2, E_y = (U - V)/sqrt2.
PolarizedField circular_to_linear(const PolarizedField& field);
PolarizedField linear_to_circular(const PolarizedField& field);

/// a_j = du_j * sqrt(dr): unit-commutator pixel mode amplitudes.
CVector pixel_modes(const ComplexField& delta);
ComplexField field_from_modes(const Grid& grid, std::span<const cplx> modes);

struct QuantumConvention {
    double photons_per_unit = 1e8;      // photons carried by unit normalized power
    double wigner_noise_variance = 0.5; // per-pixel complex vacuum variance, photons
};

/// Conversion between physical (x, z, U) and normalized (r, zeta, u).
/// zeta = eta z, r = x sqrt(2 eta k), u = U sqrt(gamma / (2 eta)) with
/// k = 2 pi n0 / wavelength and gamma = 2 pi n2 / wavelength.
struct PhysicalScaling {
    double n0 = 1.0;
    double n2 = 0.0;          // m^2/W
    double wavelength = 0.0;  // m
    double eta = 0.0;         // 1/m

    double wavenumber() const;
    double kerr_gamma() const;

    double to_r(double x) const;
    double to_zeta(double z) const;
    cplx to_u(cplx envelope) const;
    double to_x(double r) const;
    double to_z(double zeta) const;
    cplx to_envelope(cplx u) const;

    void validate() const;
};

}  // namespace kerrsol
