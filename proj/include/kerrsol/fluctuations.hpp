#pragma once

// Linearized fluctuations along a mean-field trajectory and the Green's
// matrices (G, H) of  a_out = G a_in + H a_in^dagger  in the pixel-mode basis.
//
// The linearized propagation is the exact tangent map of the split-step
// scheme used for the mean field, so (G, H) is symplectic to round-off.

#include <Eigen/Dense>

#include <algorithm>
#include <iosfwd>
#include <vector>

#include "kerrsol/core.hpp"
#include "kerrsol/meanfield.hpp"

namespace kerrsol {

enum class Plane { direct, fourier };
enum class PhaseFrame { lab, local };
enum class PolarizationBasis { circular, linear };

const char* to_string(Plane p) noexcept;
const char* to_string(PhaseFrame f) noexcept;
const char* to_string(PolarizationBasis b) noexcept;

struct SymplecticDefect {
    double norm = 0.0;    // max |G G^dagger - H H^dagger - I|
    double pairing = 0.0; // max |G H^T - H G^T|
    double worst() const noexcept { return std::max(norm, pairing); }
};

struct GreenPair {
    Eigen::MatrixXcd g;
    Eigen::MatrixXcd h;
    double zeta = 0.0;
    Plane plane = Plane::direct;
    PhaseFrame frame = PhaseFrame::lab;
    int blocks = 1;  // 2 for (U, V) block layout
    PolarizationBasis polarization = PolarizationBasis::circular;
    Eigen::VectorXcd mean;  // output mean field in mode units, u_j sqrt(dr)
    Grid grid;
    SymplecticDefect defect;
    bool symplectic_warning = false;

    Eigen::Index dim() const noexcept { return g.rows(); }
    std::size_t pixels() const noexcept { return grid.size(); }
};

inline constexpr double symplectic_tolerance = 1e-6;

SymplecticDefect symplectic_defect(const Eigen::MatrixXcd& g, const Eigen::MatrixXcd& h);

/// Recomputes the defect and sets the warning flag.
void check_symplectic(GreenPair& green, double tolerance = symplectic_tolerance);

/// (I, 0) with the given mean field.
GreenPair identity_green(const Grid& grid, int blocks, const Eigen::VectorXcd& mean = {});

/// Single linearized propagation of du (scalar) or (dU, dV) along a trajectory
/// recorded at every step. Throws StrideMismatch otherwise.
ComplexField propagate_fluctuation(const Trajectory& trajectory, const ComplexField& delta);
PolarizedField propagate_fluctuation(const Trajectory& trajectory, const PolarizedField& delta);

/// Green's matrices at each requested zeta (must lie on recorded steps).
std::vector<GreenPair> build_green_scalar(const Trajectory& trajectory, const std::vector<double>& zetas);
GreenPair build_green_scalar(const Trajectory& trajectory);

std::vector<GreenPair> build_green_vector(const Trajectory& trajectory, const std::vector<double>& zetas);
GreenPair build_green_vector(const Trajectory& trajectory);

enum class DifferenceScheme { central, forward };

struct DifferenceOptions {
    double epsilon = 1e-4;
    DifferenceScheme scheme = DifferenceScheme::central;
    bool check_linearity = true;  // rebuild at 2 epsilon and compare
    double leak_tolerance = 1e-3; // relative to max |G|, |H|
};

/// Finite-difference Green's matrices: propagate the mean field with and
/// without a single-pixel step of size epsilon, subtract and divide. Each
/// output pixel is referred to the local phase of the unperturbed output, so
/// the result is in PhaseFrame::local. The input is the first snapshot and
/// the distance the last recorded zeta. When checking linearity the largest
/// entry change between the epsilon and 2 epsilon builds, relative to the
/// largest entry, is stored in *leak. Throws NonlinearityLeak.
GreenPair build_green_difference(const Trajectory& trajectory, const DifferenceOptions& options = {},
                                 double* leak = nullptr);

/// Unitary centered DFT applied on the output side: G -> F G, H -> F H.
GreenPair to_fourier(const GreenPair& green);

/// Circular -> linear polarization basis on both sides (P G P, P H P).
GreenPair to_linear(const GreenPair& green);

/// Output pixels referred to the local phase of the mean field. Pixels where
/// the mean is below 1e-8 of its block maximum use the phase of that maximum.
GreenPair to_local_frame(const GreenPair& green);

/// Map over [0, z1] followed by the map over [z1, z2].
GreenPair compose(const GreenPair& second, const GreenPair& first);

/// Centered unitary DFT matrix: F_kj = exp(-2 pi i (k - n/2)(j - n/2) / n) / sqrt(n).
Eigen::MatrixXcd centered_dft(std::size_t n);

double max_abs_difference(const GreenPair& a, const GreenPair& b);

/// Binary dump: magic, version, endianness tag, grid, zeta, plane, frame,
/// polarization, blocks, then mean, G and H as little-endian doubles.
void write_green(std::ostream& os, const GreenPair& green);
GreenPair read_green(std::istream& is);

}  // namespace kerrsol
