#pragma once

// Symmetry-breaking instability of the two-component bound state: linear
// spectrum, seeded growth against nonlinear propagation and truncated-Wigner
// ensembles.

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "kerrsol/core.hpp"
#include "kerrsol/meanfield.hpp"
#include "kerrsol/stationary.hpp"

namespace kerrsol {

/// Perturbations evolve as exp(lambda zeta) in the frame co-rotating with
/// (U e^{i mu_plus zeta}, V e^{i mu_minus zeta}). The growth rate is
/// g = Re lambda; in the exp(-i Lambda zeta) convention the same mode has
/// Im Lambda = -g < 0.
struct UnstableMode {
    cplx lambda;
    double growth = 0.0;
    // Real-basis eigenvector over (Re dU, Re dV, Im dU, Im dV), unit norm.
    Eigen::VectorXcd vector;
    double residual = 0.0;       // ||M v - lambda v|| after refinement
    double odd_u_fraction = 0.0; // share of the U-part norm that is odd in r
    double even_v_fraction = 0.0;
    double partner_defect = 0.0; // distance from -lambda to the nearest eigenvalue

    /// U odd and V even.
    bool symmetry_breaking_parity() const noexcept { return odd_u_fraction > 0.99 && even_v_fraction > 0.99; }

    /// Complex (dU, dU*, dV, dV*) components, each of length N.
    Eigen::VectorXcd bogoliubov_components() const;

    /// Physical perturbation Re(v) mapped back to (dU, dV).
    PolarizedField perturbation(const Grid& grid) const;
};

struct BogoliubovSpectrum {
    std::vector<cplx> eigenvalues;
    double threshold = 1e-4;
    std::vector<UnstableMode> unstable;  // sorted by decreasing growth, one per +/- conjugate pair

    double max_growth() const noexcept { return unstable.empty() ? 0.0 : unstable.front().growth; }
};

/// Dense real 4N x 4N linearization about a stationary solution, using the
/// Laplacian the solution was computed with. Throws SpectralResidual.
BogoliubovSpectrum bogoliubov_spectrum(const VectorSolitonSolution& solution, double threshold = 1e-4);

/// Restriction to U perturbations with V = 0 (scalar sub-block).
BogoliubovSpectrum bogoliubov_spectrum_scalar_block(const VectorSolitonSolution& solution, double threshold = 1e-4);

/// (P_left - P_right) / (P_left + P_right) of |U|^2 + |V|^2; the pixels at
/// r = 0 and at the window edge count half to each side.
double asymmetry(const PolarizedField& field);

struct GrowthTrace {
    std::vector<double> zeta;
    std::vector<double> norm;     // ||perturbed - unperturbed||, both components
    double seed_norm = 0.0;
    double soliton_norm = 0.0;
    double fit_slope = 0.0;
    double fit_intercept = 0.0;
    double window_begin = 0.0;
    double window_end = 0.0;
    std::vector<double> fit_residual;  // log(norm) - fit, zero outside the window
    double modulation_frequency = 0.0; // |Im lambda| of the seeded mode
    bool fitted = false;
};

/// Adds the dominant unstable mode with a total energy of `seed_photons`
/// photons (photons_per_unit sets the scale) and tracks the divergence from
/// the unperturbed propagation. The log-norm is fitted where the norm lies
/// between 10x the seed and 1% of the soliton norm.
GrowthTrace seeded_growth(const VectorSolitonSolution& solution, const BogoliubovSpectrum& spectrum,
                          const QuantumConvention& convention, double zeta_max, double seed_photons = 1.0,
                          std::size_t record_stride = 100);

struct EnsembleStats {
    std::size_t n_runs = 0;
    std::uint64_t seed = 0;
    double threshold = 0.5;
    double zeta_max = 0.0;
    std::vector<double> breaking_distance;  // zeta_max for censored runs
    std::vector<int> direction;             // +1 left, -1 right, 0 censored
    std::vector<bool> censored;

    std::size_t broken() const;
    std::size_t left() const;
    double mean_breaking_distance() const;  // over uncensored runs
};

struct EnsembleOptions {
    std::size_t n_runs = 200;
    double zeta_max = 100.0;
    double threshold = 0.5;
    std::uint64_t seed = 1;
    std::size_t check_stride = 100;  // steps between asymmetry checks
    bool noiseless = false;  // no noise, and round-off asymmetry is projected out at each check
};

/// Truncated-Wigner runs: each pixel mode of each component receives complex
/// Gaussian noise of variance wigner_noise_variance photons; run k draws from
/// mt19937_64 seeded with (seed, k).
EnsembleStats wigner_ensemble(const VectorSolitonSolution& solution, const QuantumConvention& convention,
                              const EnsembleOptions& options);

/// Deterministic breaking distance for U -> U (1 + amplitude tanh r).
struct SeededBreaking {
    double amplitude = 0.0;
    double distance = 0.0;
    int direction = 0;
    bool censored = true;
};
SeededBreaking seeded_breaking(const VectorSolitonSolution& solution, double amplitude, double zeta_max,
                               double threshold = 0.5, std::size_t check_stride = 100);

/// Full-beam quadrature statistics of a scalar field estimated from
/// truncated-Wigner samples, at a fixed LO phase. Symmetric ordering makes
/// the sample variance of a quadrature the quantum variance directly.
struct WignerQuadrature {
    double variance = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
};
WignerQuadrature wigner_quadrature_variance(const ComplexField& input, const KerrParams& params, double zeta,
                                            std::span<const cplx> lo_weights, double theta,
                                            const QuantumConvention& convention, std::size_t n_runs,
                                            std::uint64_t seed);

/// Exact two-sided binomial test against p = 1/2: the total probability of
/// outcomes no more likely than k successes out of n.
double binomial_two_sided_p(std::size_t k, std::size_t n);

void write_ensemble_csv(std::ostream& os, const EnsembleStats& stats);
void write_growth_csv(std::ostream& os, const GrowthTrace& trace);

}  // namespace kerrsol
