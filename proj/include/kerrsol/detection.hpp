#pragma once

// Noise statistics of Green's matrices under vacuum input: homodyne
// quadratures, pixel covariances, apertures, direct-detection Fano factors
// and polarization correlations. Everything is in shot-noise units.

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "kerrsol/fluctuations.hpp"

namespace kerrsol {

enum class LoModel {
    uniform,  // plane-wave local oscillator, w_j = mask_j
    matched,  // mean-field matched, w_j = mask_j * mean_j
};

const char* to_string(LoModel lo) noexcept;

struct DetectorSpec {
    // Transmission per pixel in [0, 1]; length = pixels (applied to every
    // polarization block) or the full GreenPair dimension.
    std::vector<double> mask;
    Plane plane = Plane::direct;
    LoModel lo = LoModel::uniform;
    std::optional<double> theta;  // empty: optimize

    static DetectorSpec full(std::size_t length, LoModel lo = LoModel::uniform, Plane plane = Plane::direct);
    static DetectorSpec pixel(std::size_t length, std::size_t index, LoModel lo = LoModel::uniform);
};

/// Closed form V(theta) = a + b cos 2theta + c sin 2theta.
struct QuadratureCurve {
    double a = 1.0;
    double b = 0.0;
    double c = 0.0;

    double operator()(double theta) const noexcept;
    double best_theta() const noexcept;  // 0.5 atan2(-c, -b)
    double minimum() const noexcept;     // a - sqrt(b^2 + c^2)
    bool degenerate() const noexcept;    // no phase dependence
};

struct NoiseReport {
    double variance_snu = 1.0;
    double theta = 0.0;
    bool degenerate = false;
    double fano = std::numeric_limits<double>::quiet_NaN();
    double db = 0.0;  // 10 log10 of the reported ratio
    QuadratureCurve curve;
};

/// Normalized measurement vector (sum |w|^2 = 1) for the detector.
/// Throws BasisMismatch or EmptyDetector.
Eigen::VectorXcd measurement_vector(const GreenPair& green, const DetectorSpec& det);

/// Curve for an arbitrary (not necessarily normalized) measurement vector:
/// X(theta) = sum_j (w_j^* e^{-i theta} a_j + h.c.).
QuadratureCurve quadrature_curve(const Eigen::MatrixXcd& g, const Eigen::MatrixXcd& h, const Eigen::VectorXcd& w);

/// Variance at det.theta (or at `theta` when given); det.theta unset and no
/// explicit theta means theta = 0.
NoiseReport quadrature_variance(const GreenPair& green, const DetectorSpec& det,
                                std::optional<double> theta = std::nullopt);

NoiseReport best_quadrature(const GreenPair& green, const DetectorSpec& det);

struct PixelSqueezing {
    std::vector<double> variance;  // best variance per pixel (all blocks)
    std::vector<double> theta;
};

/// Best quadrature on every single-pixel detector. With a matched LO, pixels
/// where the mean vanishes fall back to a uniform LO (the minimum does not
/// depend on the LO phase).
PixelSqueezing pixel_squeezing_map(const GreenPair& green, LoModel lo);

/// Per-pixel quadrature covariances Cov(X_j, X_k) at a common theta with
/// LO weights l_j = 1 (uniform) or mean_j / max|mean| (matched).
struct CovarianceMap {
    Eigen::MatrixXd full;  // symmetric, variances on the diagonal
    Eigen::VectorXcd weights;

    Eigen::MatrixXd off_diagonal() const;
    /// Sum of every entry: the variance of the summed (unnormalized) quadrature.
    double total() const { return full.sum(); }
};

CovarianceMap covariance_map(const GreenPair& green, double theta, LoModel lo);

struct ApertureSample {
    std::size_t half_width_pixels = 0;  // iris covers center +/- this many pixels
    double radius = 0.0;                // in units of r
    double transmission = 0.0;
    double variance = 1.0;
    double theta = 0.0;
};

struct ApertureScan {
    std::vector<ApertureSample> samples;
    std::size_t best = 0;              // index of the minimum variance
    double chord_deviation = 0.0;      // max |V(T) - (1 + T (V(1) - 1))| / |V(1) - 1|
};

/// Centered irises growing from one pixel to the full window, around
/// `center` (pixel index within the first block; default: r = 0). For a
/// two-block GreenPair the iris applies to both polarizations.
ApertureScan aperture_scan(const GreenPair& green, LoModel lo, std::optional<std::size_t> center = std::nullopt,
                           std::size_t max_half_width = 0);

/// Direct detection of the masked intensity in the detector's plane.
/// Fractional transmissions add their partition noise so that coherent
/// light gives fano = 1 for any mask. Throws EmptyDetector.
NoiseReport intensity_noise(const GreenPair& green, const DetectorSpec& det);

/// Mask over the centered Fourier axis: |f| <= total_width / 2, f in cycles per unit r.
std::vector<double> fourier_aperture_mask(const Grid& grid, double total_width);

/// Direct-plane stop blocking |r| < half_width.
std::vector<double> central_stop_mask(const Grid& grid, double half_width);

struct PolarizationStatistics {
    double total = 1.0;        // best total-beam variance
    double theta = 0.0;        // its phase
    double plus = 1.0;         // best variance on component 1 alone
    double minus = 1.0;        // best variance on component 2 alone
    double plus_at_theta = 1.0;
    double minus_at_theta = 1.0;
    double correlation = 0.0;  // Cov(X1, X2)/sqrt(Var X1 Var X2) at theta
};

/// For a two-block GreenPair in either polarization basis.
PolarizationStatistics polarization_statistics(const GreenPair& green, LoModel lo);

struct VectorCovariance {
    Eigen::MatrixXd uu;  // diagonal removed
    Eigen::MatrixXd vv;  // diagonal removed
    Eigen::MatrixXd uv;
};

VectorCovariance vector_covariance_maps(const GreenPair& green, double theta, LoModel lo);

/// Single-mode Kerr map a -> (1 + i phi) a + i phi a^dagger as a 1x1 GreenPair.
GreenPair single_mode_kerr(double phi);

/// Its best quadrature variance, 1 + 2 phi^2 - 2 phi sqrt(1 + phi^2).
double plane_wave_squeezing(double phi);

}  // namespace kerrsol
