#include "kerrsol/detection.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace kerrsol {

const char* to_string(LoModel lo) noexcept { return lo == LoModel::uniform ? "uniform" : "matched"; }

DetectorSpec DetectorSpec::full(std::size_t length, LoModel lo, Plane plane) {
    DetectorSpec d;
    d.mask.assign(length, 1.0);
    d.lo = lo;
    d.plane = plane;
    return d;
}

DetectorSpec DetectorSpec::pixel(std::size_t length, std::size_t index, LoModel lo) {
    if (index >= length) throw Error(ErrorCode::InvalidArgument, "pixel index out of range");
    DetectorSpec d;
    d.mask.assign(length, 0.0);
    d.mask[index] = 1.0;
    d.lo = lo;
    return d;
}

double QuadratureCurve::operator()(double theta) const noexcept {
    return a + b * std::cos(2.0 * theta) + c * std::sin(2.0 * theta);
}

double QuadratureCurve::best_theta() const noexcept { return 0.5 * std::atan2(-c, -b); }

double QuadratureCurve::minimum() const noexcept { return a - std::hypot(b, c); }

bool QuadratureCurve::degenerate() const noexcept { return std::hypot(b, c) <= 1e-12 * std::abs(a); }

namespace {

Eigen::VectorXd expand_mask(const GreenPair& green, const std::vector<double>& mask) {
    const Eigen::Index dim = green.dim();
    Eigen::VectorXd t(dim);
    const auto len = static_cast<Eigen::Index>(mask.size());
    if (len == dim) {
        for (Eigen::Index k = 0; k < dim; ++k) t(k) = mask[static_cast<std::size_t>(k)];
    } else if (len > 0 && len * green.blocks == dim) {
        for (Eigen::Index k = 0; k < dim; ++k) t(k) = mask[static_cast<std::size_t>(k % len)];
    } else {
        throw Error(ErrorCode::InvalidArgument, "mask length " + std::to_string(mask.size()) +
                                                    " does not match the GreenPair dimension " + std::to_string(dim));
    }
    for (Eigen::Index k = 0; k < dim; ++k)
        if (!(t(k) >= 0.0 && t(k) <= 1.0)) throw Error(ErrorCode::InvalidArgument, "mask weights must lie in [0, 1]");
    return t;
}

void check_plane(const GreenPair& green, const DetectorSpec& det) {
    if (green.plane != det.plane)
        throw Error(ErrorCode::BasisMismatch, std::string("detector in the ") + to_string(det.plane) +
                                                  " plane, GreenPair in the " + to_string(green.plane) + " plane");
}

Eigen::VectorXcd lo_weights(const GreenPair& green, LoModel lo) {
    if (lo == LoModel::uniform) return Eigen::VectorXcd::Ones(green.dim());
    const double peak = green.mean.cwiseAbs().maxCoeff();
    if (!(peak > 0.0)) throw Error(ErrorCode::EmptyDetector, "matched LO needs a nonzero mean field");
    return green.mean / peak;
}

NoiseReport report(const QuadratureCurve& curve, double theta) {
    NoiseReport r;
    r.curve = curve;
    r.theta = theta;
    r.variance_snu = curve(theta);
    r.degenerate = curve.degenerate();
    r.db = 10.0 * std::log10(r.variance_snu);
    return r;
}

}  // namespace

Eigen::VectorXcd measurement_vector(const GreenPair& green, const DetectorSpec& det) {
    check_plane(green, det);
    const Eigen::VectorXd t = expand_mask(green, det.mask);
    Eigen::VectorXcd w = t.cast<cplx>();
    if (det.lo == LoModel::matched) {
        if (green.mean.size() != green.dim()) throw Error(ErrorCode::InvalidArgument, "GreenPair carries no mean field");
        w = w.cwiseProduct(green.mean);
    }
    const double norm = w.norm();
    if (!(norm > 0.0))
        throw Error(ErrorCode::EmptyDetector, std::string("detector sees no ") +
                                                  (det.lo == LoModel::matched ? "mean field" : "pixels"));
    return w / norm;
}

QuadratureCurve quadrature_curve(const Eigen::MatrixXcd& g, const Eigen::MatrixXcd& h, const Eigen::VectorXcd& w) {
    // X = sum_k (e^{-i theta} alpha_k + e^{i theta} beta_k) a_k + h.c. with
    // alpha = w^dagger G and beta = conj(w^dagger H).
    const Eigen::RowVectorXcd alpha = w.adjoint() * g;
    const Eigen::RowVectorXcd beta = (w.adjoint() * h).conjugate();
    const cplx s = (alpha.array() * beta.array().conjugate()).sum();
    QuadratureCurve curve;
    curve.a = alpha.squaredNorm() + beta.squaredNorm();
    curve.b = 2.0 * s.real();
    curve.c = 2.0 * s.imag();
    return curve;
}

NoiseReport quadrature_variance(const GreenPair& green, const DetectorSpec& det, std::optional<double> theta) {
    const Eigen::VectorXcd w = measurement_vector(green, det);
    const QuadratureCurve curve = quadrature_curve(green.g, green.h, w);
    return report(curve, theta.value_or(det.theta.value_or(0.0)));
}

NoiseReport best_quadrature(const GreenPair& green, const DetectorSpec& det) {
    const Eigen::VectorXcd w = measurement_vector(green, det);
    const QuadratureCurve curve = quadrature_curve(green.g, green.h, w);
    NoiseReport r = report(curve, curve.best_theta());
    r.variance_snu = std::min(r.variance_snu, curve.minimum());
    r.db = 10.0 * std::log10(r.variance_snu);
    return r;
}

PixelSqueezing pixel_squeezing_map(const GreenPair& green, LoModel lo) {
    const Eigen::Index dim = green.dim();
    PixelSqueezing out;
    out.variance.resize(static_cast<std::size_t>(dim));
    out.theta.resize(static_cast<std::size_t>(dim));
    for (Eigen::Index j = 0; j < dim; ++j) {
        Eigen::VectorXcd w = Eigen::VectorXcd::Zero(dim);
        const cplx m = green.mean.size() == dim ? green.mean(j) : cplx(0.0);
        w(j) = (lo == LoModel::matched && std::abs(m) > 0.0) ? m / std::abs(m) : cplx(1.0);
        const QuadratureCurve curve = quadrature_curve(green.g, green.h, w);
        out.variance[static_cast<std::size_t>(j)] = curve.minimum();
        out.theta[static_cast<std::size_t>(j)] = curve.best_theta();
    }
    return out;
}

Eigen::MatrixXd CovarianceMap::off_diagonal() const {
    Eigen::MatrixXd c = full;
    c.diagonal().setZero();
    return c;
}

CovarianceMap covariance_map(const GreenPair& green, double theta, LoModel lo) {
    CovarianceMap out;
    out.weights = lo_weights(green, lo);
    const cplx em = std::polar(1.0, -theta);
    // Row j holds the coefficients of X_j on the input modes a_k.
    const Eigen::MatrixXcd rows = em * (out.weights.conjugate().asDiagonal() * green.g) +
                                  std::conj(em) * (out.weights.asDiagonal() * green.h.conjugate());
    out.full = (rows * rows.adjoint()).real();
    out.full = 0.5 * (out.full + out.full.transpose()).eval();
    return out;
}

ApertureScan aperture_scan(const GreenPair& green, LoModel lo, std::optional<std::size_t> center,
                           std::size_t max_half_width) {
    if (green.plane != Plane::direct) throw Error(ErrorCode::BasisMismatch, "aperture scans need the direct plane");
    const std::size_t n = green.pixels();
    const std::size_t c = center.value_or(green.grid.center());
    if (c >= n) throw Error(ErrorCode::InvalidArgument, "aperture center out of range");
    const std::size_t reach = std::max(c, n - 1 - c);
    const std::size_t top = max_half_width == 0 ? reach : std::min(max_half_width, reach);

    const Eigen::VectorXd intensity = green.mean.cwiseAbs2();
    const double total = intensity.sum();
    if (!(total > 0.0)) throw Error(ErrorCode::EmptyDetector, "aperture scan needs a nonzero mean field");

    ApertureScan scan;
    std::vector<double> mask(n, 0.0);
    for (std::size_t k = 0; k <= top; ++k) {
        if (c >= k) mask[c - k] = 1.0;
        if (c + k < n) mask[c + k] = 1.0;
        DetectorSpec det;
        det.mask = mask;
        det.lo = lo;
        const Eigen::VectorXd t = expand_mask(green, mask);
        ApertureSample s;
        s.half_width_pixels = k;
        s.radius = (static_cast<double>(k) + 0.5) * green.grid.dr();
        s.transmission = t.dot(intensity) / total;
        try {
            const NoiseReport r = best_quadrature(green, det);
            s.variance = r.variance_snu;
            s.theta = r.theta;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyDetector) throw;
            s.variance = 1.0;  // nothing detected: shot noise
        }
        scan.samples.push_back(s);
    }
    for (std::size_t k = 1; k < scan.samples.size(); ++k)
        if (scan.samples[k].variance < scan.samples[scan.best].variance) scan.best = k;

    const ApertureSample& last = scan.samples.back();
    const double span = last.variance - 1.0;
    if (std::abs(span) > 0.0) {
        for (const auto& s : scan.samples) {
            const double chord = 1.0 + s.transmission / last.transmission * span;
            scan.chord_deviation = std::max(scan.chord_deviation, std::abs(s.variance - chord) / std::abs(span));
        }
    }
    return scan;
}

NoiseReport intensity_noise(const GreenPair& green, const DetectorSpec& det) {
    check_plane(green, det);
    if (green.mean.size() != green.dim()) throw Error(ErrorCode::InvalidArgument, "GreenPair carries no mean field");
    const Eigen::VectorXd t = expand_mask(green, det.mask);
    const Eigen::VectorXd intensity = green.mean.cwiseAbs2();
    const double detected = t.dot(intensity);
    if (!(detected > 0.0)) throw Error(ErrorCode::EmptyDetector, "masked mean intensity is zero");
    const Eigen::VectorXcd w = t.cast<cplx>().cwiseProduct(green.mean);
    const QuadratureCurve curve = quadrature_curve(green.g, green.h, w);
    double partition = 0.0;
    for (Eigen::Index k = 0; k < t.size(); ++k) partition += t(k) * (1.0 - t(k)) * intensity(k);
    NoiseReport r;
    r.curve = curve;
    r.theta = 0.0;
    r.fano = (curve(0.0) + partition) / detected;
    r.variance_snu = r.fano;
    r.db = 10.0 * std::log10(r.fano);
    return r;
}

std::vector<double> fourier_aperture_mask(const Grid& grid, double total_width) {
    if (!(total_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "aperture width must be positive");
    const auto f = grid.centered_frequencies();
    std::vector<double> mask(f.size(), 0.0);
    for (std::size_t k = 0; k < f.size(); ++k)
        if (std::abs(f[k]) <= 0.5 * total_width + 1e-12) mask[k] = 1.0;
    return mask;
}

std::vector<double> central_stop_mask(const Grid& grid, double half_width) {
    std::vector<double> mask(grid.size(), 1.0);
    for (std::size_t j = 0; j < grid.size(); ++j)
        if (std::abs(grid.position(j)) < half_width) mask[j] = 0.0;
    return mask;
}

PolarizationStatistics polarization_statistics(const GreenPair& green, LoModel lo) {
    if (green.blocks != 2) throw Error(ErrorCode::BasisMismatch, "polarization statistics need a two-block GreenPair");
    if (green.plane != Plane::direct) throw Error(ErrorCode::BasisMismatch, "polarization statistics use the direct plane");
    const Eigen::Index n = static_cast<Eigen::Index>(green.pixels());
    const Eigen::VectorXcd w = measurement_vector(green, DetectorSpec::full(green.pixels(), lo));
    Eigen::VectorXcd w1 = Eigen::VectorXcd::Zero(2 * n);
    Eigen::VectorXcd w2 = Eigen::VectorXcd::Zero(2 * n);
    w1.head(n) = w.head(n);
    w2.tail(n) = w.tail(n);

    const QuadratureCurve total = quadrature_curve(green.g, green.h, w);
    const QuadratureCurve c1 = quadrature_curve(green.g, green.h, w1);
    const QuadratureCurve c2 = quadrature_curve(green.g, green.h, w2);

    PolarizationStatistics s;
    s.theta = total.best_theta();
    s.total = total.minimum();
    // Single components normalized on their own.
    const double n1 = w1.squaredNorm();
    const double n2 = w2.squaredNorm();
    if (!(n1 > 0.0) || !(n2 > 0.0)) throw Error(ErrorCode::EmptyDetector, "a polarization component is empty");
    s.plus = c1.minimum() / n1;
    s.minus = c2.minimum() / n2;
    const double v1 = c1(s.theta);
    const double v2 = c2(s.theta);
    s.plus_at_theta = v1 / n1;
    s.minus_at_theta = v2 / n2;
    const double cov = 0.5 * (total(s.theta) - v1 - v2);
    s.correlation = cov / std::sqrt(v1 * v2);
    return s;
}

VectorCovariance vector_covariance_maps(const GreenPair& green, double theta, LoModel lo) {
    if (green.blocks != 2) throw Error(ErrorCode::BasisMismatch, "vector covariance maps need a two-block GreenPair");
    const CovarianceMap map = covariance_map(green, theta, lo);
    const Eigen::Index n = static_cast<Eigen::Index>(green.pixels());
    VectorCovariance out;
    out.uu = map.full.topLeftCorner(n, n);
    out.vv = map.full.bottomRightCorner(n, n);
    out.uv = map.full.topRightCorner(n, n);
    out.uu.diagonal().setZero();
    out.vv.diagonal().setZero();
    return out;
}

GreenPair single_mode_kerr(double phi) {
    GreenPair gp;
    gp.g = Eigen::MatrixXcd::Constant(1, 1, cplx(1.0, phi));
    gp.h = Eigen::MatrixXcd::Constant(1, 1, cplx(0.0, phi));
    gp.mean = Eigen::VectorXcd::Ones(1);
    gp.zeta = phi;
    check_symplectic(gp);
    return gp;
}

double plane_wave_squeezing(double phi) {
    // Equal to 1 + 2 phi^2 - 2 phi sqrt(1 + phi^2) without the cancellation.
    return 1.0 / (1.0 + 2.0 * phi * phi + 2.0 * std::abs(phi) * std::sqrt(1.0 + phi * phi));
}

}  // namespace kerrsol
