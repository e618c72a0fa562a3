#include "kerrsol/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace kerrsol {

namespace {

// FFTW planning is not thread safe; execution with new-array calls is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

FftBlock::FftBlock(std::size_t n, std::size_t columns) : n_(n), columns_(columns) {
    if (n == 0 || columns == 0) throw Error(ErrorCode::InvalidArgument, "empty FFT block");
    // Pad columns to 64 bytes so every column shares the alignment of column 0.
    ld_ = (n + 3) / 4 * 4;
    data_ = static_cast<cplx*>(fftw_malloc(sizeof(cplx) * ld_ * columns_));
    if (data_ == nullptr) throw Error(ErrorCode::InvalidArgument, "FFT buffer allocation failed");
    std::fill(data_, data_ + ld_ * columns_, cplx{});
    std::lock_guard lock(planner_mutex());
    const int len = static_cast<int>(n_);
    forward_plan_ = fftw_plan_dft_1d(len, as_fftw(data_), as_fftw(data_), FFTW_FORWARD, FFTW_ESTIMATE);
    backward_plan_ = fftw_plan_dft_1d(len, as_fftw(data_), as_fftw(data_), FFTW_BACKWARD, FFTW_ESTIMATE);
}

FftBlock::~FftBlock() { release(); }

FftBlock::FftBlock(FftBlock&& other) noexcept
    : n_(other.n_),
      columns_(other.columns_),
      ld_(other.ld_),
      data_(std::exchange(other.data_, nullptr)),
      forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      backward_plan_(std::exchange(other.backward_plan_, nullptr)) {}

FftBlock& FftBlock::operator=(FftBlock&& other) noexcept {
    if (this != &other) {
        release();
        n_ = other.n_;
        columns_ = other.columns_;
        ld_ = other.ld_;
        data_ = std::exchange(other.data_, nullptr);
        forward_plan_ = std::exchange(other.forward_plan_, nullptr);
        backward_plan_ = std::exchange(other.backward_plan_, nullptr);
    }
    return *this;
}

void FftBlock::release() noexcept {
    if (forward_plan_ != nullptr || backward_plan_ != nullptr) {
        std::lock_guard lock(planner_mutex());
        if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
        if (backward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
    }
    forward_plan_ = backward_plan_ = nullptr;
    if (data_) fftw_free(data_);
    data_ = nullptr;
}

void FftBlock::forward(std::size_t c) {
    auto* p = as_fftw(data_ + c * ld_);
    fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), p, p);
}

void FftBlock::backward(std::size_t c) {
    auto* p = as_fftw(data_ + c * ld_);
    fftw_execute_dft(static_cast<fftw_plan>(backward_plan_), p, p);
}

DiffractionStep::DiffractionStep(const Grid& grid, double h) : factors_(grid.size()) {
    const auto k = grid.wavenumbers();
    const double norm = 1.0 / static_cast<double>(grid.size());
    for (std::size_t m = 0; m < k.size(); ++m) factors_[m] = std::polar(norm, -k[m] * k[m] * h);
}

void DiffractionStep::apply(FftBlock& block, std::size_t column) const {
    block.forward(column);
    auto col = block.column(column);
    for (std::size_t m = 0; m < col.size(); ++m) col[m] *= factors_[m];
    block.backward(column);
}

void parallel_chunks(std::size_t count, std::size_t chunk, const std::function<void(std::size_t, std::size_t)>& body) {
    if (count == 0) return;
    chunk = std::max<std::size_t>(chunk, 1);
    const std::size_t n_chunks = (count + chunk - 1) / chunk;
    const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n_chunks);
    if (workers <= 1) {
        for (std::size_t b = 0; b < count; b += chunk) body(b, std::min(count, b + chunk));
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t c = w; c < n_chunks; c += workers) {
                    const std::size_t b = c * chunk;
                    body(b, std::min(count, b + chunk));
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace kerrsol
