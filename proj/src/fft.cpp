#include "fft.hpp"

#include <algorithm>
#include <mutex>
#include <new>
#include <stdexcept>

namespace dequant::detail {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

FftBuffer::FftBuffer(std::size_t n)
    : n_(n), data_(static_cast<std::complex<double>*>(fftw_malloc(sizeof(std::complex<double>) * n))) {
  if (data_ == nullptr) throw std::bad_alloc();
  std::fill(data_, data_ + n_, std::complex<double>{});
}

FftBuffer::~FftBuffer() { fftw_free(data_); }

FftPlan::FftPlan(std::size_t n) : n_(n) {
  FftBuffer in(n), out(n);
  const int len = static_cast<int>(n);
  std::lock_guard lock(planner_mutex());
  forward_ = fftw_plan_dft_1d(len, as_fftw(in.span().data()), as_fftw(out.span().data()),
                              FFTW_FORWARD, FFTW_ESTIMATE);
  backward_ = fftw_plan_dft_1d(len, as_fftw(in.span().data()), as_fftw(out.span().data()),
                               FFTW_BACKWARD, FFTW_ESTIMATE);
  if (forward_ == nullptr || backward_ == nullptr) throw std::runtime_error("FFTW planning failed");
}

FftPlan::~FftPlan() {
  std::lock_guard lock(planner_mutex());
  if (forward_) fftw_destroy_plan(forward_);
  if (backward_) fftw_destroy_plan(backward_);
}

void FftPlan::execute(fftw_plan plan, std::span<const std::complex<double>> in,
                      std::span<std::complex<double>> out) const {
  FftBuffer src(n_), dst(n_);
  std::copy(in.begin(), in.end(), src.span().begin());
  fftw_execute_dft(plan, as_fftw(src.span().data()), as_fftw(dst.span().data()));
  std::copy(dst.span().begin(), dst.span().end(), out.begin());
}

void FftPlan::forward(std::span<const std::complex<double>> in,
                      std::span<std::complex<double>> out) const {
  execute(forward_, in, out);
}

void FftPlan::backward(std::span<const std::complex<double>> in,
                       std::span<std::complex<double>> out) const {
  execute(backward_, in, out);
}

}  // namespace dequant::detail
