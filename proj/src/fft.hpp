#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <fftw3.h>

namespace dequant::detail {

/// Forward/backward complex DFT of a fixed length.
///
/// Plans are created once (FFTW_ESTIMATE, so results are reproducible) and
/// executed through the new-array interface, which is safe to call from
/// several threads at once. Backward transforms are unnormalized.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::size_t size() const noexcept { return n_; }

  void forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const;
  void backward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const;

 private:
  void execute(fftw_plan plan, std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out) const;

  std::size_t n_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// fftw_malloc-backed buffer so execution matches the plans' alignment.
class FftBuffer {
 public:
  explicit FftBuffer(std::size_t n);
  ~FftBuffer();
  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;

  std::span<std::complex<double>> span() noexcept { return {data_, n_}; }
  std::span<const std::complex<double>> span() const noexcept { return {data_, n_}; }
  std::complex<double>& operator[](std::size_t i) noexcept { return data_[i]; }

 private:
  std::size_t n_;
  std::complex<double>* data_;
};

}  // namespace dequant::detail
