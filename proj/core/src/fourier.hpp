#pragma once

#include <complex>
#include <memory>

namespace dmad {

using Complex = std::complex<double>;

struct FftwDeleter {
  void operator()(void* p) const noexcept;
};

/// SIMD-aligned scratch buffer; every buffer handed to FourierTransform must
/// come from here so the plans' alignment assumptions hold.
using ComplexBuffer = std::unique_ptr<Complex[], FftwDeleter>;
using RealBuffer = std::unique_ptr<double[], FftwDeleter>;

ComplexBuffer make_complex_buffer(std::size_t n);
RealBuffer make_real_buffer(std::size_t n);

/// Unnormalised 2D DFT of a fixed rows x cols size. Plans are created once
/// (under a global lock, FFTW's planner is not reentrant); execution is
/// reentrant, so one instance serves any number of threads.
class FourierTransform {
 public:
  FourierTransform(int rows, int cols);
  ~FourierTransform();
  FourierTransform(const FourierTransform&) = delete;
  FourierTransform& operator=(const FourierTransform&) = delete;

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(rows_) * cols_; }
  /// Length of the half spectrum produced by forward_real().
  std::size_t half_size() const noexcept {
    return static_cast<std::size_t>(rows_) * (cols_ / 2 + 1);
  }

  void forward(Complex* data) const;
  /// Unnormalised inverse; callers scale by 1/size().
  void inverse(Complex* data) const;
  /// Real input to half spectrum (rows x (cols/2+1)).
  void forward_real(double* in, Complex* out) const;
  /// Half spectrum back to real; destroys `in`. Unnormalised.
  void inverse_real(Complex* in, double* out) const;

 private:
  int rows_;
  int cols_;
  void* forward_ = nullptr;
  void* inverse_ = nullptr;
  void* forward_real_ = nullptr;
  void* inverse_real_ = nullptr;
};

}  // namespace dmad
