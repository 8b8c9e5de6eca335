#include "fourier.hpp"

#include <fftw3.h>

#include <mutex>

#include "dmad/error.hpp"

namespace dmad {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

void FftwDeleter::operator()(void* p) const noexcept { fftw_free(p); }

ComplexBuffer make_complex_buffer(std::size_t n) {
  auto* raw = static_cast<Complex*>(fftw_malloc(sizeof(Complex) * n));
  if (raw == nullptr) throw std::bad_alloc();
  return ComplexBuffer(raw);
}

RealBuffer make_real_buffer(std::size_t n) {
  auto* raw = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  if (raw == nullptr) throw std::bad_alloc();
  return RealBuffer(raw);
}

FourierTransform::FourierTransform(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) {
    throw Error(ErrorKind::kInvalidConfig, "FFT size must be positive");
  }
  std::lock_guard lock(planner_mutex());
  ComplexBuffer a = make_complex_buffer(size());
  ComplexBuffer half = make_complex_buffer(half_size());
  RealBuffer r = make_real_buffer(size());
  // FFTW_ESTIMATE planning is deterministic and leaves the arrays untouched.
  forward_ = fftw_plan_dft_2d(rows, cols, as_fftw(a.get()), as_fftw(a.get()), FFTW_FORWARD,
                              FFTW_ESTIMATE);
  inverse_ = fftw_plan_dft_2d(rows, cols, as_fftw(a.get()), as_fftw(a.get()), FFTW_BACKWARD,
                              FFTW_ESTIMATE);
  forward_real_ = fftw_plan_dft_r2c_2d(rows, cols, r.get(), as_fftw(half.get()), FFTW_ESTIMATE);
  inverse_real_ = fftw_plan_dft_c2r_2d(rows, cols, as_fftw(half.get()), r.get(), FFTW_ESTIMATE);
  if (!forward_ || !inverse_ || !forward_real_ || !inverse_real_) {
    throw Error(ErrorKind::kInvalidConfig, "FFTW planning failed");
  }
}

FourierTransform::~FourierTransform() {
  std::lock_guard lock(planner_mutex());
  for (void* p : {forward_, inverse_, forward_real_, inverse_real_}) {
    if (p) fftw_destroy_plan(static_cast<fftw_plan>(p));
  }
}

void FourierTransform::forward(Complex* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(forward_), as_fftw(data), as_fftw(data));
}

void FourierTransform::inverse(Complex* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(inverse_), as_fftw(data), as_fftw(data));
}

void FourierTransform::forward_real(double* in, Complex* out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_real_), in, as_fftw(out));
}

void FourierTransform::inverse_real(Complex* in, double* out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_real_), as_fftw(in), out);
}

}  // namespace dmad
