#pragma once

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <vector>

#include "multiflow/errors.hpp"

namespace multiflow {

/**
 * Real scalar field on the n x n periodic grid of [0, 2pi)^2. Sample (i, j)
 * sits at x = 2 pi i / n, y = 2 pi j / n and is stored at j * n + i. The mean
 * is computed once at construction.
 */
class PeriodicField2D {
 public:
  PeriodicField2D() = default;

  explicit PeriodicField2D(int n, double value = 0.0) : n_(n), values_(checked_size(n), value) { refresh(); }

  PeriodicField2D(int n, std::vector<double> values) : n_(n), values_(std::move(values)) {
    if (values_.size() != checked_size(n)) throw ConfigError("PeriodicField2D: value count is not n*n");
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidInputError("PeriodicField2D: values must be finite");
    refresh();
  }

  template <class F>
  static PeriodicField2D sample(int n, F&& f) {
    std::vector<double> v(checked_size(n));
    const double h = 2.0 * std::numbers::pi / n;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(j) * n + i] = f(i * h, j * h);
    return PeriodicField2D(n, std::move(v));
  }

  int n() const noexcept { return n_; }
  double spacing() const noexcept { return 2.0 * std::numbers::pi / n_; }
  double mean() const noexcept { return mean_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator()(int i, int j) const { return values_[static_cast<std::size_t>(j) * n_ + i]; }

  /// Quadrature sum(f) h^2 (exact for trigonometric polynomials below the Nyquist band).
  double integral() const noexcept {
    const double h = spacing();
    return mean_ * static_cast<double>(values_.size()) * h * h;
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  PeriodicField2D map(const std::function<double(double)>& f) const {
    std::vector<double> v(values_.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(values_[k]);
    return {n_, std::move(v)};
  }

  friend PeriodicField2D operator+(const PeriodicField2D& a, const PeriodicField2D& b) {
    return combine(a, b, [](double x, double y) { return x + y; });
  }
  friend PeriodicField2D operator-(const PeriodicField2D& a, const PeriodicField2D& b) {
    return combine(a, b, [](double x, double y) { return x - y; });
  }
  /// Pointwise product.
  friend PeriodicField2D operator*(const PeriodicField2D& a, const PeriodicField2D& b) {
    return combine(a, b, [](double x, double y) { return x * y; });
  }
  friend PeriodicField2D operator*(double s, const PeriodicField2D& a) {
    return a.map([s](double x) { return s * x; });
  }
  PeriodicField2D operator-() const {
    return map([](double x) { return -x; });
  }

 private:
  static std::size_t checked_size(int n) {
    if (n < 16 || (n & (n - 1)) != 0) {
      std::ostringstream msg;
      msg << "PeriodicField2D: n must be a power of two >= 16 (got " << n << ")";
      throw ConfigError(msg.str());
    }
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  }

  template <class Op>
  static PeriodicField2D combine(const PeriodicField2D& a, const PeriodicField2D& b, Op op) {
    if (a.n_ != b.n_) throw ConfigError("PeriodicField2D: grid size mismatch");
    std::vector<double> v(a.values_.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = op(a.values_[k], b.values_[k]);
    return {a.n_, std::move(v)};
  }

  void refresh() {
    double s = 0.0;
    for (double v : values_) s += v;
    mean_ = values_.empty() ? 0.0 : s / static_cast<double>(values_.size());
  }

  int n_ = 0;
  std::vector<double> values_;
  double mean_ = 0.0;
};

/// <f, g> = int f g over the torus.
inline double inner(const PeriodicField2D& f, const PeriodicField2D& g) { return (f * g).integral(); }

inline double l2_norm(const PeriodicField2D& f) { return std::sqrt(inner(f, f)); }

struct VectorField2D {
  PeriodicField2D x;
  PeriodicField2D y;
};

inline double inner(const VectorField2D& a, const VectorField2D& b) { return inner(a.x, b.x) + inner(a.y, b.y); }
inline double l2_norm(const VectorField2D& v) { return std::sqrt(inner(v, v)); }
inline VectorField2D operator*(const PeriodicField2D& s, const VectorField2D& v) { return {s * v.x, s * v.y}; }
inline PeriodicField2D dot(const VectorField2D& a, const VectorField2D& b) { return a.x * b.x + a.y * b.y; }

/// Symmetric 2x2 tensor field (xx, xy, yy).
struct SymTensorField2D {
  PeriodicField2D xx;
  PeriodicField2D xy;
  PeriodicField2D yy;

  PeriodicField2D trace() const { return xx + yy; }
};

inline SymTensorField2D operator-(const SymTensorField2D& a, const SymTensorField2D& b) {
  return {a.xx - b.xx, a.xy - b.xy, a.yy - b.yy};
}
inline SymTensorField2D operator+(const SymTensorField2D& a, const SymTensorField2D& b) {
  return {a.xx + b.xx, a.xy + b.xy, a.yy + b.yy};
}
inline SymTensorField2D operator*(const PeriodicField2D& s, const SymTensorField2D& t) {
  return {s * t.xx, s * t.xy, s * t.yy};
}
inline SymTensorField2D operator*(double s, const SymTensorField2D& t) { return {s * t.xx, s * t.xy, s * t.yy}; }

/// Full contraction A:B of symmetric tensors.
inline PeriodicField2D contract(const SymTensorField2D& a, const SymTensorField2D& b) {
  return a.xx * b.xx + 2.0 * (a.xy * b.xy) + a.yy * b.yy;
}

/// Frobenius L2 norm.
inline double l2_norm(const SymTensorField2D& t) {
  return std::sqrt(inner(t.xx, t.xx) + 2.0 * inner(t.xy, t.xy) + inner(t.yy, t.yy));
}

/// T v for symmetric T.
inline VectorField2D apply(const SymTensorField2D& t, const VectorField2D& v) {
  return {t.xx * v.x + t.xy * v.y, t.xy * v.x + t.yy * v.y};
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

using RealBuffer = std::unique_ptr<double, FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex, FftwFree>;

inline RealBuffer alloc_real(std::size_t count) {
  return RealBuffer(static_cast<double*>(fftw_malloc(sizeof(double) * count)));
}
inline ComplexBuffer alloc_complex(std::size_t count) {
  return ComplexBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count)));
}

struct PlanDeleter {
  void operator()(fftw_plan p) const noexcept {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

}  // namespace detail

/**
 * Wavenumber tables and real-to-complex transforms for an n x n periodic grid.
 * Plans are built once (FFTW_ESTIMATE, deterministic) and executed on
 * per-call buffers, so every operator is re-entrant.
 *
 * Symbols at the Nyquist wavenumber n/2: odd-order factors (i k) are set to
 * zero there; even-order factors use k = n/2.
 */
class SpectralOps {
 public:
  using Complex = std::complex<double>;
  using Spectrum = std::vector<Complex>;

  explicit SpectralOps(int n) : n_(n), half_(n / 2 + 1) {
    PeriodicField2D probe(n);  // validates n
    auto in = detail::alloc_real(size());
    auto out = detail::alloc_complex(spectrum_size());
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_.reset(fftw_plan_dft_r2c_2d(n_, n_, in.get(), out.get(), FFTW_ESTIMATE));
    backward_.reset(fftw_plan_dft_c2r_2d(n_, n_, out.get(), in.get(), FFTW_ESTIMATE));
    if (!forward_ || !backward_) throw Error("SpectralOps: FFTW plan creation failed");
  }

  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_) * n_; }
  std::size_t spectrum_size() const noexcept { return static_cast<std::size_t>(n_) * half_; }

  /// Signed wavenumber along y for row j, along x for column i of the spectrum.
  int ky(int j) const noexcept { return j <= n_ / 2 ? j : j - n_; }
  int kx(int i) const noexcept { return i; }
  bool nyquist(int k) const noexcept { return std::abs(k) == n_ / 2; }

  Spectrum forward(const PeriodicField2D& f) const {
    check(f);
    auto in = detail::alloc_real(size());
    auto out = detail::alloc_complex(spectrum_size());
    std::copy(f.values().begin(), f.values().end(), in.get());
    fftw_execute_dft_r2c(forward_.get(), in.get(), out.get());
    Spectrum s(spectrum_size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = {out.get()[k][0], out.get()[k][1]};
    return s;
  }

  PeriodicField2D backward(const Spectrum& s) const {
    auto in = detail::alloc_complex(spectrum_size());
    auto out = detail::alloc_real(size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      in.get()[k][0] = s[k].real();
      in.get()[k][1] = s[k].imag();
    }
    fftw_execute_dft_c2r(backward_.get(), in.get(), out.get());
    const double scale = 1.0 / static_cast<double>(size());
    std::vector<double> v(size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = out.get()[k] * scale;
    return {n_, std::move(v)};
  }

  /// Multiply the spectrum of f by symbol(kx, ky).
  template <class Symbol>
  PeriodicField2D apply_symbol(const PeriodicField2D& f, Symbol&& symbol) const {
    Spectrum s = forward(f);
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i < half_; ++i) s[static_cast<std::size_t>(j) * half_ + i] *= symbol(kx(i), ky(j));
    return backward(s);
  }

  PeriodicField2D ddx(const PeriodicField2D& f) const {
    return apply_symbol(f, [this](int kx, int) { return nyquist(kx) ? Complex{} : Complex(0.0, kx); });
  }
  PeriodicField2D ddy(const PeriodicField2D& f) const {
    return apply_symbol(f, [this](int, int ky) { return nyquist(ky) ? Complex{} : Complex(0.0, ky); });
  }
  PeriodicField2D laplacian(const PeriodicField2D& f) const {
    return apply_symbol(f, [](int kx, int ky) { return Complex(-double(kx * kx + ky * ky), 0.0); });
  }

  /// Zero-mean inverse Laplacian.
  PeriodicField2D inv_laplacian(const PeriodicField2D& f) const {
    return apply_symbol(f, [](int kx, int ky) {
      const int k2 = kx * kx + ky * ky;
      return k2 == 0 ? Complex{} : Complex(-1.0 / k2, 0.0);
    });
  }

  /// Component (a, b) of grad (x) grad inv_laplacian: symbol k_a k_b / |k|^2.
  PeriodicField2D riesz(const PeriodicField2D& f, int a, int b) const {
    return apply_symbol(f, [this, a, b](int kx, int ky) {
      const int k2 = kx * kx + ky * ky;
      if (k2 == 0) return Complex{};
      const int ka = a == 0 ? kx : ky;
      const int kb = b == 0 ? kx : ky;
      if (a != b && (nyquist(kx) || nyquist(ky))) return Complex{};
      return Complex(double(ka) * double(kb) / k2, 0.0);
    });
  }

  VectorField2D grad(const PeriodicField2D& f) const { return {ddx(f), ddy(f)}; }
  PeriodicField2D div(const VectorField2D& v) const { return ddx(v.x) + ddy(v.y); }

  /// Row-wise divergence (div S)_b = d_a S_ab.
  VectorField2D div(const SymTensorField2D& s) const { return {ddx(s.xx) + ddy(s.xy), ddx(s.xy) + ddy(s.yy)}; }

  /// Gradient of a vector field, entry [a][b] = d_a V_b.
  std::array<std::array<PeriodicField2D, 2>, 2> jacobian(const VectorField2D& v) const {
    return {{{ddx(v.x), ddx(v.y)}, {ddy(v.x), ddy(v.y)}}};
  }

 private:
  void check(const PeriodicField2D& f) const {
    if (f.n() != n_) throw ConfigError("SpectralOps: field grid size does not match the operator");
  }

  int n_;
  int half_;
  detail::Plan forward_;
  detail::Plan backward_;
};

}  // namespace multiflow
