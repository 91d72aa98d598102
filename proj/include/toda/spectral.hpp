#pragma once

#include "toda/grid.hpp"

#include <complex>
#include <vector>

namespace toda {

using cplx = std::complex<double>;

// half-plane Fourier coefficients of a real field, normalized so that
// f(x) = sum_k c_k exp(2 pi i k.x); layout N x (N/2+1), row = k^1, column = k^2 >= 0
class Spectrum {
public:
  explicit Spectrum(int n);

  int n() const { return n_; }
  int cols() const { return n_ / 2 + 1; }
  cplx &at(int i, int j) { return c_[std::size_t(i) * cols() + j]; }
  const cplx &at(int i, int j) const { return c_[std::size_t(i) * cols() + j]; }
  std::vector<cplx> &data() { return c_; }
  const std::vector<cplx> &data() const { return c_; }
  int k1(int i) const { return i <= n_ / 2 ? i : i - n_; }
  int k2(int j) const { return j; }
  // multiplicity of a half-plane entry in the full spectrum
  double weight(int j) const { return (j == 0 || j == n_ / 2) ? 1.0 : 2.0; }
  bool is_nyquist(int i, int j) const { return i == n_ / 2 || j == n_ / 2; }

private:
  int n_;
  std::vector<cplx> c_;
};

Spectrum forward(const ScalarField &f);
ScalarField inverse(const Spectrum &s, const TorusGrid &grid);

// zero every mode with |k^1| = N/2 or |k^2| = N/2
void drop_nyquist(Spectrum &s);

// band-limited interpolation onto an M-grid (M >= N), Nyquist dropped
ScalarField interpolate(const ScalarField &f, int m);
// L2 projection of an M-grid field onto modes with |k|_inf < N/2
ScalarField project(const ScalarField &f, const TorusGrid &target);

// spectral evaluation at an arbitrary point (Nyquist modes dropped)
double evaluate_at(const ScalarField &f, Point p);
double evaluate_at(const Spectrum &s, Point p);

// sum over the full spectrum of w(k) * c_k * conj(d_k), real part
template <class W>
double spectral_inner(const Spectrum &a, const Spectrum &b, W &&w) {
  double acc = 0.0;
  const int n = a.n();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const double wk = w(a.k1(i), a.k2(j));
      if (wk == 0.0)
        continue;
      acc += a.weight(j) * wk * std::real(a.at(i, j) * std::conj(b.at(i, j)));
    }
  return acc;
}

} // namespace toda
