#include "toda/spectral.hpp"
#include "toda/errors.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace toda {

namespace {

// FFTW plans are created once per size; creation is serialized, execution
// through the new-array interface is thread safe
struct PlanPair {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

std::mutex plan_mutex;
std::map<int, PlanPair> &plan_cache() {
  static std::map<int, PlanPair> cache;
  return cache;
}

PlanPair plans_for(int n) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto &cache = plan_cache();
  auto it = cache.find(n);
  if (it != cache.end())
    return it->second;
  const std::size_t real_len = std::size_t(n) * n;
  const std::size_t cplx_len = std::size_t(n) * (n / 2 + 1);
  double *r = fftw_alloc_real(real_len);
  fftw_complex *c = fftw_alloc_complex(cplx_len);
  PlanPair p;
  p.r2c = fftw_plan_dft_r2c_2d(n, n, r, c, FFTW_ESTIMATE);
  p.c2r = fftw_plan_dft_c2r_2d(n, n, c, r, FFTW_ESTIMATE);
  fftw_free(r);
  fftw_free(c);
  cache.emplace(n, p);
  return p;
}

struct RealBuf {
  double *p;
  explicit RealBuf(std::size_t n) : p(fftw_alloc_real(n)) {}
  ~RealBuf() { fftw_free(p); }
};
struct CplxBuf {
  fftw_complex *p;
  explicit CplxBuf(std::size_t n) : p(fftw_alloc_complex(n)) {}
  ~CplxBuf() { fftw_free(p); }
};

} // namespace

Spectrum::Spectrum(int n) : n_(n), c_(std::size_t(n) * (n / 2 + 1)) {}

Spectrum forward(const ScalarField &f) {
  const int n = f.n();
  PlanPair plans = plans_for(n);
  RealBuf in(f.size());
  Spectrum s(n);
  CplxBuf out(s.data().size());
  std::copy(f.values().begin(), f.values().end(), in.p);
  fftw_execute_dft_r2c(plans.r2c, in.p, out.p);
  const double scale = 1.0 / double(f.size());
  for (std::size_t k = 0; k < s.data().size(); ++k)
    s.data()[k] = cplx(out.p[k][0], out.p[k][1]) * scale;
  return s;
}

ScalarField inverse(const Spectrum &s, const TorusGrid &grid) {
  if (s.n() != grid.n())
    throw GridMismatch("spectrum size does not match grid");
  PlanPair plans = plans_for(s.n());
  CplxBuf in(s.data().size());
  for (std::size_t k = 0; k < s.data().size(); ++k) {
    in.p[k][0] = s.data()[k].real();
    in.p[k][1] = s.data()[k].imag();
  }
  RealBuf out(grid.size());
  fftw_execute_dft_c2r(plans.c2r, in.p, out.p);
  return ScalarField(grid, std::vector<double>(out.p, out.p + grid.size()));
}

void drop_nyquist(Spectrum &s) {
  const int n = s.n();
  for (int i = 0; i < n; ++i)
    s.at(i, n / 2) = 0.0;
  for (int j = 0; j < s.cols(); ++j)
    s.at(n / 2, j) = 0.0;
}

ScalarField interpolate(const ScalarField &f, int m) {
  const int n = f.n();
  if (m < n)
    throw InvalidArgument("interpolation target must not be coarser");
  Spectrum src = forward(f);
  Spectrum dst(m);
  const int h = n / 2;
  for (int i = 0; i < n; ++i) {
    const int k1 = src.k1(i);
    if (k1 == h || k1 == -h)
      continue;
    const int di = k1 >= 0 ? k1 : k1 + m;
    for (int j = 0; j < h; ++j)
      dst.at(di, j) = src.at(i, j);
  }
  return inverse(dst, TorusGrid::any(m));
}

ScalarField project(const ScalarField &f, const TorusGrid &target) {
  const int m = f.n();
  const int n = target.n();
  if (m < n)
    throw InvalidArgument("projection target must not be finer");
  Spectrum src = forward(f);
  Spectrum dst(n);
  const int h = n / 2;
  for (int i = 0; i < n; ++i) {
    const int k1 = dst.k1(i);
    if (k1 == h || k1 == -h)
      continue;
    const int si = k1 >= 0 ? k1 : k1 + m;
    for (int j = 0; j < h; ++j)
      dst.at(i, j) = src.at(si, j);
  }
  return inverse(dst, target);
}

double evaluate_at(const Spectrum &s, Point p) {
  const int n = s.n();
  const double tau = 2.0 * M_PI;
  // separable phase tables
  std::vector<cplx> e1(n), e2(s.cols());
  for (int i = 0; i < n; ++i)
    e1[i] = std::polar(1.0, tau * s.k1(i) * p.x);
  for (int j = 0; j < s.cols(); ++j)
    e2[j] = std::polar(1.0, tau * j * p.y);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    if (s.k1(i) == n / 2)
      continue;
    for (int j = 0; j < n / 2; ++j)
      acc += s.weight(j) * std::real(s.at(i, j) * e1[i] * e2[j]);
  }
  return acc;
}

double evaluate_at(const ScalarField &f, Point p) {
  return evaluate_at(forward(f), p);
}

} // namespace toda
