#include "toda/grid.hpp"
#include "toda/errors.hpp"

#include <algorithm>
#include <string>

namespace toda {

double wrap01(double t) {
  double r = t - std::floor(t);
  return r >= 1.0 ? 0.0 : r;
}

Point wrap(Point p) { return {wrap01(p.x), wrap01(p.y)}; }

static double centered(double d) {
  d -= std::floor(d + 0.5);
  return d;
}

Point torus_delta(Point a, Point b) {
  return {centered(a.x - b.x), centered(a.y - b.y)};
}

double torus_dist2(Point a, Point b) {
  Point d = torus_delta(a, b);
  return d.x * d.x + d.y * d.y;
}

double torus_dist(Point a, Point b) { return std::sqrt(torus_dist2(a, b)); }

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

TorusGrid::TorusGrid(int n) : n_(n) {
  if (n < kMinGrid || !is_power_of_two(n))
    throw InvalidArgument("grid size must be a power of two >= 32, got " +
                          std::to_string(n));
}

TorusGrid TorusGrid::any(int n) {
  if (n < 2 || n % 2 != 0)
    throw InvalidArgument("grid size must be even, got " + std::to_string(n));
  return TorusGrid(n, Unchecked{});
}

ScalarField::ScalarField(const TorusGrid &grid, double value)
    : grid_(grid), values_(grid.size(), value) {}

ScalarField::ScalarField(const TorusGrid &grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw GridMismatch("value count does not match grid");
}

double ScalarField::max() const {
  return *std::max_element(values_.begin(), values_.end());
}

double ScalarField::min() const {
  return *std::min_element(values_.begin(), values_.end());
}

std::size_t ScalarField::argmax() const {
  return std::size_t(std::max_element(values_.begin(), values_.end()) -
                     values_.begin());
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

void require_same_grid(const ScalarField &a, const ScalarField &b) {
  if (!(a.grid() == b.grid()))
    throw GridMismatch("fields live on different grids (" +
                       std::to_string(a.n()) + " vs " + std::to_string(b.n()) +
                       ")");
}

ScalarField &ScalarField::operator+=(const ScalarField &o) {
  require_same_grid(*this, o);
  for (std::size_t k = 0; k < values_.size(); ++k)
    values_[k] += o.values_[k];
  return *this;
}

ScalarField &ScalarField::operator-=(const ScalarField &o) {
  require_same_grid(*this, o);
  for (std::size_t k = 0; k < values_.size(); ++k)
    values_[k] -= o.values_[k];
  return *this;
}

ScalarField &ScalarField::operator*=(double s) {
  for (double &v : values_)
    v *= s;
  return *this;
}

ScalarField &ScalarField::operator+=(double c) {
  for (double &v : values_)
    v += c;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField &b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField &b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }
ScalarField operator+(ScalarField a, double c) { return a += c; }

double max_abs_diff(const ScalarField &a, const ScalarField &b) {
  require_same_grid(a, b);
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

double compensated_mean(const double *v, std::size_t n) {
  // Neumaier summation
  double sum = 0.0, comp = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double t = sum + v[k];
    if (std::abs(sum) >= std::abs(v[k]))
      comp += (sum - t) + v[k];
    else
      comp += (v[k] - t) + sum;
    sum = t;
  }
  return (sum + comp) / double(n);
}

} // namespace toda
