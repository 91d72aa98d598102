#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace toda {

// point on the unit torus, coordinates taken mod 1
struct Point {
  double x = 0.0; // x^1, row direction
  double y = 0.0; // x^2, column direction
};

double wrap01(double t);
Point wrap(Point p);
// minimal-image displacement a - b, each coordinate in [-1/2, 1/2)
Point torus_delta(Point a, Point b);
double torus_dist2(Point a, Point b);
double torus_dist(Point a, Point b);

class TorusGrid {
public:
  explicit TorusGrid(int n);
  // any even size, used for padded quadrature grids
  static TorusGrid any(int n);

  int n() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  double spacing() const { return 1.0 / n_; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * n_ + j;
  }
  Point node(int i, int j) const { return {double(i) / n_, double(j) / n_}; }
  Point node(std::size_t idx) const {
    return node(int(idx / n_), int(idx % n_));
  }
  // signed wavenumber of FFT row index i
  int wavenumber(int i) const { return i <= n_ / 2 ? i : i - n_; }

  bool operator==(const TorusGrid &o) const { return n_ == o.n_; }

private:
  struct Unchecked {};
  TorusGrid(int n, Unchecked) : n_(n) {}
  int n_;
};

// smallest grid accepted anywhere in the library
inline constexpr int kMinGrid = 32;
bool is_power_of_two(int n);

// real function sampled on the torus grid, row-major: values[i*N + j] = f(i/N, j/N)
class ScalarField {
public:
  // placeholder on a 2x2 grid, to be assigned
  ScalarField() : ScalarField(TorusGrid::any(2)) {}
  explicit ScalarField(const TorusGrid &grid, double value = 0.0);
  ScalarField(const TorusGrid &grid, std::vector<double> values);

  template <class F> static ScalarField sample(const TorusGrid &grid, F &&f) {
    ScalarField out(grid);
    for (int i = 0; i < grid.n(); ++i)
      for (int j = 0; j < grid.n(); ++j)
        out.values_[grid.index(i, j)] = f(grid.node(i, j));
    return out;
  }

  const TorusGrid &grid() const { return grid_; }
  int n() const { return grid_.n(); }
  std::size_t size() const { return values_.size(); }
  const std::vector<double> &values() const { return values_; }
  std::vector<double> &values() { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  double &operator[](std::size_t k) { return values_[k]; }
  double at(int i, int j) const { return values_[grid_.index(i, j)]; }

  double max() const;
  double min() const;
  std::size_t argmax() const; // first in row-major order on ties
  bool all_finite() const;

  ScalarField &operator+=(const ScalarField &o);
  ScalarField &operator-=(const ScalarField &o);
  ScalarField &operator*=(double s);
  ScalarField &operator+=(double c);

private:
  TorusGrid grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField &b);
ScalarField operator-(ScalarField a, const ScalarField &b);
ScalarField operator*(double s, ScalarField a);
ScalarField operator+(ScalarField a, double c);

void require_same_grid(const ScalarField &a, const ScalarField &b);
double max_abs_diff(const ScalarField &a, const ScalarField &b);

// compensated mean of a sequence, deterministic order
double compensated_mean(const double *v, std::size_t n);

} // namespace toda
