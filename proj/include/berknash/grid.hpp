#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "berknash/errors.hpp"

namespace berknash {

// One state-space axis: a partition of [lo, hi] into cells with recorded
// edges and centers. Spacing is uniform or geometric-with-zero-cell; the
// latter resolves positive shock axes whose kernels live on multiplicative
// scales.
struct Axis {
  std::string name;
  std::vector<double> edges;    // size n+1, strictly increasing
  std::vector<double> centers;  // size n
  bool log_spaced = false;

  size_t size() const { return centers.size(); }
  double lo() const { return edges.front(); }
  double hi() const { return edges.back(); }

  static Axis uniform(std::string name, double lo, double hi, size_t n) {
    if (n < 1 || !(hi > lo)) throw DomainError("axis '" + name + "': need hi > lo and n >= 1");
    Axis a;
    a.name = std::move(name);
    a.edges.resize(n + 1);
    for (size_t i = 0; i <= n; ++i)
      a.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
    a.edges[n] = hi;
    a.finish();
    return a;
  }

  // Edges lo + (hi-lo) * (i/n)^2: concentrates cells near the lower bound so
  // integrands with an inverse-square-root weight are equidistributed.
  static Axis quadratic(std::string name, double lo, double hi, size_t n) {
    if (n < 1 || !(hi > lo)) throw DomainError("axis '" + name + "': need hi > lo and n >= 1");
    Axis a;
    a.name = std::move(name);
    a.edges.resize(n + 1);
    for (size_t i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n);
      a.edges[i] = lo + (hi - lo) * t * t;
    }
    a.edges[0] = lo;
    a.edges[n] = hi;
    a.finish();
    return a;
  }

  // Cells {[0, floor], [floor, floor*r], ...} up to hi. Requires 0 <= 0 < floor < hi.
  static Axis log_zero(std::string name, double floor_pos, double hi, size_t n) {
    if (n < 2 || !(floor_pos > 0.0) || !(hi > floor_pos))
      throw DomainError("axis '" + name + "': need 0 < floor < hi and n >= 2");
    Axis a;
    a.name = std::move(name);
    a.log_spaced = true;
    a.edges.resize(n + 1);
    a.edges[0] = 0.0;
    const double lf = std::log(floor_pos), lh = std::log(hi);
    for (size_t i = 0; i < n; ++i)
      a.edges[i + 1] = std::exp(lf + (lh - lf) * static_cast<double>(i) / static_cast<double>(n - 1));
    a.edges[n] = hi;
    a.finish();
    return a;
  }

  // Index of the cell containing v; clamps to the boundary cells.
  size_t locate(double v) const {
    if (v <= edges.front()) return 0;
    if (v >= edges.back()) return size() - 1;
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    return static_cast<size_t>(it - edges.begin()) - 1;
  }

  double width(size_t i) const { return edges[i + 1] - edges[i]; }

 private:
  void finish() {
    const size_t n = edges.size() - 1;
    centers.resize(n);
    for (size_t i = 0; i < n; ++i) centers[i] = 0.5 * (edges[i] + edges[i + 1]);
  }
};

// Row-major flat indexing over a product of axes.
struct StateSpace {
  std::vector<Axis> axes;

  size_t size() const {
    size_t s = 1;
    for (const auto& a : axes) s *= a.size();
    return s;
  }
  size_t dims() const { return axes.size(); }

  size_t flat(const std::vector<size_t>& idx) const {
    size_t f = 0;
    for (size_t d = 0; d < axes.size(); ++d) f = f * axes[d].size() + idx[d];
    return f;
  }

  std::vector<size_t> unflat(size_t f) const {
    std::vector<size_t> idx(axes.size());
    for (size_t d = axes.size(); d-- > 0;) {
      idx[d] = f % axes[d].size();
      f /= axes[d].size();
    }
    return idx;
  }

  size_t coord(size_t flat_idx, size_t d) const {
    for (size_t k = axes.size(); k-- > d + 1;) flat_idx /= axes[k].size();
    return flat_idx % axes[d].size();
  }

  double center_of(size_t flat_idx, size_t d) const {
    return axes[d].centers[coord(flat_idx, d)];
  }

  std::vector<double> center(size_t f) const {
    auto idx = unflat(f);
    std::vector<double> c(axes.size());
    for (size_t d = 0; d < axes.size(); ++d) c[d] = axes[d].centers[idx[d]];
    return c;
  }
};

// Action grid: a finite list of action values, possibly log-spaced or an
// explicit label set.
struct ActionGrid {
  std::vector<double> values;

  size_t size() const { return values.size(); }

  static ActionGrid uniform(double lo, double hi, size_t n) {
    if (n < 1 || hi < lo) throw DomainError("action grid: need hi >= lo, n >= 1");
    ActionGrid g;
    if (n == 1) {
      g.values = {0.5 * (lo + hi)};
      return g;
    }
    g.values.resize(n);
    for (size_t i = 0; i < n; ++i)
      g.values[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    g.values.front() = lo;
    g.values.back() = hi;
    return g;
  }

  // {0} u geometric points on [floor, hi]; for action domains touching 0
  // whose optimal policies scale multiplicatively.
  static ActionGrid log_zero(double floor_pos, double hi, size_t n) {
    if (n < 3 || !(floor_pos > 0.0) || !(hi > floor_pos))
      throw DomainError("log action grid: need 0 < floor < hi, n >= 3");
    ActionGrid g;
    g.values.resize(n);
    g.values[0] = 0.0;
    const double lf = std::log(floor_pos), lh = std::log(hi);
    for (size_t i = 1; i < n; ++i)
      g.values[i] = std::exp(lf + (lh - lf) * static_cast<double>(i - 1) / static_cast<double>(n - 2));
    g.values[n - 1] = hi;
    return g;
  }

  static ActionGrid explicit_values(std::vector<double> v) {
    if (v.empty()) throw DomainError("action grid: empty value list");
    ActionGrid g;
    g.values = std::move(v);
    return g;
  }

  // Local step size around index j (grid may be non-uniform).
  double step_at(size_t j) const {
    if (values.size() < 2) return 0.0;
    if (j + 1 < values.size()) return values[j + 1] - values[j];
    return values[j] - values[j - 1];
  }

  size_t nearest(double x) const {
    size_t best = 0;
    double bd = std::abs(values[0] - x);
    for (size_t i = 1; i < values.size(); ++i) {
      double d = std::abs(values[i] - x);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return best;
  }
};

// Cartesian product grid over the parameter box.
struct ThetaGrid {
  std::vector<std::vector<double>> dims;  // per-coordinate values

  size_t size() const {
    size_t s = 1;
    for (const auto& d : dims) s *= d.size();
    return s;
  }

  std::vector<double> point(size_t f) const {
    std::vector<double> p(dims.size());
    for (size_t d = dims.size(); d-- > 0;) {
      p[d] = dims[d][f % dims[d].size()];
      f /= dims[d].size();
    }
    return p;
  }

  // Flat index of the grid point nearest to p (per-coordinate nearest).
  size_t nearest(const std::vector<double>& p) const {
    if (p.size() != dims.size()) throw ShapeError("theta point dimension mismatch");
    size_t f = 0;
    for (size_t d = 0; d < dims.size(); ++d) {
      size_t best = 0;
      double bd = std::abs(dims[d][0] - p[d]);
      for (size_t i = 1; i < dims[d].size(); ++i) {
        double dd = std::abs(dims[d][i] - p[d]);
        if (dd < bd) {
          bd = dd;
          best = i;
        }
      }
      f = f * dims[d].size() + best;
    }
    return f;
  }

  static std::vector<double> linspace(double lo, double hi, size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
      v[0] = 0.5 * (lo + hi);
      return v;
    }
    for (size_t i = 0; i < n; ++i)
      v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    v.front() = lo;  // exact endpoints: grid corners must hit declared bounds
    v.back() = hi;
    return v;
  }
};

}  // namespace berknash
