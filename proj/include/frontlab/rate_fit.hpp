#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace frontlab {

class InconclusiveFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double window_lo = 0.0;  // smallest x used
  double window_hi = 0.0;  // largest x used
  int used = 0;
  std::vector<int> used_index;  // into the input arrays
  bool flagged = false;
  std::string note;
};

/// Which pairs enter the least-squares fit. "Head" means the largest x
/// (pre-asymptotic for delta/tau sweeps), "tail" the smallest.
struct WindowPolicy {
  int drop_head = 0;
  int drop_tail = 0;
  double middle_fraction = 1.0;  // keep the central fraction of what remains
  double noise_floor = 0.0;      // drop y <= floor_factor * noise_floor
  double floor_factor = 3.0;
  bool auto_floor = false;       // drop tail points whose local slope collapses
  double min_r_squared = 0.9;
};

namespace detail {

inline RateFit least_squares_loglog(const std::vector<double>& x, const std::vector<double>& y,
                                    const std::vector<int>& idx) {
  RateFit f;
  const int n = static_cast<int>(idx.size());
  double mx = 0, my = 0;
  for (int i : idx) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i : idx) {
    double dx = std::log(x[i]) - mx, dy = std::log(y[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) throw InconclusiveFit("fit_rate: degenerate x values");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (int i : idx) {
    double r = std::log(y[i]) - (f.intercept + f.slope * std::log(x[i]));
    ssr += r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  f.used = n;
  f.used_index = idx;
  double lo = x[idx[0]], hi = x[idx[0]];
  for (int i : idx) {
    lo = std::min(lo, x[i]);
    hi = std::max(hi, x[i]);
  }
  f.window_lo = lo;
  f.window_hi = hi;
  return f;
}

}  // namespace detail

/// Least squares on (log x, log y) after the window policy. Throws InconclusiveFit
/// with fewer than three usable pairs.
inline RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y, const WindowPolicy& pol = {}) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_rate: size mismatch");
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(x.size()); ++i)
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return x[a] > x[b]; });

  std::string note;
  int head = std::min<int>(pol.drop_head, order.size());
  order.erase(order.begin(), order.begin() + head);
  int tail = std::min<int>(pol.drop_tail, order.size());
  order.erase(order.end() - tail, order.end());
  if (pol.middle_fraction < 1.0 && !order.empty()) {
    int n = static_cast<int>(order.size());
    int keep = std::max(3, static_cast<int>(std::lround(pol.middle_fraction * n)));
    keep = std::min(keep, n);
    int off = (n - keep) / 2;
    order = std::vector<int>(order.begin() + off, order.begin() + off + keep);
  }
  if (pol.noise_floor > 0.0) {
    size_t before = order.size();
    std::erase_if(order, [&](int i) { return y[i] <= pol.floor_factor * pol.noise_floor; });
    if (order.size() != before) note += "dropped " + std::to_string(before - order.size()) + " floor point(s); ";
  }
  if (pol.auto_floor) {
    // walk toward small x; stop once the step slope falls below a quarter of the running fit slope
    while (order.size() > 3) {
      std::vector<int> body(order.begin(), order.end() - 1);
      RateFit f = detail::least_squares_loglog(x, y, body);
      int a = order[order.size() - 2], b = order.back();
      double step = std::log(y[a] / y[b]) / std::log(x[a] / x[b]);
      if (f.slope > 0.0 && step < 0.25 * f.slope) {
        order.pop_back();
        note += "dropped floor tail; ";
      } else {
        break;
      }
    }
  }
  if (order.size() < 3) throw InconclusiveFit("fit_rate: fewer than 3 usable pairs after windowing");
  RateFit f = detail::least_squares_loglog(x, y, order);
  f.note = note;
  if (f.r_squared < pol.min_r_squared) {
    f.flagged = true;
    f.note += "r^2 below threshold";
  }
  return f;
}

}  // namespace frontlab
