#pragma once

#include <array>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "frontlab/core.hpp"

namespace frontlab {

using cplx = std::complex<double>;

/// Trigonometric interpolant of M equispaced samples on [0,1).
/// Even M: the Nyquist mode is split symmetrically so real data stay real.
class TrigInterpolant {
 public:
  TrigInterpolant() = default;

  explicit TrigInterpolant(const std::vector<cplx>& samples) { build(samples); }

  explicit TrigInterpolant(const std::vector<double>& samples) {
    std::vector<cplx> c(samples.begin(), samples.end());
    build(c);
  }

  int size() const { return m_; }

  /// d^order/ds^order of the interpolant at s.
  cplx eval(double s, int order = 0) const {
    std::array<cplx, 1> out;
    eval_many(s, order, out.data(), 1);
    return out[0];
  }

  /// Derivatives 0..count-1 at s in one pass.
  void eval_many(double s, int first_order, cplx* out, int count) const {
    for (int d = 0; d < count; ++d) out[d] = 0.0;
    const double th = 2.0 * pi * s;
    for (int idx = 0; idx < static_cast<int>(k_.size()); ++idx) {
      const int k = k_[idx];
      const cplx e = std::polar(1.0, th * k);
      const cplx ik(0.0, 2.0 * pi * k);
      cplx fac = coef_[idx] * e;
      for (int d = 0; d < first_order; ++d) fac *= ik;
      for (int d = 0; d < count; ++d) {
        out[d] += fac;
        fac *= ik;
      }
    }
  }

  /// Spectral derivative sampled back on the nodes.
  std::vector<cplx> node_derivative(int order) const {
    std::vector<cplx> spec(m_, 0.0);
    for (int idx = 0; idx < static_cast<int>(k_.size()); ++idx) {
      const int k = k_[idx];
      cplx f = coef_[idx];
      const cplx ik(0.0, 2.0 * pi * k);
      for (int d = 0; d < order; ++d) f *= ik;
      spec[((k % m_) + m_) % m_] += f * static_cast<double>(m_);
    }
    std::vector<cplx> out;
    Eigen::FFT<double> fft;
    fft.inv(out, spec);
    return out;
  }

  /// Samples of the order-th derivative on a finer equispaced grid of n >= size() points.
  std::vector<cplx> oversample(int n, int order = 0) const {
    std::vector<cplx> spec(n, 0.0);
    for (int idx = 0; idx < static_cast<int>(k_.size()); ++idx) {
      const int k = k_[idx];
      cplx f = coef_[idx];
      const cplx ik(0.0, 2.0 * pi * k);
      for (int d = 0; d < order; ++d) f *= ik;
      spec[((k % n) + n) % n] += f * static_cast<double>(n);
    }
    std::vector<cplx> out;
    Eigen::FFT<double> fft;
    fft.inv(out, spec);
    return out;
  }

  /// Drop modes with |c_k| below tol * max|c_k|.
  void truncate(double tol) {
    double cmax = 0.0;
    for (const auto& c : coef_) cmax = std::max(cmax, std::abs(c));
    std::vector<int> k;
    std::vector<cplx> c;
    for (size_t i = 0; i < k_.size(); ++i)
      if (std::abs(coef_[i]) > tol * cmax) {
        k.push_back(k_[i]);
        c.push_back(coef_[i]);
      }
    k_ = std::move(k);
    coef_ = std::move(c);
  }

  /// Fourier coefficient list (k, c_k), Nyquist split in two entries.
  const std::vector<int>& wavenumbers() const { return k_; }
  const std::vector<cplx>& coefficients() const { return coef_; }

 private:
  void build(const std::vector<cplx>& samples) {
    m_ = static_cast<int>(samples.size());
    if (m_ < 1) throw std::invalid_argument("TrigInterpolant: empty sample set");
    std::vector<cplx> in(samples), spec;
    Eigen::FFT<double> fft;
    fft.fwd(spec, in);
    k_.clear();
    coef_.clear();
    const int half = m_ / 2;
    for (int j = 0; j < m_; ++j) {
      cplx c = spec[j] / static_cast<double>(m_);
      if (m_ % 2 == 0 && j == half) {
        k_.push_back(half);
        coef_.push_back(0.5 * c);
        k_.push_back(-half);
        coef_.push_back(0.5 * c);
      } else {
        k_.push_back(j <= half ? j : j - m_);
        coef_.push_back(c);
      }
    }
  }

  int m_ = 0;
  std::vector<int> k_;
  std::vector<cplx> coef_;
};

/// Spectral derivative of real periodic node data.
inline std::vector<double> spectral_derivative(const std::vector<double>& v, int order = 1) {
  TrigInterpolant t(v);
  auto d = t.node_derivative(order);
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = d[i].real();
  return out;
}

/// Periodic trapezoid mean of node data (exact integral over [0,1) of the interpolant).
inline double periodic_mean(const std::vector<double>& v) {
  CompensatedSum<double> acc;
  for (double x : v) acc.add(x);
  return acc.value() / static_cast<double>(v.size());
}

}  // namespace frontlab
