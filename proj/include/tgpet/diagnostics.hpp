#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "tgpet/grid.hpp"
#include "tgpet/kl_basis.hpp"
#include "tgpet/reparam.hpp"
#include "tgpet/samplers.hpp"

namespace tgpet {

/// Biased sample autocorrelation up to max_lag (lag 0 = 1). A constant
/// series is reported as 1 at every lag; `degenerate` flags that case.
struct AcfResult {
  std::vector<double> values;
  bool degenerate = false;
};

template <typename Derived>
AcfResult acf(const Eigen::DenseBase<Derived>& series, Index max_lag) {
  const Index n = series.size();
  if (n == 0) throw std::invalid_argument("acf: empty series");
  if (max_lag < 0 || max_lag >= n)
    throw std::invalid_argument("acf: max_lag " + std::to_string(max_lag) + " must be < length " +
                                std::to_string(n));
  const Eigen::ArrayXd x = series.derived().template cast<double>().array();
  const Eigen::ArrayXd c = x - x.mean();
  const double c0 = c.square().sum() / static_cast<double>(n);
  AcfResult r;
  r.values.assign(static_cast<std::size_t>(max_lag + 1), 1.0);
  if (!(c0 > 0.0)) {
    r.degenerate = true;
    return r;
  }
  for (Index k = 1; k <= max_lag; ++k)
    r.values[static_cast<std::size_t>(k)] =
        (c.head(n - k) * c.tail(n - k)).sum() / static_cast<double>(n) / c0;
  return r;
}

/// Full biased autocorrelation via zero-padded FFT.
inline std::vector<double> acf_fft(const Eigen::ArrayXd& x) {
  const Index n = x.size();
  Index m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<double> buf(static_cast<std::size_t>(m), 0.0);
  const double mean = x.mean();
  for (Index i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = x(i) - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, buf);
  for (auto& s : spec) s = std::complex<double>(std::norm(s), 0.0);
  std::vector<double> ac;
  fft.inv(ac, spec);
  std::vector<double> out(static_cast<std::size_t>(n));
  const double c0 = ac[0];
  for (Index k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = c0 > 0 ? ac[static_cast<std::size_t>(k)] / c0 : 1.0;
  return out;
}

/// Integrated autocorrelation time, summing the ACF from lag 1 up to (not
/// including) the first negative lag.
inline double integrated_autocorr_time(const std::vector<double>& rho) {
  double tau = 0.0;
  for (std::size_t k = 1; k < rho.size(); ++k) {
    if (rho[k] < 0.0) break;
    tau += rho[k];
  }
  return tau;
}

inline double ess_from_tau(Index n, double tau) { return static_cast<double>(n) / (1.0 + 2.0 * tau); }

/// ESS = n / (1 + 2 tau).
template <typename Derived>
double ess(const Eigen::DenseBase<Derived>& series) {
  const Index n = series.size();
  if (n < 2) throw std::invalid_argument("ess: need at least two samples");
  const Eigen::ArrayXd x = series.derived().template cast<double>().array();
  if (!((x - x.mean()).square().sum() > 0.0)) throw std::domain_error("ess: series has zero variance");
  return ess_from_tau(n, integrated_autocorr_time(acf_fft(x)));
}

/// Image-space trace: row p holds pixel p of u = f(z) for every stored
/// sample (columns).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pixel_series(
    const Chain<Scalar>& chain, const KLBasis<Scalar>& basis, const Reparam& rep) {
  if (chain.size() == 0) throw std::invalid_argument("pixel_series: empty chain");
  const Index p = basis.grid().size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(p, chain.size());
  for (Index s = 0; s < chain.size(); ++s)
    out.col(s) = reparam_apply(rep, synthesize(basis, chain.sample(s))).flat();
  return out;
}

/// Pixelwise posterior mean of u = f(z).
template <typename Scalar>
ScalarField<Scalar> posterior_mean(const Chain<Scalar>& chain, const KLBasis<Scalar>& basis,
                                   const Reparam& rep) {
  if (chain.size() == 0) throw std::invalid_argument("posterior_mean: empty chain");
  ScalarField<Scalar> acc(basis.grid());
  for (Index s = 0; s < chain.size(); ++s)
    acc.values += reparam_apply(rep, synthesize(basis, chain.sample(s))).values;
  acc.values /= static_cast<Scalar>(chain.size());
  return acc;
}

/// Start of the narrowest window of m consecutive order statistics
/// (first one on ties).
template <typename Scalar>
Index narrowest_window(const std::vector<Scalar>& sorted, Index m) {
  const Index n = static_cast<Index>(sorted.size());
  if (m < 1 || m > n) throw std::invalid_argument("narrowest_window: bad window size");
  Index best = 0;
  Scalar width = sorted[static_cast<std::size_t>(m - 1)] - sorted[0];
  for (Index s = 1; s + m <= n; ++s) {
    const Scalar w = sorted[static_cast<std::size_t>(s + m - 1)] - sorted[static_cast<std::size_t>(s)];
    if (w < width) {
      width = w;
      best = s;
    }
  }
  return best;
}

inline Index hpdi_window_size(Index n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("hpdi: alpha=" + std::to_string(alpha) + " outside (0, 1)");
  const Index m = static_cast<Index>(std::ceil((1.0 - alpha) * static_cast<double>(n) - 1e-9));
  return std::clamp<Index>(m, 1, n);
}

/// 100(1 - alpha)% HPDI of a sample set.
template <typename Scalar>
std::pair<Scalar, Scalar> sample_hpdi(std::vector<Scalar> values, double alpha) {
  if (values.empty()) throw std::invalid_argument("hpdi: no samples");
  std::sort(values.begin(), values.end());
  const Index m = hpdi_window_size(static_cast<Index>(values.size()), alpha);
  const Index s = narrowest_window(values, m);
  return {values[static_cast<std::size_t>(s)], values[static_cast<std::size_t>(s + m - 1)]};
}

template <typename Scalar = double>
struct HpdiFields {
  ScalarField<Scalar> lo;
  ScalarField<Scalar> hi;
  ScalarField<Scalar> width() const { return hi - lo; }
};

/// Pixelwise HPDI of u = f(z).
template <typename Scalar>
HpdiFields<Scalar> pointwise_hpdi(const Chain<Scalar>& chain, const KLBasis<Scalar>& basis,
                                  const Reparam& rep, double alpha) {
  hpdi_window_size(1, alpha);
  const auto series = pixel_series(chain, basis, rep);
  HpdiFields<Scalar> out{ScalarField<Scalar>(basis.grid()), ScalarField<Scalar>(basis.grid())};
  std::vector<Scalar> buf(static_cast<std::size_t>(series.cols()));
  for (Index p = 0; p < series.rows(); ++p) {
    for (Index s = 0; s < series.cols(); ++s) buf[static_cast<std::size_t>(s)] = series(p, s);
    const auto [lo, hi] = sample_hpdi(buf, alpha);
    out.lo.flat()(p) = lo;
    out.hi.flat()(p) = hi;
  }
  return out;
}

/// Pixelwise ESS of u = f(z); pixels with zero variance get NaN.
template <typename Scalar>
ScalarField<double> pixel_ess(const Chain<Scalar>& chain, const KLBasis<Scalar>& basis, const Reparam& rep) {
  const auto series = pixel_series(chain, basis, rep);
  ScalarField<double> out(basis.grid());
  for (Index p = 0; p < series.rows(); ++p) {
    try {
      out.flat()(p) = ess(series.row(p));
    } catch (const std::domain_error&) {
      out.flat()(p) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

inline double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) throw std::invalid_argument("median: no finite values");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid - 1), v.end());
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

}  // namespace tgpet
