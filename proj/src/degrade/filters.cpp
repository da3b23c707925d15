#include "degrade/filters.h"

#include <cmath>

#include "core/check.h"

namespace gsr {

std::vector<double> SosFilter::apply(const std::vector<double>& x) const {
  std::vector<double> y = x;
  for (const Biquad& s : sections) {
    double z1 = 0.0, z2 = 0.0;  // direct form II transposed state
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

double SosFilter::magnitude_at(double freq_hz, double sample_rate) const {
  const double w = 2.0 * M_PI * freq_hz / sample_rate;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h(1.0, 0.0);
  for (const Biquad& s : sections)
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return std::abs(h);
}

SosFilter design_lowpass(FilterFamily family, int order, double cutoff_hz,
                         double sample_rate, double ripple_db) {
  GSR_CHECK(order >= 1 && order <= 16, "filter order out of range");
  GSR_CHECK(cutoff_hz > 0 && cutoff_hz < sample_rate / 2.0,
            "cutoff " << cutoff_hz << " Hz outside (0, Nyquist)");

  using cd = std::complex<double>;
  const int n = order;

  // analog prototype poles (cutoff 1 rad/s) and DC gain
  std::vector<cd> apoles(static_cast<size_t>(n));
  double dc_gain = 1.0;
  if (family == FilterFamily::kButterworth) {
    for (int k = 0; k < n; ++k) {
      const double ang = M_PI * (2.0 * k + n + 1.0) / (2.0 * n);
      apoles[static_cast<size_t>(k)] = cd(std::cos(ang), std::sin(ang));
    }
  } else {
    GSR_CHECK(ripple_db > 0, "chebyshev ripple must be positive");
    const double eps = std::sqrt(std::pow(10.0, ripple_db / 10.0) - 1.0);
    const double mu = std::asinh(1.0 / eps) / n;
    for (int k = 0; k < n; ++k) {
      const double theta = M_PI * (2.0 * k + 1.0) / (2.0 * n);
      apoles[static_cast<size_t>(k)] =
          cd(-std::sinh(mu) * std::sin(theta), std::cosh(mu) * std::cos(theta));
    }
    if (n % 2 == 0) dc_gain = 1.0 / std::sqrt(1.0 + eps * eps);
  }

  // prewarped frequency scale, then bilinear transform z = (2fs + p)/(2fs - p)
  const double warped = 2.0 * sample_rate * std::tan(M_PI * cutoff_hz / sample_rate);
  std::vector<cd> zpoles(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const cd p = apoles[static_cast<size_t>(k)] * warped;
    zpoles[static_cast<size_t>(k)] = (2.0 * sample_rate + p) / (2.0 * sample_rate - p);
    GSR_CHECK(std::abs(zpoles[static_cast<size_t>(k)]) < 1.0,
              "designed filter is unstable (pole magnitude >= 1)");
  }

  // overall gain so that H(z=1) equals the prototype DC gain; zeros all at z=-1
  cd denom(1.0, 0.0);
  for (const cd& p : zpoles) denom *= (1.0 - p);
  const double k_gain = dc_gain * std::abs(denom) / std::pow(2.0, n);

  // pair conjugate poles into biquads; real pole (odd order) gets a 1st-order section
  SosFilter f;
  std::vector<cd> remaining = zpoles;
  bool first = true;
  // find the (single, for odd order) essentially-real pole
  for (size_t i = 0; i < remaining.size();) {
    if (std::fabs(remaining[i].imag()) < 1e-12) {
      Biquad s;
      s.b0 = 1.0;
      s.b1 = 1.0;  // zero at -1
      s.a1 = -remaining[i].real();
      f.sections.push_back(s);
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  for (size_t i = 0; i < remaining.size(); ++i) {
    if (remaining[i].imag() < 0) continue;  // take each conjugate pair once
    Biquad s;
    s.b0 = 1.0;
    s.b1 = 2.0;
    s.b2 = 1.0;  // double zero at -1
    s.a1 = -2.0 * remaining[i].real();
    s.a2 = std::norm(remaining[i]);
    f.sections.push_back(s);
  }
  (void)first;
  GSR_CHECK(!f.sections.empty(), "degenerate filter design");
  f.sections[0].b0 *= k_gain;
  f.sections[0].b1 *= k_gain;
  f.sections[0].b2 *= k_gain;
  return f;
}

}  // namespace gsr
