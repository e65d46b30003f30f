#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <complex>
#include <cstddef>
#include <vector>

namespace varma::detail {

inline Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Below this row count the direct triangular multiply wins over FFT setup.
inline constexpr Eigen::Index kFftRowThreshold = 64;

// Truncated causal convolution, one column: out[t] = sum_{s<=t} f[t-s] a[s],
// t = 0..T-1, with f of effective length m.
inline void conv_direct_col(const Eigen::VectorXd& f, Eigen::Index m,
                            const Eigen::Ref<const Eigen::VectorXd>& a,
                            Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index t_len = a.size();
  out.setZero();
  for (Eigen::Index s = 0; s < t_len; ++s) {
    const double as = a[s];
    if (as == 0.0) continue;
    const Eigen::Index len = std::min(m, t_len - s);
    out.segment(s, len) += as * f.head(len);
  }
}

// Column-wise truncated causal convolution of `series` with the columns of
// `a`, i.e. the action of the lower triangular Toeplitz matrix of `series`.
// Short inputs use the direct multiply; longer ones go through block FFT
// (overlap-add) with block size next_pow2(4 * effective_filter_length),
// degenerating to a single full-length block when the filter spans the data.
inline Eigen::MatrixXd conv_truncated(const Eigen::VectorXd& series,
                                      const Eigen::MatrixXd& a) {
  const Eigen::Index t_len = a.rows();
  const Eigen::Index cols = a.cols();
  Eigen::Index m = std::min<Eigen::Index>(series.size(), t_len);
  while (m > 0 && series[m - 1] == 0.0) --m;

  Eigen::MatrixXd out(t_len, cols);
  if (m == 0) {
    out.setZero();
    return out;
  }
  if (t_len < kFftRowThreshold || m <= 2) {
    for (Eigen::Index j = 0; j < cols; ++j)
      conv_direct_col(series, m, a.col(j), out.col(j));
    return out;
  }

  Eigen::Index nfft;
  Eigen::Index block_len;
  if (m > t_len / 4) {
    nfft = next_pow2(t_len + m - 1);
    block_len = t_len;
  } else {
    nfft = next_pow2(std::max<Eigen::Index>(4 * m, kFftRowThreshold));
    block_len = nfft - m + 1;
  }

  Eigen::FFT<double> fft;
  std::vector<double> pad(static_cast<std::size_t>(nfft), 0.0);
  for (Eigen::Index i = 0; i < m; ++i) pad[static_cast<std::size_t>(i)] = series[i];
  std::vector<std::complex<double>> fspec;
  fft.fwd(fspec, pad);

  std::vector<std::complex<double>> aspec;
  out.setZero();
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index start = 0; start < t_len; start += block_len) {
      const Eigen::Index len = std::min(block_len, t_len - start);
      std::fill(pad.begin(), pad.end(), 0.0);
      for (Eigen::Index i = 0; i < len; ++i)
        pad[static_cast<std::size_t>(i)] = a(start + i, j);
      fft.fwd(aspec, pad);
      for (Eigen::Index i = 0; i < nfft; ++i)
        aspec[static_cast<std::size_t>(i)] *= fspec[static_cast<std::size_t>(i)];
      fft.inv(pad, aspec);
      const Eigen::Index keep = std::min(nfft, t_len - start);
      for (Eigen::Index i = 0; i < keep; ++i)
        out(start + i, j) += pad[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

}  // namespace varma::detail
