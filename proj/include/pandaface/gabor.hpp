#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "pandaface/error.hpp"
#include "pandaface/image.hpp"

namespace pandaface {

struct GaborParams {
  std::vector<double> wavelengths{4.0, 8.0, 12.0, 16.0};
  int num_orientations = 16;
  double sigma_ratio = 0.56;
  double aspect_ratio = 0.5;

  int num_scales() const { return static_cast<int>(wavelengths.size()); }

  void validate() const {
    if (wavelengths.empty()) throw Error(ErrorCode::ConfigError, "gabor needs at least one scale");
    for (std::size_t i = 0; i < wavelengths.size(); ++i) {
      if (!(wavelengths[i] > 0.0) || (i > 0 && !(wavelengths[i] > wavelengths[i - 1]))) {
        throw Error(ErrorCode::ConfigError, "gabor wavelengths must be positive and increasing");
      }
    }
    if (num_orientations < 2 || num_orientations % 2 != 0) {
      throw Error(ErrorCode::ConfigError, "gabor num_orientations must be even and >= 2");
    }
    if (!(sigma_ratio > 0.0)) throw Error(ErrorCode::ConfigError, "gabor sigma_ratio must be > 0");
    if (!(aspect_ratio > 0.0)) throw Error(ErrorCode::ConfigError, "gabor aspect_ratio must be > 0");
  }

  friend bool operator==(const GaborParams&, const GaborParams&) = default;
};

/// Complex Gabor kernel sampled on a (2·radius+1)² grid, row-major.
struct GaborKernel {
  int scale = 0;
  int orientation = 0;
  double wavelength = 0.0;
  double theta = 0.0;
  double sigma = 0.0;
  int radius = 0;
  std::vector<std::complex<double>> values;

  int side() const { return 2 * radius + 1; }
  std::complex<double> at(int dx, int dy) const {
    return values[static_cast<std::size_t>(dy + radius) * side() + (dx + radius)];
  }
};

namespace detail {

inline int next_fast_size(int n) {
  for (int m = n;; ++m) {
    int r = m;
    for (int f : {2, 3, 5, 7}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return m;
  }
}

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Forward/backward plans plus the kernel spectra for one padded size.
struct SpectrumSet {
  int padded_w = 0;
  int padded_h = 0;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  // Indexed [orientation * num_scales + scale] over the first half of the
  // orientations only.
  std::vector<std::vector<std::complex<double>>> spectra;

  SpectrumSet() = default;
  SpectrumSet(const SpectrumSet&) = delete;
  SpectrumSet& operator=(const SpectrumSet&) = delete;
  ~SpectrumSet() {
    std::lock_guard lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

inline fftw_complex* as_fftw(std::vector<std::complex<double>>& v) {
  return reinterpret_cast<fftw_complex*>(v.data());
}

struct SpectrumCache {
  std::mutex mutex;
  std::map<std::pair<int, int>, std::shared_ptr<const SpectrumSet>> by_size;
};

}  // namespace detail

/// num_scales × num_orientations complex filters, θ_r = 2πr / num_orientations.
///
/// Each kernel is a complex carrier of wavelength λ_m along θ_r under an
/// elliptical Gaussian (σ_m = sigma_ratio·λ_m, aspect γ), truncated at 3σ_m,
/// with the real and imaginary means removed and unit L2 norm. The filter at
/// r + R/2 is built as the exact complex conjugate of the filter at r, which is
/// what rotating θ by π produces analytically.
class GaborBank {
 public:
  explicit GaborBank(GaborParams params)
      : params_(std::move(params)), cache_(std::make_shared<detail::SpectrumCache>()) {
    params_.validate();
    const int R = params_.num_orientations;
    const int M = params_.num_scales();
    filters_.resize(static_cast<std::size_t>(R) * M);
    for (int m = 0; m < M; ++m) {
      for (int r = 0; r < R / 2; ++r) {
        GaborKernel k = make_kernel(m, r);
        GaborKernel opposite = k;
        opposite.orientation = r + R / 2;
        opposite.theta = k.theta + std::numbers::pi;
        for (auto& v : opposite.values) v = std::conj(v);
        max_radius_ = std::max(max_radius_, k.radius);
        filters_[index(m, r)] = std::move(k);
        filters_[index(m, r + R / 2)] = std::move(opposite);
      }
    }
  }

  const GaborParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return filters_.size(); }
  int max_radius() const noexcept { return max_radius_; }
  const std::vector<GaborKernel>& filters() const noexcept { return filters_; }
  const GaborKernel& filter(int scale, int orientation) const {
    return filters_[index(scale, orientation)];
  }

  /// Plans and kernel spectra for a padded FFT size, built on first use.
  std::shared_ptr<const detail::SpectrumSet> spectra_for(int padded_w, int padded_h) const {
    std::lock_guard lock(cache_->mutex);
    auto& slot = cache_->by_size[{padded_w, padded_h}];
    if (!slot) slot = build_spectra(padded_w, padded_h);
    return slot;
  }

 private:
  std::size_t index(int m, int r) const {
    return static_cast<std::size_t>(m) * params_.num_orientations + r;
  }

  GaborKernel make_kernel(int m, int r) const {
    GaborKernel k;
    k.scale = m;
    k.orientation = r;
    k.wavelength = params_.wavelengths[m];
    k.theta = 2.0 * std::numbers::pi * r / params_.num_orientations;
    k.sigma = params_.sigma_ratio * k.wavelength;
    k.radius = static_cast<int>(std::ceil(3.0 * k.sigma));
    const double gamma2 = params_.aspect_ratio * params_.aspect_ratio;
    const double c = std::cos(k.theta);
    const double s = std::sin(k.theta);
    const int side = k.side();
    k.values.resize(static_cast<std::size_t>(side) * side);

    std::complex<double> mean{0.0, 0.0};
    for (int dy = -k.radius; dy <= k.radius; ++dy) {
      for (int dx = -k.radius; dx <= k.radius; ++dx) {
        const double xr = dx * c + dy * s;
        const double yr = -dx * s + dy * c;
        const double envelope = std::exp(-(xr * xr + gamma2 * yr * yr) / (2.0 * k.sigma * k.sigma));
        const double phase = 2.0 * std::numbers::pi * xr / k.wavelength;
        const std::complex<double> v = envelope * std::complex<double>(std::cos(phase), std::sin(phase));
        k.values[static_cast<std::size_t>(dy + k.radius) * side + (dx + k.radius)] = v;
        mean += v;
      }
    }
    mean /= static_cast<double>(k.values.size());
    double energy = 0.0;
    for (auto& v : k.values) {
      v -= mean;
      energy += std::norm(v);
    }
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& v : k.values) v *= scale;
    return k;
  }

  std::shared_ptr<const detail::SpectrumSet> build_spectra(int pw, int ph) const {
    auto set = std::make_shared<detail::SpectrumSet>();
    set->padded_w = pw;
    set->padded_h = ph;
    const std::size_t n = static_cast<std::size_t>(pw) * ph;
    std::vector<std::complex<double>> in(n), out(n);
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
      set->forward = fftw_plan_dft_2d(ph, pw, detail::as_fftw(in), detail::as_fftw(out),
                                      FFTW_FORWARD, flags);
      set->backward = fftw_plan_dft_2d(ph, pw, detail::as_fftw(in), detail::as_fftw(out),
                                       FFTW_BACKWARD, flags);
    }
    if (!set->forward || !set->backward) throw Error(ErrorCode::InvalidArgument, "fftw planning failed");

    const int R = params_.num_orientations;
    for (int r = 0; r < R / 2; ++r) {
      for (int m = 0; m < params_.num_scales(); ++m) {
        const GaborKernel& k = filter(m, r);
        std::fill(in.begin(), in.end(), std::complex<double>{});
        for (int dy = -k.radius; dy <= k.radius; ++dy) {
          const int row = ((dy % ph) + ph) % ph;
          for (int dx = -k.radius; dx <= k.radius; ++dx) {
            const int col = ((dx % pw) + pw) % pw;
            in[static_cast<std::size_t>(row) * pw + col] = k.at(dx, dy);
          }
        }
        fftw_execute_dft(set->forward, detail::as_fftw(in), detail::as_fftw(out));
        set->spectra.push_back(out);
      }
    }
    return set;
  }

  GaborParams params_;
  std::vector<GaborKernel> filters_;
  int max_radius_ = 0;
  std::shared_ptr<detail::SpectrumCache> cache_;
};

inline GaborBank build_gabor_bank(const GaborParams& params) { return GaborBank(params); }

/// Per-pixel orientation index of the strongest filter response.
struct OrientationField {
  int width = 0;
  int height = 0;
  int num_orientations = 0;
  std::vector<std::uint8_t> index;

  int at(int x, int y) const { return index[static_cast<std::size_t>(y) * width + x]; }
};

/// Response magnitudes at or below this are treated as no response.
inline constexpr double kGaborResponseFloor = 1e-9;

/// Convolves `img` (replicate padding) with every filter and keeps, per pixel,
/// the orientation index of the maximal complex magnitude over all scales and
/// orientations. Ties go to the smallest orientation, then the smallest scale.
///
/// Filters r and r + R/2 are conjugates, so on a real image their magnitudes
/// are identical; only the first half is convolved and the tie rule always
/// resolves such pairs to the lower index.
inline OrientationField gabor_orientation_field(const GrayImage& img, const GaborBank& bank) {
  const int kernel_side = 2 * bank.max_radius() + 1;
  const int w = img.width();
  const int h = img.height();
  if (w < kernel_side || h < kernel_side) {
    throw Error(ErrorCode::ImageTooSmall, "image smaller than the largest Gabor kernel (" +
                                              std::to_string(kernel_side) + " px)");
  }
  const int pad = bank.max_radius();
  const int pw = detail::next_fast_size(w + 2 * pad);
  const int ph = detail::next_fast_size(h + 2 * pad);
  const auto spectra = bank.spectra_for(pw, ph);

  // Kernels are zero-mean, so subtracting the minimum changes nothing
  // analytically; it makes constant images exactly zero and keeps integer
  // offsets of the input from perturbing the rounding.
  const double offset = *std::min_element(img.data().begin(), img.data().end());
  const std::size_t n = static_cast<std::size_t>(pw) * ph;
  std::vector<std::complex<double>> buffer(n), image_spectrum(n);
  for (int v = 0; v < ph; ++v) {
    const int sy = std::clamp(v - pad, 0, h - 1);
    for (int u = 0; u < pw; ++u) {
      const int sx = std::clamp(u - pad, 0, w - 1);
      buffer[static_cast<std::size_t>(v) * pw + u] = img.at(sx, sy) - offset;
    }
  }
  fftw_execute_dft(spectra->forward, detail::as_fftw(buffer), detail::as_fftw(image_spectrum));

  OrientationField field{w, h, bank.params().num_orientations,
                         std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0)};
  // Compared as squared magnitudes; the unnormalised inverse transform is
  // n times the convolution.
  const double scale = static_cast<double>(n);
  std::vector<double> best(static_cast<std::size_t>(w) * h,
                           kGaborResponseFloor * kGaborResponseFloor * scale * scale);
  std::vector<std::complex<double>> product(n);
  const int half = bank.params().num_orientations / 2;
  const int scales = bank.params().num_scales();
  for (int r = 0; r < half; ++r) {
    for (int m = 0; m < scales; ++m) {
      const auto& kernel = spectra->spectra[static_cast<std::size_t>(r) * scales + m];
      for (std::size_t i = 0; i < n; ++i) {
        // Written out: operator* on std::complex goes through the NaN-aware
        // __muldc3 path without -ffast-math.
        const double a = image_spectrum[i].real(), b = image_spectrum[i].imag();
        const double c = kernel[i].real(), d = kernel[i].imag();
        product[i] = {a * c - b * d, a * d + b * c};
      }
      fftw_execute_dft(spectra->backward, detail::as_fftw(product), detail::as_fftw(buffer));
      for (int y = 0; y < h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y + pad) * pw + pad;
        for (int x = 0; x < w; ++x) {
          const double mag = std::norm(buffer[row + x]);
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          if (mag > best[p]) {
            best[p] = mag;
            field.index[p] = static_cast<std::uint8_t>(r);
          }
        }
      }
    }
  }
  return field;
}

}  // namespace pandaface
