#include "phonerec/spectro.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "phonerec/error.hpp"
#include "phonerec/parallel.hpp"

namespace phonerec::spectro {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place.
void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Raw log-spectrogram for one frame extent, image_rows x n_sub_windows.
Matrix frame_log_image(std::span<const double> samples, const SpectroConfig& cfg) {
  const long long extent = static_cast<long long>(samples.size());
  if (extent < cfg.sub_window_samples) {
    throw DataError("frame shorter than one sub-window (" + std::to_string(extent) + " < " +
                    std::to_string(cfg.sub_window_samples) + " samples)");
  }
  const long long n_cols = (extent - cfg.sub_window_samples) / cfg.sub_hop_samples + 1;
  const int n_bins = cfg.fft_size / 2;
  const auto window = hann_window(cfg.sub_window_samples);

  Matrix raw(static_cast<std::size_t>(n_bins), static_cast<std::size_t>(n_cols));
  std::vector<double> weighted(static_cast<std::size_t>(cfg.sub_window_samples));
  for (long long c = 0; c < n_cols; ++c) {
    const double* src = samples.data() + c * cfg.sub_hop_samples;
    for (int i = 0; i < cfg.sub_window_samples; ++i) weighted[static_cast<std::size_t>(i)] = src[i] * window[static_cast<std::size_t>(i)];
    const auto mags = fft_magnitude(weighted, cfg.fft_size);
    for (int b = 0; b < n_bins; ++b) {
      raw(static_cast<std::size_t>(b), static_cast<std::size_t>(c)) = std::log(mags[static_cast<std::size_t>(b)] + cfg.log_floor);
    }
  }
  return raw;
}

void normalize_images(std::vector<FrameImage>& images) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& img : images) {
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      lo = std::min(lo, img.pixels.data()[i]);
      hi = std::max(hi, img.pixels.data()[i]);
    }
  }
  const double range = hi - lo;
  for (auto& img : images) {
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      double& px = img.pixels.data()[i];
      px = range > 0.0 ? (px - lo) / range : 0.0;
    }
  }
}

template <bool Parallel>
std::vector<FrameImage> extract_impl(const corpus::Utterance& utt, const SpectroConfig& cfg) {
  cfg.validate();
  const auto plan = plan_frames(static_cast<long long>(utt.samples.size()), cfg, utt.sample_rate_hz);
  std::vector<FrameImage> images(plan.frame_count());
  auto render = [&](std::size_t f) {
    const long long start = plan.frame_starts[f];
    const long long extent = plan.frame_extent(f);
    images[f] = frame_to_image({utt.samples.data() + start, static_cast<std::size_t>(extent)}, cfg);
  };
  if constexpr (Parallel) {
    parallel_for(plan.frame_count(), render);
  } else {
    for (std::size_t f = 0; f < plan.frame_count(); ++f) render(f);
  }
  normalize_images(images);
  if (!utt.segments.empty()) {
    const auto labels = corpus::label_frames(utt.segments, plan);
    for (std::size_t f = 0; f < images.size(); ++f) images[f].label = labels[f];
  }
  return images;
}

}  // namespace

void SpectroConfig::validate() const {
  if (!is_power_of_two(fft_size)) {
    throw ConfigError("fft_size must be a power of two, got " + std::to_string(fft_size));
  }
  if (fft_size < sub_window_samples) {
    throw ConfigError("fft_size must be >= sub_window_samples");
  }
  if (image_rows <= 0 || image_cols <= 0) throw ConfigError("image dimensions must be positive");
  if (sub_window_samples < 2 || sub_hop_samples < 1) {
    throw ConfigError("sub-window geometry must be positive");
  }
  if (window_ms <= 0.0 || hop_ms <= 0.0) throw ConfigError("window and hop must be positive");
}

long long SpectroConfig::window_samples(int sample_rate_hz) const {
  return std::llround(window_ms * sample_rate_hz / 1000.0);
}

long long SpectroConfig::hop_samples(int sample_rate_hz) const {
  return std::llround(hop_ms * sample_rate_hz / 1000.0);
}

FramePlan plan_frames(long long num_samples, const SpectroConfig& cfg, int sample_rate_hz) {
  if (sample_rate_hz <= 0) throw DataError("sample rate must be positive");
  const long long window = cfg.window_samples(sample_rate_hz);
  const long long hop = cfg.hop_samples(sample_rate_hz);
  if (window < 2 || hop < 1) throw ConfigError("degenerate window/hop");
  if (num_samples < window) {
    throw DataError("utterance shorter than one analysis window (" + std::to_string(num_samples) +
                    " < " + std::to_string(window) + " samples)");
  }
  const long long n = (num_samples - window) / hop + 1;
  FramePlan plan;
  plan.window_samples = window;
  plan.frame_starts.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) plan.frame_starts.push_back(i * hop);
  plan.last_frame_extent = num_samples - plan.frame_starts.back();
  return plan;
}

std::vector<double> hann_window(int n) {
  if (n < 2) throw ConfigError("hann_window needs n >= 2");
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
  }
  return w;
}

std::vector<double> fft_magnitude(std::span<const double> samples, int fft_size) {
  if (!is_power_of_two(fft_size)) {
    throw ConfigError("fft_size must be a power of two, got " + std::to_string(fft_size));
  }
  if (samples.size() > static_cast<std::size_t>(fft_size)) {
    throw DataError("fft_magnitude: input longer than fft_size");
  }
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(fft_size), {0.0, 0.0});
  for (std::size_t i = 0; i < samples.size(); ++i) buf[i] = {samples[i], 0.0};
  fft_inplace(buf);
  std::vector<double> mags(static_cast<std::size_t>(fft_size / 2));
  for (int b = 0; b < fft_size / 2; ++b) mags[static_cast<std::size_t>(b)] = std::abs(buf[static_cast<std::size_t>(b)]);
  return mags;
}

Matrix resize_bilinear(const Matrix& src, int rows, int cols) {
  if (rows < 1 || cols < 1) throw ConfigError("resize target must be at least 1x1");
  if (src.rows() < 1 || src.cols() < 1) throw DataError("resize source is empty");
  const std::size_t out_r = static_cast<std::size_t>(rows), out_c = static_cast<std::size_t>(cols);
  Matrix dst(out_r, out_c);
  const double row_scale =
      out_r > 1 ? static_cast<double>(src.rows() - 1) / static_cast<double>(out_r - 1) : 0.0;
  const double col_scale =
      out_c > 1 ? static_cast<double>(src.cols() - 1) / static_cast<double>(out_c - 1) : 0.0;
  for (std::size_t r = 0; r < out_r; ++r) {
    const double sr = static_cast<double>(r) * row_scale;
    const std::size_t r0 = static_cast<std::size_t>(sr);
    const std::size_t r1 = std::min(r0 + 1, src.rows() - 1);
    const double fr = sr - static_cast<double>(r0);
    for (std::size_t c = 0; c < out_c; ++c) {
      const double sc = static_cast<double>(c) * col_scale;
      const std::size_t c0 = static_cast<std::size_t>(sc);
      const std::size_t c1 = std::min(c0 + 1, src.cols() - 1);
      const double fc = sc - static_cast<double>(c0);
      const double top = src(r0, c0) * (1.0 - fc) + src(r0, c1) * fc;
      const double bot = src(r1, c0) * (1.0 - fc) + src(r1, c1) * fc;
      dst(r, c) = top * (1.0 - fr) + bot * fr;
    }
  }
  return dst;
}

FrameImage frame_to_image(std::span<const double> samples, const SpectroConfig& cfg) {
  const Matrix raw = frame_log_image(samples, cfg);
  FrameImage img;
  if (raw.rows() == static_cast<std::size_t>(cfg.image_rows) &&
      raw.cols() == static_cast<std::size_t>(cfg.image_cols)) {
    img.pixels = raw;
  } else {
    img.pixels = resize_bilinear(raw, cfg.image_rows, cfg.image_cols);
  }
  return img;
}

std::vector<FrameImage> extract_frame_images(const corpus::Utterance& utt,
                                             const SpectroConfig& cfg) {
  return extract_impl<true>(utt, cfg);
}

std::vector<FrameImage> extract_frame_images_serial(const corpus::Utterance& utt,
                                                    const SpectroConfig& cfg) {
  return extract_impl<false>(utt, cfg);
}

std::vector<FrameImage> extract_frame_images_unlabeled(std::span<const double> samples,
                                                       int sample_rate_hz,
                                                       const SpectroConfig& cfg) {
  corpus::Utterance utt;
  utt.samples.assign(samples.begin(), samples.end());
  utt.sample_rate_hz = sample_rate_hz;
  return extract_impl<true>(utt, cfg);
}

}  // namespace phonerec::spectro
