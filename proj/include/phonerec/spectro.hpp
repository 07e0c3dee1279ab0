#pragma once

#include <span>
#include <string>
#include <vector>

#include "phonerec/corpus.hpp"
#include "phonerec/matrix.hpp"

namespace phonerec::spectro {

struct SpectroConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int sub_window_samples = 80;  // one image column per sub-window
  int sub_hop_samples = 80;
  int fft_size = 256;  // power of two, yields fft_size/2 frequency rows
  int image_rows = 128;
  int image_cols = 5;
  double log_floor = 1e-10;

  void validate() const;
  long long window_samples(int sample_rate_hz) const;
  long long hop_samples(int sample_rate_hz) const;
};

struct FramePlan {
  std::vector<long long> frame_starts;
  long long window_samples = 0;
  long long last_frame_extent = 0;  // >= window_samples; tail samples are squeezed in

  std::size_t frame_count() const { return frame_starts.size(); }
  long long frame_extent(std::size_t i) const {
    return i + 1 == frame_starts.size() ? last_frame_extent : window_samples;
  }
};

struct FrameImage {
  Matrix pixels;      // image_rows x image_cols, low frequency in row 0
  std::string label;  // empty until labeled
};

// Constant-hop frame grid; any tail shorter than one window extends the final
// frame's extent instead of producing a partial frame.
FramePlan plan_frames(long long num_samples, const SpectroConfig& cfg, int sample_rate_hz);

// w[i] = 0.5 * (1 - cos(2*pi*i/(n-1))), n >= 2
std::vector<double> hann_window(int n);

// Magnitudes of the first fft_size/2 DFT bins; input is zero-padded.
std::vector<double> fft_magnitude(std::span<const double> samples, int fft_size);

// Corner-aligned bilinear interpolation to exactly rows x cols.
Matrix resize_bilinear(const Matrix& src, int rows, int cols);

// Renders one frame: Hann-weighted sub-window FFTs as columns, log magnitude,
// resized to image_rows x image_cols. Not yet normalized; no label attached.
FrameImage frame_to_image(std::span<const double> samples, const SpectroConfig& cfg);

// Full utterance pipeline: plan, render, per-utterance min-max normalization
// to [0,1], labels attached from the utterance's segments.
std::vector<FrameImage> extract_frame_images(const corpus::Utterance& utt,
                                             const SpectroConfig& cfg);

// Reference implementation of the same pipeline without the parallel loop;
// kept for equivalence tests and the kernel benchmark.
std::vector<FrameImage> extract_frame_images_serial(const corpus::Utterance& utt,
                                                    const SpectroConfig& cfg);

// Unlabeled variant for prediction on raw audio.
std::vector<FrameImage> extract_frame_images_unlabeled(std::span<const double> samples,
                                                       int sample_rate_hz,
                                                       const SpectroConfig& cfg);

}  // namespace phonerec::spectro
