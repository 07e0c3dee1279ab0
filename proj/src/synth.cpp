#include "phonerec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "phonerec/corpus.hpp"
#include "phonerec/error.hpp"
#include "phonerec/labels.hpp"
#include "phonerec/rng.hpp"
#include "phonerec/wav.hpp"

namespace phonerec::cli {

namespace {

constexpr int kRate = 16000;
constexpr long long kUttSamples = 16000;  // exactly one second

struct ToneSpec {
  double f0;
};
struct BandSpec {
  double lo, hi;
};

const ToneSpec kTones[4] = {{220.0}, {440.0}, {880.0}, {1760.0}};
const BandSpec kBands[4] = {{2000.0, 3000.0}, {3500.0, 4500.0}, {5000.0, 6000.0}, {6500.0, 7500.0}};

void render_tone(std::vector<double>& out, long long start, long long len, double f0, double amp,
                 Rng& rng) {
  const double detune = 1.0 + rng.uniform(-0.03, 0.03);
  const double f = f0 * detune;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (long long i = 0; i < len; ++i) {
    const double t = static_cast<double>(i) / kRate;
    double v = std::sin(2.0 * std::numbers::pi * f * t + phase);
    v += 0.5 * std::sin(2.0 * std::numbers::pi * 2.0 * f * t + 1.7 * phase);
    v += 0.25 * std::sin(2.0 * std::numbers::pi * 3.0 * f * t + 2.3 * phase);
    out[static_cast<std::size_t>(start + i)] += amp * v / 1.75;
  }
}

void render_band_noise(std::vector<double>& out, long long start, long long len, double lo,
                       double hi, double amp, Rng& rng) {
  constexpr int kPartials = 40;
  double freqs[kPartials], phases[kPartials];
  for (int p = 0; p < kPartials; ++p) {
    freqs[p] = rng.uniform(lo, hi);
    phases[p] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  const double norm = amp / std::sqrt(static_cast<double>(kPartials) / 2.0);
  for (long long i = 0; i < len; ++i) {
    const double t = static_cast<double>(i) / kRate;
    double v = 0.0;
    for (int p = 0; p < kPartials; ++p) {
      v += std::sin(2.0 * std::numbers::pi * freqs[p] * t + phases[p]);
    }
    out[static_cast<std::size_t>(start + i)] += norm * v;
  }
}

void render_silence(std::vector<double>& out, long long start, long long len, Rng& rng) {
  for (long long i = 0; i < len; ++i) {
    out[static_cast<std::size_t>(start + i)] += 5e-4 * rng.uniform(-1.0, 1.0);
  }
}

// 5 ms cosine fade at both segment edges, applied to everything but silence.
void apply_ramp(std::vector<double>& out, long long start, long long len) {
  const long long ramp = std::min<long long>(80, len / 2);
  for (long long i = 0; i < ramp; ++i) {
    const double g = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / ramp));
    out[static_cast<std::size_t>(start + i)] *= g;
    out[static_cast<std::size_t>(start + len - 1 - i)] *= g;
  }
}

struct Segment {
  long long start, end;
  std::string label;
};

// Alternating sil/phone segments clipped to exactly one second.
std::vector<Segment> plan_segments(Rng& rng) {
  std::vector<Segment> segs;
  long long pos = 0;
  bool silence = true;
  while (pos < kUttSamples) {
    long long dur;
    std::string label;
    if (silence) {
      dur = static_cast<long long>(rng.uniform(0.040, 0.120) * kRate);
      label = kSilence;
    } else {
      dur = static_cast<long long>(rng.uniform(0.080, 0.300) * kRate);
      label = synthetic_phones()[static_cast<std::size_t>(rng.below(8))];
    }
    const long long end = std::min(pos + dur, kUttSamples);
    segs.push_back({pos, end, label});
    pos = end;
    silence = !silence;
  }
  return segs;
}

void write_phn(const std::filesystem::path& file, const std::vector<Segment>& segs) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  for (const auto& s : segs) out << s.start << ' ' << s.end << ' ' << s.label << '\n';
}

void write_split(const std::filesystem::path& root, const char* split, int n_utts, int spk_base,
                 std::uint64_t seed) {
  namespace fs = std::filesystem;
  const auto& phones = synthetic_phones();
  for (int u = 0; u < n_utts; ++u) {
    const int speaker = spk_base + u / 10;
    char spk_name[16], utt_name[16];
    std::snprintf(spk_name, sizeof spk_name, "spk%03d", speaker);
    std::snprintf(utt_name, sizeof utt_name, "u%04d", u);
    const fs::path dir = root / split / "dr1" / spk_name;
    fs::create_directories(dir);

    Rng rng(derive_seed(seed, std::string(split) + ".utt." + std::to_string(u)));
    const auto segs = plan_segments(rng);
    std::vector<double> samples(kUttSamples, 0.0);
    for (const auto& seg : segs) {
      const long long len = seg.end - seg.start;
      if (seg.label == kSilence) {
        render_silence(samples, seg.start, len, rng);
        continue;
      }
      const double amp = rng.uniform(0.2, 0.7);
      const auto it = std::find(phones.begin(), phones.end(), seg.label);
      const std::size_t idx = static_cast<std::size_t>(it - phones.begin());
      if (idx < 4) render_band_noise(samples, seg.start, len, kBands[idx].lo, kBands[idx].hi, amp, rng);
      else render_tone(samples, seg.start, len, kTones[idx - 4].f0, amp, rng);
      apply_ramp(samples, seg.start, len);
    }
    io::write_wav_pcm16(dir / (std::string(utt_name) + ".wav"), samples, kRate);
    write_phn(dir / (std::string(utt_name) + ".phn"), segs);
  }
}

}  // namespace

const std::vector<std::string>& synthetic_phones() {
  static const std::vector<std::string> phones = {"na", "nb", "nc", "nd", "ta", "tb", "tc", "td"};
  return phones;
}

void generate_synthetic_corpus(const SynthConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  std::ofstream fold(cfg.out_dir / "fold.txt");
  if (!fold) throw DataError("cannot write " + (cfg.out_dir / "fold.txt").string());
  fold << "# identity fold table for the synthetic corpus\n";
  for (const auto& p : synthetic_phones()) fold << p << ' ' << p << '\n';
  fold << kSilence << ' ' << kSilence << '\n';
  fold.close();

  std::ofstream tax(cfg.out_dir / "taxonomy.cfg");
  if (!tax) throw DataError("cannot write " + (cfg.out_dir / "taxonomy.cfg").string());
  tax << "# taxonomy for the synthetic corpus: noise bands vs harmonic tones\n"
         "node root: sil noise tone\n"
         "leaf sil: sil\n"
         "node noise: noise_low noise_high\n"
         "node noise_low: na nb\n"
         "leaf na: na\n"
         "leaf nb: nb\n"
         "node noise_high: nc nd\n"
         "leaf nc: nc\n"
         "leaf nd: nd\n"
         "node tone: tone_low tone_high\n"
         "node tone_low: ta tb\n"
         "leaf ta: ta\n"
         "leaf tb: tb\n"
         "node tone_high: tc td\n"
         "leaf tc: tc\n"
         "leaf td: td\n";
  tax.close();

  if (cfg.train_utts > 0) write_split(cfg.out_dir, "train", cfg.train_utts, 0, cfg.seed);
  if (cfg.test_utts > 0) write_split(cfg.out_dir, "test", cfg.test_utts, 100, cfg.seed);
}

}  // namespace phonerec::cli
