#include "ve/dsp.hpp"

#include <cmath>
#include <stdexcept>

namespace ve {

namespace {

bool is_pow2(size_t n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_core(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (!is_pow2(n)) throw std::invalid_argument("fft length must be a power of two");

  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

void fft(std::vector<std::complex<double>>& buf) { fft_core(buf, false); }
void ifft(std::vector<std::complex<double>>& buf) { fft_core(buf, true); }

std::vector<double> convolve_direct(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i) {
    double ai = a[i];
    if (ai == 0.0) continue;
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += ai * b[j];
  }
  return out;
}

std::vector<double> convolve_fft(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  const size_t out_len = a.size() + b.size() - 1;
  const size_t n = next_pow2(out_len);
  std::vector<std::complex<double>> fa(n), fb(n);
  for (size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
  for (size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
  fft(fa);
  fft(fb);
  for (size_t i = 0; i < n; ++i) fa[i] *= fb[i];
  ifft(fa);
  std::vector<double> out(out_len);
  for (size_t i = 0; i < out_len; ++i) out[i] = fa[i].real();
  return out;
}

int stft_frames(int n_samples, int win, int hop) {
  if (n_samples < win) return 0;
  return (n_samples - win) / hop + 1;
}

Spectrogram stft_log_magnitude(const BinauralWaveform& wave, int win, int hop,
                               int nfft) {
  if (nfft < win) throw std::invalid_argument("nfft must be >= win");
  if (hop <= 0) throw std::invalid_argument("hop must be > 0");
  if (!is_pow2(static_cast<size_t>(nfft)))
    throw std::invalid_argument("nfft must be a power of two");
  const int n = static_cast<int>(wave.left.size());
  if (n < win) throw std::invalid_argument("waveform shorter than one window");

  const int frames = stft_frames(n, win, hop);
  const int bins = nfft / 2 + 1;

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / win);  // periodic Hann

  Spectrogram spec;
  spec.channels = 2;
  spec.freq_bins = bins;
  spec.time_frames = frames;
  spec.values.assign(static_cast<size_t>(2) * bins * frames, 0.0f);

  std::vector<std::complex<double>> buf(nfft);
  const std::vector<double>* chans[2] = {&wave.left, &wave.right};
  for (int c = 0; c < 2; ++c) {
    const std::vector<double>& x = *chans[c];
    for (int f = 0; f < frames; ++f) {
      const int start = f * hop;
      for (int i = 0; i < win; ++i) buf[i] = x[start + i] * window[i];
      for (int i = win; i < nfft; ++i) buf[i] = 0.0;
      fft(buf);
      for (int k = 0; k < bins; ++k)
        spec.at(c, k, f) = static_cast<float>(std::log1p(std::abs(buf[k])));
    }
  }
  return spec;
}

}  // namespace ve
