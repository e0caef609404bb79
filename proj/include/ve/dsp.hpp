#pragma once

#include <complex>
#include <vector>

#include "ve/acoustics.hpp"

namespace ve {

// In-place radix-2 transforms; length must be a power of two.
void fft(std::vector<std::complex<double>>& buf);
void ifft(std::vector<std::complex<double>>& buf);

std::vector<double> convolve_direct(const std::vector<double>& a,
                                    const std::vector<double>& b);
std::vector<double> convolve_fft(const std::vector<double>& a,
                                 const std::vector<double>& b);

// 2 x freq_bins x time_frames, values log1p(|STFT|).
struct Spectrogram {
  int channels = 2;
  int freq_bins = 0;
  int time_frames = 0;
  std::vector<float> values;  // [channel][freq][time], row-major
  float& at(int c, int f, int t) {
    return values[(static_cast<size_t>(c) * freq_bins + f) * time_frames + t];
  }
  float at(int c, int f, int t) const {
    return values[(static_cast<size_t>(c) * freq_bins + f) * time_frames + t];
  }
};

struct StftSpec {
  int win = 64;
  int hop = 16;
  int nfft = 512;
};

// Periodic Hann analysis, frames fully interior:
// frames = floor((N - win)/hop) + 1.
Spectrogram stft_log_magnitude(const BinauralWaveform& wave, int win, int hop,
                               int nfft);

int stft_frames(int n_samples, int win, int hop);

}  // namespace ve
