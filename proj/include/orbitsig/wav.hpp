#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace orbitsig {

// Mono 16-bit PCM WAV. Samples are scaled to [-1, 1) by dividing by 32768.
struct WavData {
  std::vector<double> samples;
  double rate = 0.0;
};

WavData read_wav(const std::filesystem::path& path);
WavData parse_wav(std::span<const unsigned char> bytes);

// Values outside [-1, 1) are clipped.
void write_wav(const std::filesystem::path& path, std::span<const double> samples, int rate);
std::vector<unsigned char> encode_wav(std::span<const double> samples, int rate);

std::int16_t to_pcm16(double x);

// Snaps every sample onto the 16-bit grid so that a later write/read pair is
// lossless.
void quantize_pcm16(std::span<double> samples);

}  // namespace orbitsig
