#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dcar {

/// Mono PCM audio with samples in [-1, 1].
struct AudioTrack {
  std::vector<double> samples;
  int sample_rate = 0;
  std::string track_id;

  /// Throws DataError when sample_rate <= 0 or samples is empty.
  void validate() const;
};

/// Reads a RIFF/WAVE file: integer PCM at 8, 16, 24 or 32 bits, or 32-bit
/// IEEE float (plain or WAVE_FORMAT_EXTENSIBLE). Multi-channel input is
/// downmixed by averaging. No resampling is applied.
AudioTrack read_wav(const std::filesystem::path& path, std::string track_id = {});

/// Writes a mono 16-bit PCM WAV; samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const AudioTrack& track);

}  // namespace dcar
