#pragma once

#include <string>

#include "signal/waveform.h"

namespace gsr {

// Mono 16 kHz WAV. Accepts 16-bit PCM and 32-bit IEEE float on read;
// writes 16-bit PCM by default or 32-bit float on request.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w, bool float32 = false);

}  // namespace gsr
