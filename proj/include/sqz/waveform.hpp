// Copyright 2026 The sqzchip Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "sqz/gaussian.hpp"

namespace sqz {

// Drive waveform applied to an electrode or modulator.
//
//   constant: offset + amplitude
//   ramp:     sawtooth from offset - amplitude to offset + amplitude
//   square:   +/- amplitude, half a period each (zero-mean by construction)
//   sine:     offset + amplitude * sin(2 pi f t + phase)
//
// phase_rad shifts periodic waveforms by phase_rad / (2 pi) of a period.
struct Waveform {
  enum class Kind { constant, ramp, square, sine };
  Kind kind = Kind::constant;
  double amplitude = 0.0;
  double frequency_hz = 0.0;
  double offset = 0.0;
  double phase_rad = 0.0;
};

inline void validate_waveform(const Waveform& w, const std::string& label) {
  if (w.kind != Waveform::Kind::constant && !(w.frequency_hz > 0.0)) {
    throw std::invalid_argument("waveform '" + label +
                                "': periodic kinds need a positive frequency");
  }
  if (w.kind == Waveform::Kind::square && w.offset != 0.0) {
    throw std::invalid_argument("waveform '" + label +
                                "': square waves must be zero-mean (offset 0)");
  }
}

inline double waveform_value(const Waveform& w, double t) {
  switch (w.kind) {
    case Waveform::Kind::constant:
      return w.offset + w.amplitude;
    case Waveform::Kind::sine:
      return w.offset +
             w.amplitude * std::sin(2.0 * kPi * w.frequency_hz * t + w.phase_rad);
    case Waveform::Kind::ramp: {
      double cycles = t * w.frequency_hz + w.phase_rad / (2.0 * kPi);
      cycles -= std::floor(cycles);
      return w.offset + w.amplitude * (2.0 * cycles - 1.0);
    }
    case Waveform::Kind::square: {
      double cycles = t * w.frequency_hz + w.phase_rad / (2.0 * kPi);
      cycles -= std::floor(cycles);
      return cycles < 0.5 ? w.amplitude : -w.amplitude;
    }
  }
  throw std::logic_error("waveform_value: unhandled kind");
}

inline const char* waveform_kind_name(Waveform::Kind kind) {
  switch (kind) {
    case Waveform::Kind::constant: return "constant";
    case Waveform::Kind::ramp: return "ramp";
    case Waveform::Kind::square: return "square";
    case Waveform::Kind::sine: return "sine";
  }
  return "unknown";
}

inline Waveform::Kind waveform_kind_from_name(const std::string& name) {
  if (name == "constant") return Waveform::Kind::constant;
  if (name == "ramp") return Waveform::Kind::ramp;
  if (name == "square") return Waveform::Kind::square;
  if (name == "sine") return Waveform::Kind::sine;
  throw std::invalid_argument("unknown waveform kind '" + name + "'");
}

}  // namespace sqz
