#pragma once

#include <cstdint>
#include <string>

#include "ipdp/patch.hpp"

namespace ipdp {

// Deterministic stand-in for camera content: multi-octave smoothed noise
// over a slowly varying luminance ramp, plus fine per-pixel grain. Enough
// texture for editing operations to leave measurable traces.
Gray8 make_synthetic_source(uint64_t seed, int height, int width);

// N such images written as <dir>/src_<index>.png.
void write_demo_sources(const std::string& dir, int count, uint64_t seed, int height, int width);

}  // namespace ipdp
