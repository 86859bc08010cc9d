#pragma once

#include <string>
#include <vector>

#include "ipdp/train/trainer.hpp"

namespace ipdp {

std::vector<CurvePoint> load_curve_csv(const std::string& path);

// Two-panel chart (loss left, accuracy right) of training vs validation
// curves, written as a PNG.
void render_curve_plot(const std::vector<CurvePoint>& curve, const std::string& out_path);

}  // namespace ipdp
