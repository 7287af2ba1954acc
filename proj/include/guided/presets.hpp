#pragma once

#include <string>
#include <vector>

#include "guided/experiment.hpp"

namespace guided {

/// Named experiment presets:
///   "radpath-like"  — K=3 imbalanced single task, one dataset of 221 pairs,
///                     5 split-sets (resplit per seed), stage protocols
///                     transcribed from the published hyperparameter table.
///   "derm7pt-like"  — 8 tasks with their per-task loss weights, fixed
///                     splits, 3 repeats.
///   "benchmark"     — calibrated default benchmark at N=2000, 5 seeds,
///                     fresh draw per seed.
/// Output directory is left empty for the caller/CLI to fill.
ExperimentConfig make_preset(const std::string& name);

const std::vector<std::string>& preset_names();

} // namespace guided
