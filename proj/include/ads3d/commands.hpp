#pragma once

#include "ads3d/config.hpp"

#include <filesystem>
#include <string>

namespace ads3d::cli {

/// Entry point of the ads3d executable; returns the process exit code.
int run(int argc, const char* const* argv);

/// Generated corpus -> `output` (default <out_dir>/synth.ads3).
std::filesystem::path cmd_synth(const RunConfig& config);
/// Notch, bandpass, downsample and epoch `input` -> `output` (default <out_dir>/preprocessed.ads3).
std::filesystem::path cmd_preprocess(const RunConfig& config);
/// Cross-validation on `input`; writes fold<k>.ckpt, fold<k>.log and cv_summary.txt
/// to out_dir and returns the summary text.
std::string cmd_train(const RunConfig& config);
/// Evaluates `checkpoint` on every trial of `input`; writes <out_dir>/eval.txt and returns it.
std::string cmd_eval(const RunConfig& config);
/// Contrast report, topography exports and the class x channel ANOVA for `band`.
/// Returns the path prefix of the written files.
std::filesystem::path cmd_stats(const RunConfig& config);

} // namespace ads3d::cli
