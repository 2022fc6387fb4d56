#ifndef QUAKESEG_PIPELINE_HPP
#define QUAKESEG_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "eval.hpp"
#include "labelmap.hpp"

namespace quakeseg {

// Grid file: one `name = v1, v2, ...` line per swept parameter.
GridSpec parse_grid_spec(const Config& cfg);

// Per-region class ids for `regions`, by majority vote of the ground-truth
// class over each region's pixels. Ties go to the smaller class id.
std::vector<int> assign_region_classes(const LabelMap& regions, const LabelMap& truth,
                                       const std::vector<int>& truth_classes);

// Classified overlay: damaged regions red, intact yellow, then green/gray for
// further classes (cycling if there are more).
Rgb class_color(int class_id);
void save_overlay(const LabelMap& regions, const std::vector<int>& region_classes,
                  const std::string& path);

struct PipelineResult {
    int initial_regions = 0;
    int merged_regions = 0;
    bool evaluated = false;   // truth available, model trained and reported
    EvalResult eval;          // meaningful only when evaluated
    std::vector<std::string> artifacts; // files written, in write order
};

// Full run: obtain a scene (synthesize or load), segment, merge, extract
// features, and when ground truth is available evaluate + train a final
// model and write the classified overlay. Artifacts land in `out_dir` under
// fixed names. Any failure removes the files this run wrote and rethrows
// with the failing stage named. Identical config + seed give byte-identical
// text artifacts.
PipelineResult run_pipeline(const Config& cfg,
                            std::optional<std::uint64_t> seed_override = std::nullopt);
PipelineResult run_pipeline_file(const std::string& config_path,
                                 std::optional<std::uint64_t> seed_override = std::nullopt);

// Seed stream for the final full-data fit that produces the shipped model.
inline constexpr std::uint64_t kFinalFitStream = 1000003;

} // namespace quakeseg

#endif
