#ifndef QUAKESEG_SYNTH_HPP
#define QUAKESEG_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "labelmap.hpp"
#include "raster.hpp"

namespace quakeseg {

enum class TextureKind { Flat, Checkerboard, Speckle };

TextureKind parse_texture(const std::string& name);

// Per-class appearance. Every region of the class shares the spectral
// direction; `scale_spread` jitters the overall brightness per region, which
// varies region means without moving their spectral angle.
struct ClassTemplate {
    std::string name;
    std::vector<double> means; // one per band
    TextureKind texture = TextureKind::Flat;
    double amplitude = 0.0;   // checkerboard/speckle modulation
    double noise_std = 0.0;   // per-band Gaussian noise
    double scale_spread = 0.0; // relative brightness jitter, e.g. 0.08 = +-8%
};

struct RegionSpec {
    int row0, col0, height, width;
    int class_id;
};

// Scene recipe: rectangles must tile the image exactly. Parsed from a
// `key = value` file: width/height/bands/seed, class_<i>_* templates, and
// either a grid layout (grid_rows/grid_cols with a row-major grid_pattern of
// class ids) or explicit `rect_<i> = row,col,height,width,class` entries.
struct SceneSpec {
    int width = 0;
    int height = 0;
    int bands = 0;
    std::uint64_t seed = 0;
    std::vector<ClassTemplate> classes;
    std::vector<RegionSpec> regions;

    static SceneSpec parse(const Config& cfg);
    static SceneSpec parse_file(const std::string& path);

    // The 256x256, 4-band, 4-class scene (seed 42) used by the end-to-end
    // harness: an 8x8 grid of 32x32 tiles, classes 0..3 dealt as (i+j)%4 so
    // no two 4-adjacent tiles share a class.
    static SceneSpec acceptance_default();

    void validate() const; // throws ConfigError
};

struct Scene {
    MultiBandRaster raster;
    LabelMap truth;
    std::vector<int> classes; // per region, indexed by truth label
};

// Deterministic for a given spec: pixel = region mean + texture modulation +
// Gaussian noise, generated in a fixed order.
Scene generate_scene(const SceneSpec& spec);

// Region class table: `region,class` CSV in region-id order.
void save_classes_csv(const std::vector<int>& classes, const std::string& path);
std::vector<int> load_classes_csv(const std::string& path);

} // namespace quakeseg

#endif
