#include "synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "rng.hpp"

namespace quakeseg {

namespace {

int to_int(double v, const std::string& what) {
    if (v != std::floor(v)) throw ConfigError(what + ": expected an integer, got " + std::to_string(v));
    return static_cast<int>(v);
}

} // namespace

TextureKind parse_texture(const std::string& name) {
    if (name == "flat") return TextureKind::Flat;
    if (name == "checkerboard") return TextureKind::Checkerboard;
    if (name == "speckle") return TextureKind::Speckle;
    throw ConfigError("unknown texture kind '" + name + "' (expected flat, checkerboard, or speckle)");
}

SceneSpec SceneSpec::parse(const Config& cfg) {
    cfg.require_known({"width", "height", "bands", "seed", "classes", "grid_rows", "grid_cols",
                       "grid_pattern", "rects", "class_*", "rect_*"});

    SceneSpec spec;
    spec.width = cfg.get_int("width");
    spec.height = cfg.get_int("height");
    spec.bands = cfg.get_int("bands");
    spec.seed = cfg.get_u64("seed", 0);

    const int n_classes = cfg.get_int("classes");
    if (n_classes <= 0) throw ConfigError("classes: must be positive");
    for (int c = 0; c < n_classes; ++c) {
        const std::string p = "class_" + std::to_string(c) + "_";
        ClassTemplate t;
        t.name = cfg.get_string(p + "name", "class" + std::to_string(c));
        for (double m : cfg.get_list(p + "means")) t.means.push_back(m);
        t.texture = parse_texture(cfg.get_string(p + "texture", "flat"));
        t.amplitude = cfg.get_double(p + "amplitude", 0.0);
        t.noise_std = cfg.get_double(p + "noise_std", 0.0);
        t.scale_spread = cfg.get_double(p + "spread", 0.0);
        spec.classes.push_back(std::move(t));
    }

    const bool has_grid = cfg.has("grid_rows") || cfg.has("grid_cols");
    const bool has_rects = cfg.has("rects");
    if (has_grid == has_rects)
        throw ConfigError("layout: provide either grid_rows/grid_cols or rects, not both");

    if (has_grid) {
        const int rows = cfg.get_int("grid_rows");
        const int cols = cfg.get_int("grid_cols");
        if (rows <= 0 || cols <= 0) throw ConfigError("grid layout: rows and cols must be positive");
        if (spec.height % rows != 0 || spec.width % cols != 0)
            throw ConfigError("grid layout: image size must be divisible by the grid");
        std::vector<int> pattern;
        if (cfg.has("grid_pattern")) {
            for (double v : cfg.get_list("grid_pattern")) pattern.push_back(to_int(v, "grid_pattern"));
            if (static_cast<int>(pattern.size()) != rows * cols)
                throw ConfigError("grid_pattern: expected " + std::to_string(rows * cols) + " entries");
        } else {
            // Diagonal deal: tile (i, j) gets class (i + j) % n, so 4-adjacent
            // tiles never share a class.
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j) pattern.push_back((i + j) % n_classes);
        }
        const int th = spec.height / rows;
        const int tw = spec.width / cols;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                spec.regions.push_back({i * th, j * tw, th, tw, pattern[static_cast<std::size_t>(i) * cols + j]});
    } else {
        const int n_rects = cfg.get_int("rects");
        for (int r = 0; r < n_rects; ++r) {
            const std::string key = "rect_" + std::to_string(r);
            const std::vector<double> v = cfg.get_list(key);
            if (v.size() != 5) throw ConfigError(key + ": expected row,col,height,width,class");
            spec.regions.push_back({to_int(v[0], key), to_int(v[1], key), to_int(v[2], key),
                                    to_int(v[3], key), to_int(v[4], key)});
        }
    }

    spec.validate();
    return spec;
}

SceneSpec SceneSpec::parse_file(const std::string& path) {
    return parse(Config::parse_file(path));
}

SceneSpec SceneSpec::acceptance_default() {
    SceneSpec spec;
    spec.width = 256;
    spec.height = 256;
    spec.bands = 4; // B, G, R, NIR
    spec.seed = 42;
    spec.classes = {
        {"intact", {100.0, 100.0, 100.0, 80.0}, TextureKind::Flat, 0.0, 2.0, 0.06},
        {"damaged", {95.0, 85.0, 110.0, 55.0}, TextureKind::Speckle, 14.0, 2.0, 0.08},
        {"vegetation", {45.0, 70.0, 50.0, 140.0}, TextureKind::Speckle, 5.0, 2.0, 0.06},
        {"road", {70.0, 65.0, 60.0, 35.0}, TextureKind::Flat, 0.0, 2.0, 0.04},
    };
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) spec.regions.push_back({i * 32, j * 32, 32, 32, (i + j) % 4});
    return spec;
}

void SceneSpec::validate() const {
    if (width <= 0 || height <= 0 || bands <= 0)
        throw ConfigError("scene: width, height, and bands must be positive");
    if (classes.empty()) throw ConfigError("scene: no classes defined");
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const ClassTemplate& t = classes[c];
        const std::string who = "class " + std::to_string(c);
        if (static_cast<int>(t.means.size()) != bands)
            throw ConfigError(who + ": expected " + std::to_string(bands) + " band means, got " +
                              std::to_string(t.means.size()));
        for (double m : t.means)
            if (!std::isfinite(m)) throw ConfigError(who + ": non-finite band mean");
        if (!std::isfinite(t.amplitude) || !std::isfinite(t.noise_std) || !std::isfinite(t.scale_spread))
            throw ConfigError(who + ": non-finite texture parameter");
        if (t.noise_std < 0.0) throw ConfigError(who + ": noise std must be >= 0");
        if (t.amplitude < 0.0) throw ConfigError(who + ": amplitude must be >= 0");
        if (t.scale_spread < 0.0 || t.scale_spread >= 1.0)
            throw ConfigError(who + ": spread must be in [0, 1)");
    }
    if (regions.empty()) throw ConfigError("scene: no regions defined");

    // Exact tiling: every pixel covered exactly once.
    std::vector<char> covered(static_cast<std::size_t>(width) * height, 0);
    for (std::size_t r = 0; r < regions.size(); ++r) {
        const RegionSpec& reg = regions[r];
        const std::string who = "region " + std::to_string(r);
        if (reg.class_id < 0 || reg.class_id >= static_cast<int>(classes.size()))
            throw ConfigError(who + ": class id " + std::to_string(reg.class_id) + " out of range");
        if (reg.height <= 0 || reg.width <= 0) throw ConfigError(who + ": empty rectangle");
        if (reg.row0 < 0 || reg.col0 < 0 || reg.row0 + reg.height > height || reg.col0 + reg.width > width)
            throw ConfigError(who + ": rectangle leaves the image");
        for (int i = reg.row0; i < reg.row0 + reg.height; ++i)
            for (int j = reg.col0; j < reg.col0 + reg.width; ++j) {
                char& c = covered[static_cast<std::size_t>(i) * width + j];
                if (c) throw ConfigError(who + ": overlaps another region");
                c = 1;
            }
    }
    for (char c : covered)
        if (!c) throw ConfigError("scene: regions do not tile the image");
}

Scene generate_scene(const SceneSpec& spec) {
    spec.validate();

    LabelMap truth(spec.width, spec.height);
    std::vector<int> classes(spec.regions.size());
    for (std::size_t r = 0; r < spec.regions.size(); ++r) {
        const RegionSpec& reg = spec.regions[r];
        classes[r] = reg.class_id;
        for (int i = reg.row0; i < reg.row0 + reg.height; ++i)
            for (int j = reg.col0; j < reg.col0 + reg.width; ++j)
                truth.at(i, j) = static_cast<int>(r);
    }

    Rng rng(spec.seed);

    // One brightness factor per region, drawn in region order. Scaling the
    // whole spectrum preserves its direction, so spectral angles between a
    // region and its class template stay at zero before texture and noise.
    std::vector<double> region_scale(spec.regions.size(), 1.0);
    for (std::size_t r = 0; r < spec.regions.size(); ++r) {
        const double spread = spec.classes[spec.regions[r].class_id].scale_spread;
        if (spread > 0.0) region_scale[r] = 1.0 + spread * rng.uniform(-1.0, 1.0);
    }

    MultiBandRaster raster(spec.width, spec.height, spec.bands);
    for (int i = 0; i < spec.height; ++i) {
        for (int j = 0; j < spec.width; ++j) {
            const int region = truth.at(i, j);
            const ClassTemplate& t = spec.classes[spec.regions[region].class_id];

            // Texture modulation is shared across bands: it shifts brightness
            // per pixel, which is what LBP and GLCM respond to.
            double offset = 0.0;
            switch (t.texture) {
                case TextureKind::Flat: break;
                case TextureKind::Checkerboard:
                    offset = ((i + j) % 2 == 0) ? t.amplitude : -t.amplitude;
                    break;
                case TextureKind::Speckle:
                    offset = rng.uniform(-t.amplitude, t.amplitude);
                    break;
            }
            for (int b = 0; b < spec.bands; ++b) {
                double v = t.means[b] * region_scale[region] + offset;
                if (t.noise_std > 0.0) v += rng.normal(0.0, t.noise_std);
                raster.at(b, i, j) = static_cast<float>(v);
            }
        }
    }

    return {std::move(raster), std::move(truth), std::move(classes)};
}

void save_classes_csv(const std::vector<int>& classes, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "region,class\n";
    for (std::size_t r = 0; r < classes.size(); ++r) out << r << "," << classes[r] << "\n";
    if (!out) throw DataError("failed writing " + path);
}

std::vector<int> load_classes_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    std::vector<int> classes;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string region_s, class_s;
        if (!std::getline(ss, region_s, ',') || !std::getline(ss, class_s))
            throw DataError(path + ": row " + std::to_string(row) + ": expected region,class");
        char* end = nullptr;
        const long region = std::strtol(region_s.c_str(), &end, 10);
        if (end == region_s.c_str() || *end != '\0')
            throw DataError(path + ": row " + std::to_string(row) + ": bad region id '" + region_s + "'");
        const long cls = std::strtol(class_s.c_str(), &end, 10);
        if (end == class_s.c_str() || *end != '\0')
            throw DataError(path + ": row " + std::to_string(row) + ": bad class id '" + class_s + "'");
        if (region != static_cast<long>(classes.size()))
            throw DataError(path + ": row " + std::to_string(row) + ": region ids must be dense and ordered");
        classes.push_back(static_cast<int>(cls));
    }
    if (classes.empty()) throw DataError(path + ": no rows");
    return classes;
}

} // namespace quakeseg
