#ifndef QUAKESEG_FEATURES_HPP
#define QUAKESEG_FEATURES_HPP

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "labelmap.hpp"
#include "ragmerge.hpp"
#include "raster.hpp"

namespace quakeseg {

struct ShapeFeatures {
    double area;
    double shape_index;        // perim / (4 sqrt(area))
    double length_width_ratio; // sqrt(l1/l2), covariance eigenvalues floored at 1/12
    double rectangular_fit;    // area / bbox area
    double roundness;          // 4 pi area / perim^2
    double density;            // sqrt(area) / (1 + sqrt(l1+l2)), raw eigenvalues
};

struct GlcmFeatures {
    double contrast;
    double correlation;
    double entropy;
};

// Per-feature min/max fitted on training rows; drives min-max scaling to [0,1].
struct NormBounds {
    std::vector<double> min;
    std::vector<double> max;
};

// Raw (unnormalized) feature rows plus optional class labels. Normalization
// bounds are fitted separately so evaluation can refit per training fold.
struct FeatureMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels; // empty when unlabeled

    bool labeled() const noexcept { return !labels.empty(); }
    std::size_t feature_count() const noexcept { return names.size(); }
};

// Population mean and variance per band over the region's pixels.
std::vector<std::pair<double, double>> spectral_stats(const MultiBandRaster& raster,
                                                      const LabelMap& labels, int region);

ShapeFeatures shape_features(const RegionStats& stats);

// GLCM over the region: band values min-max quantized to `levels`, symmetric
// accumulation over offsets (0,1),(1,0),(1,1),(1,-1) with both pixels inside
// the region. Throws DataError when the region has no valid pair; the matrix
// builder substitutes zeros for such regions.
GlcmFeatures glcm_features(const BandGrid& band, const LabelMap& labels, int region,
                           int levels = 32);

// Canonical feature names for a B-band raster: mean_i/var_i interleaved per
// band, then area, shape_index, length_width_ratio, rectangular_fit,
// roundness, density, glcm_contrast, glcm_correlation, glcm_entropy,
// ndvi_mean. Length 2B + 10.
std::vector<std::string> feature_names(int bands);

// One raw feature row per region in region-id order. GLCM and LBP-carrying
// stats are computed on `nir_band` (-1: last band).
FeatureMatrix build_feature_matrix(const MultiBandRaster& raster, const LabelMap& labels,
                                   const BandGrid& ndvi,
                                   const std::optional<std::vector<int>>& truth = std::nullopt,
                                   int nir_band = -1, int glcm_levels = 32);

// Min-max bounds over the selected rows (all rows when `rows_idx` is empty is
// not implied; pass every index explicitly).
NormBounds fit_bounds(const FeatureMatrix& m, std::span<const std::size_t> rows_idx);
NormBounds fit_bounds(const FeatureMatrix& m);

// (v - min) / (max - min) clamped to [0,1]; constant features (min == max)
// map to 0.5.
std::vector<double> apply_bounds(std::span<const double> row, const NormBounds& b);

// CSV: header of canonical names (plus trailing `class` when labeled), one
// row per region, %.17g so values round-trip exactly.
void save_features_csv(const FeatureMatrix& m, const std::string& path);
FeatureMatrix load_features_csv(const std::string& path);

} // namespace quakeseg

#endif
