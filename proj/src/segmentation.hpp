#ifndef QUAKESEG_SEGMENTATION_HPP
#define QUAKESEG_SEGMENTATION_HPP

#include <span>
#include <vector>

#include "labelmap.hpp"
#include "raster.hpp"

namespace quakeseg {

// Spectral angle between two B-band vectors: arccos of the normalized dot
// product, cosine clamped to [-1, 1]. Result is in [0, pi]; for non-negative
// vectors it is in [0, pi/2]. Throws on zero vectors or length mismatch.
double sam_angle(std::span<const double> a, std::span<const double> b);

// Raster-scan over-segmentation. Each pixel is compared by spectral angle
// against the running mean spectra of its left and up regions; it joins the
// closer one when that angle is <= threshold (ties prefer left), both regions
// are additionally unioned when both qualify, and otherwise it starts a new
// region. All-zero pixels fall back to Euclidean nearest-mean assignment so
// the partition stays total. Output labels are dense in scan order.
LabelMap fast_scan_partition(const MultiBandRaster& raster, double init_threshold);

// Absorb every region smaller than min_size into its 4-adjacent neighbor with
// the smallest spectral angle between region means, repeating until no region
// is undersized or one region remains. Smallest region first, ties by label.
// Returns the input unchanged when nothing qualifies, densely relabeled
// otherwise.
LabelMap adaptive_merge_small(const LabelMap& labels, const MultiBandRaster& raster, int min_size);

} // namespace quakeseg

#endif
