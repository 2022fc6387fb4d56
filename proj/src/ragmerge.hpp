#ifndef QUAKESEG_RAGMERGE_HPP
#define QUAKESEG_RAGMERGE_HPP

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "labelmap.hpp"
#include "raster.hpp"

namespace quakeseg {

// Per-region summary sufficient to evaluate merge costs incrementally.
// combine() is exact field-wise, so merged stats never drift from a
// from-scratch recomputation.
struct RegionStats {
    long long area = 0;
    std::vector<double> band_sum;   // one per band
    std::vector<double> band_sumsq; // one per band
    long long perimeter = 0;        // boundary-edge count, image border included
    int min_row = 0, max_row = 0, min_col = 0, max_col = 0;
    std::array<std::uint32_t, 256> lbp{}; // raw counts over interior-evaluable pixels
    long long sum_r = 0, sum_c = 0, sum_rr = 0, sum_cc = 0, sum_rc = 0;

    std::vector<double> mean() const;
    long long bbox_perimeter() const;
    long long lbp_total() const;
};

struct HeterogeneityWeights {
    double w_spec = 0.7;
    double w_texture = 0.2;
    double w_shape = 0.1;
    double w_compact = 0.5;
    double w_smooth = 0.5;

    // Throws ConfigError unless each weight is in [0,1] and both groups sum
    // to 1 within 1e-9.
    void validate() const;
};

// LBP code at (row, col): P neighbors on a circle of radius R, sampled
// counter-clockwise from east, bilinear interpolation for non-integer
// coordinates (snapped when within 1e-9 of a grid point). Bit p is set when
// neighbor >= center.
int lbp_code(const BandGrid& band, int row, int col, int p = 8, double radius = 1.0);

// 256-bin LBP(8,1) histogram over the region's pixels at least one pixel from
// the image border. A region with no evaluable pixels yields the uniform
// histogram (every bin 1).
std::array<double, 256> lbp_histogram(const BandGrid& band, const LabelMap& labels, int region);

// Chi-squared distance between L1-normalized histograms:
// 0.5 * sum (pa-pb)^2 / (pa+pb+1e-12). Symmetric, 0 iff equal after
// normalization, 1 for disjoint single-bin histograms.
double texture_distance(std::span<const double> ha, std::span<const double> hb);

// FNEA shape-heterogeneity change for merging A and B, area-weighted before
// vs after, with h_compact = perim/sqrt(area) and h_smooth = perim/bboxPerim.
// shared_boundary is the 4-adjacency edge count between A and B; 0 means the
// regions are not adjacent (argument error). May be negative.
double shape_heterogeneity_delta(const RegionStats& a, const RegionStats& b,
                                 long long shared_boundary, double w_compact, double w_smooth);

// Combined heterogeneity w_spec*h_spec + w_texture*h_texture + w_shape*h_shape.
// h_spec is the spectral angle of the means (pi/2 when exactly one mean is the
// zero vector, 0 when both are), h_texture the chi-squared LBP distance with
// the uniform substitution for empty histograms, h_shape the FNEA delta
// normalized by the combined area and clamped at 0 so costs are never
// negative.
double merge_cost(const RegionStats& a, const RegionStats& b, long long shared_boundary,
                  const HeterogeneityWeights& w);

RegionStats combine(const RegionStats& a, const RegionStats& b, long long shared_boundary);

// Per-region stats over a valid label map. LBP histograms are computed on
// `lbp_band` (the NIR band in the standard pipeline).
std::vector<RegionStats> compute_region_stats(const LabelMap& labels, const MultiBandRaster& raster,
                                              const BandGrid& lbp_band);

// Region adjacency graph with cached merge costs. Exposed so the greedy loop
// can be driven and inspected one step at a time.
class Rag {
public:
    struct Edge {
        long long shared_boundary = 0;
        double cost = 0.0;
    };
    struct MergeStep {
        int kept = -1;    // surviving region id (smaller of the pair)
        int absorbed = -1;
        double cost = 0.0;
    };

    Rag(const LabelMap& labels, const MultiBandRaster& raster, const HeterogeneityWeights& w,
        int lbp_band = -1); // -1: last band

    int live_region_count() const noexcept { return live_; }
    bool alive(int region) const { return alive_.at(static_cast<std::size_t>(region)) != 0; }
    const RegionStats& stats(int region) const;
    const std::map<std::pair<int, int>, Edge>& edges() const noexcept { return edges_; }

    // Cost of the current global minimum edge, or +inf when no edge remains.
    double min_cost() const;

    // Merge the minimum-cost edge if its cost < scale. Ties break on smaller
    // (min-id, max-id). Returns kept = -1 when no merge was performed.
    MergeStep step(double scale);

    // Current partition: input labels remapped through all merges, renumbered
    // densely in scan order.
    LabelMap current_labels() const;

private:
    void set_edge_cost(int u, int v);

    LabelMap input_;
    HeterogeneityWeights w_;
    std::vector<RegionStats> stats_;
    std::vector<char> alive_;
    std::vector<int> remap_;
    std::vector<std::set<int>> neighbors_;
    std::map<std::pair<int, int>, Edge> edges_;
    // Ordered (cost, min-id, max-id) mirror of edges_; begin() is the global
    // minimum and encodes the deterministic tie-break.
    std::set<std::tuple<double, int, int>> queue_;
    int live_ = 0;
};

// Greedy minimum-heterogeneity merge: repeatedly merge the cheapest edge while
// its cost < scale, then renumber densely.
LabelMap merge_regions(const LabelMap& labels, const MultiBandRaster& raster,
                       const HeterogeneityWeights& w, double scale, int lbp_band = -1);

} // namespace quakeseg

#endif
