#include "ragmerge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

#include "errors.hpp"
#include "segmentation.hpp"

namespace quakeseg {

namespace {

constexpr double kChiEps = 1e-12;

double vec_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

struct BoxGeom {
    long long area;
    long long perimeter;
    long long bbox_perimeter;
};

double h_compact(const BoxGeom& g) {
    return static_cast<double>(g.perimeter) / std::sqrt(static_cast<double>(g.area));
}

double h_smooth(const BoxGeom& g) {
    return static_cast<double>(g.perimeter) / static_cast<double>(g.bbox_perimeter);
}

} // namespace

std::vector<double> RegionStats::mean() const {
    std::vector<double> m(band_sum.size());
    for (std::size_t b = 0; b < band_sum.size(); ++b)
        m[b] = band_sum[b] / static_cast<double>(area);
    return m;
}

long long RegionStats::bbox_perimeter() const {
    return 2LL * ((max_row - min_row + 1) + (max_col - min_col + 1));
}

long long RegionStats::lbp_total() const {
    long long t = 0;
    for (std::uint32_t v : lbp)
        t += v;
    return t;
}

void HeterogeneityWeights::validate() const {
    const double g1 = w_spec + w_texture + w_shape;
    const double g2 = w_compact + w_smooth;
    auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in01(w_spec) || !in01(w_texture) || !in01(w_shape) || !in01(w_compact) || !in01(w_smooth))
        throw ConfigError("heterogeneity weights must lie in [0,1]");
    if (std::abs(g1 - 1.0) > 1e-9)
        throw ConfigError("w_spec + w_texture + w_shape must equal 1");
    if (std::abs(g2 - 1.0) > 1e-9)
        throw ConfigError("w_compact + w_smooth must equal 1");
}

int lbp_code(const BandGrid& band, int row, int col, int p, double radius) {
    if (p < 1 || p > 30)
        throw ArgumentError("lbp_code: neighbor count out of range");
    if (!(radius > 0.0))
        throw ArgumentError("lbp_code: radius must be positive");
    const int margin = static_cast<int>(std::ceil(radius));
    if (row < margin || col < margin || row >= band.height() - margin || col >= band.width() - margin)
        throw ArgumentError("lbp_code: pixel too close to the image border");

    const double center = band.at(row, col);
    auto snap = [](double x) {
        const double r = std::round(x);
        return std::abs(x - r) <= 1e-9 ? r : x;
    };
    int code = 0;
    for (int i = 0; i < p; ++i) {
        const double theta = 2.0 * std::numbers::pi * i / p;
        const double fr = snap(row - radius * std::sin(theta));
        const double fc = snap(col + radius * std::cos(theta));
        const int r0 = static_cast<int>(std::floor(fr));
        const int c0 = static_cast<int>(std::floor(fc));
        const double dr = fr - r0;
        const double dc = fc - c0;
        double v;
        if (dr == 0.0 && dc == 0.0) {
            v = band.at(r0, c0);
        } else {
            const double v00 = band.at(r0, c0);
            const double v01 = dc > 0.0 ? band.at(r0, c0 + 1) : v00;
            const double v10 = dr > 0.0 ? band.at(r0 + 1, c0) : v00;
            const double v11 = (dr > 0.0 && dc > 0.0) ? band.at(r0 + 1, c0 + 1) : v10;
            // Lerp form stays exact on constant neighborhoods, so s(0) ties
            // are decided by the data and not by weight rounding.
            const double top = v00 + dc * (v01 - v00);
            const double bot = v10 + dc * (v11 - v10);
            v = top + dr * (bot - top);
        }
        if (v - center >= 0.0)
            code |= 1 << i;
    }
    return code;
}

std::array<double, 256> lbp_histogram(const BandGrid& band, const LabelMap& labels, int region) {
    if (band.width() != labels.width() || band.height() != labels.height())
        throw ArgumentError("lbp_histogram: band/label dimensions differ");
    if (region < 0 || region >= labels.region_count())
        throw ArgumentError("lbp_histogram: unknown region id");

    std::array<double, 256> hist{};
    bool any = false;
    bool seen = false;
    for (int r = 0; r < labels.height(); ++r) {
        for (int c = 0; c < labels.width(); ++c) {
            if (labels.at(r, c) != region)
                continue;
            seen = true;
            if (r < 1 || c < 1 || r >= labels.height() - 1 || c >= labels.width() - 1)
                continue;
            hist[static_cast<std::size_t>(lbp_code(band, r, c))] += 1.0;
            any = true;
        }
    }
    if (!seen)
        throw ArgumentError("lbp_histogram: unknown region id");
    if (!any)
        hist.fill(1.0);
    return hist;
}

double texture_distance(std::span<const double> ha, std::span<const double> hb) {
    if (ha.size() != hb.size())
        throw ArgumentError("texture_distance: histogram sizes differ");
    double ta = 0.0, tb = 0.0;
    for (std::size_t k = 0; k < ha.size(); ++k) {
        ta += ha[k];
        tb += hb[k];
    }
    if (ta <= 0.0 || tb <= 0.0)
        throw ArgumentError("texture_distance: zero-mass histogram");
    double d = 0.0;
    for (std::size_t k = 0; k < ha.size(); ++k) {
        const double pa = ha[k] / ta;
        const double pb = hb[k] / tb;
        const double diff = pa - pb;
        d += diff * diff / (pa + pb + kChiEps);
    }
    return 0.5 * d;
}

double shape_heterogeneity_delta(const RegionStats& a, const RegionStats& b,
                                 long long shared_boundary, double w_compact, double w_smooth) {
    if (shared_boundary <= 0)
        throw ArgumentError("shape_heterogeneity_delta: regions are not adjacent");

    const BoxGeom ga{a.area, a.perimeter, a.bbox_perimeter()};
    const BoxGeom gb{b.area, b.perimeter, b.bbox_perimeter()};
    const long long mr0 = std::min(a.min_row, b.min_row);
    const long long mr1 = std::max(a.max_row, b.max_row);
    const long long mc0 = std::min(a.min_col, b.min_col);
    const long long mc1 = std::max(a.max_col, b.max_col);
    const BoxGeom gm{a.area + b.area, a.perimeter + b.perimeter - 2 * shared_boundary,
                     2 * ((mr1 - mr0 + 1) + (mc1 - mc0 + 1))};

    const double na = static_cast<double>(a.area);
    const double nb = static_cast<double>(b.area);
    const double nm = static_cast<double>(gm.area);
    const double d_compact = nm * h_compact(gm) - (na * h_compact(ga) + nb * h_compact(gb));
    const double d_smooth = nm * h_smooth(gm) - (na * h_smooth(ga) + nb * h_smooth(gb));
    return w_compact * d_compact + w_smooth * d_smooth;
}

double merge_cost(const RegionStats& a, const RegionStats& b, long long shared_boundary,
                  const HeterogeneityWeights& w) {
    w.validate();

    const std::vector<double> ma = a.mean();
    const std::vector<double> mb = b.mean();
    const bool za = vec_norm(ma) == 0.0;
    const bool zb = vec_norm(mb) == 0.0;
    double h_spec;
    if (za && zb)
        h_spec = 0.0;
    else if (za || zb)
        h_spec = std::numbers::pi / 2.0;
    else
        h_spec = sam_angle(ma, mb);

    auto usable = [](const RegionStats& s) {
        std::array<double, 256> h;
        if (s.lbp_total() == 0) {
            h.fill(1.0);
        } else {
            for (std::size_t k = 0; k < 256; ++k)
                h[k] = static_cast<double>(s.lbp[k]);
        }
        return h;
    };
    const std::array<double, 256> ha = usable(a);
    const std::array<double, 256> hb = usable(b);
    const double h_texture = texture_distance(ha, hb);

    const double delta = shape_heterogeneity_delta(a, b, shared_boundary, w.w_compact, w.w_smooth);
    const double h_shape = std::max(0.0, delta / static_cast<double>(a.area + b.area));

    return w.w_spec * h_spec + w.w_texture * h_texture + w.w_shape * h_shape;
}

RegionStats combine(const RegionStats& a, const RegionStats& b, long long shared_boundary) {
    if (a.band_sum.size() != b.band_sum.size())
        throw ArgumentError("combine: band counts differ");
    RegionStats m;
    m.area = a.area + b.area;
    m.band_sum.resize(a.band_sum.size());
    m.band_sumsq.resize(a.band_sum.size());
    for (std::size_t k = 0; k < a.band_sum.size(); ++k) {
        m.band_sum[k] = a.band_sum[k] + b.band_sum[k];
        m.band_sumsq[k] = a.band_sumsq[k] + b.band_sumsq[k];
    }
    m.perimeter = a.perimeter + b.perimeter - 2 * shared_boundary;
    m.min_row = std::min(a.min_row, b.min_row);
    m.max_row = std::max(a.max_row, b.max_row);
    m.min_col = std::min(a.min_col, b.min_col);
    m.max_col = std::max(a.max_col, b.max_col);
    for (std::size_t k = 0; k < 256; ++k)
        m.lbp[k] = a.lbp[k] + b.lbp[k];
    m.sum_r = a.sum_r + b.sum_r;
    m.sum_c = a.sum_c + b.sum_c;
    m.sum_rr = a.sum_rr + b.sum_rr;
    m.sum_cc = a.sum_cc + b.sum_cc;
    m.sum_rc = a.sum_rc + b.sum_rc;
    return m;
}

std::vector<RegionStats> compute_region_stats(const LabelMap& labels, const MultiBandRaster& raster,
                                              const BandGrid& lbp_band) {
    if (labels.width() != raster.width() || labels.height() != raster.height() ||
        lbp_band.width() != raster.width() || lbp_band.height() != raster.height())
        throw ArgumentError("compute_region_stats: dimension mismatch");
    const int n = validate_label_map(labels);
    const int w = labels.width();
    const int h = labels.height();
    const int bands = raster.bands();

    std::vector<RegionStats> stats(static_cast<std::size_t>(n));
    for (auto& s : stats) {
        s.band_sum.assign(static_cast<std::size_t>(bands), 0.0);
        s.band_sumsq.assign(static_cast<std::size_t>(bands), 0.0);
        s.min_row = h;
        s.min_col = w;
        s.max_row = -1;
        s.max_col = -1;
    }

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int lab = labels.at(r, c);
            RegionStats& s = stats[static_cast<std::size_t>(lab)];
            s.area += 1;
            for (int b = 0; b < bands; ++b) {
                const double v = raster.at(b, r, c);
                s.band_sum[static_cast<std::size_t>(b)] += v;
                s.band_sumsq[static_cast<std::size_t>(b)] += v * v;
            }
            auto differs = [&](int rr, int cc) {
                return rr < 0 || cc < 0 || rr >= h || cc >= w || labels.at(rr, cc) != lab;
            };
            s.perimeter += differs(r - 1, c) + differs(r + 1, c) + differs(r, c - 1) + differs(r, c + 1);
            s.min_row = std::min(s.min_row, r);
            s.max_row = std::max(s.max_row, r);
            s.min_col = std::min(s.min_col, c);
            s.max_col = std::max(s.max_col, c);
            s.sum_r += r;
            s.sum_c += c;
            s.sum_rr += static_cast<long long>(r) * r;
            s.sum_cc += static_cast<long long>(c) * c;
            s.sum_rc += static_cast<long long>(r) * c;
            if (r >= 1 && c >= 1 && r < h - 1 && c < w - 1)
                s.lbp[static_cast<std::size_t>(lbp_code(lbp_band, r, c))] += 1;
        }
    }
    return stats;
}

Rag::Rag(const LabelMap& labels, const MultiBandRaster& raster, const HeterogeneityWeights& w,
         int lbp_band)
    : input_(labels), w_(w) {
    w_.validate();
    if (lbp_band == -1)
        lbp_band = raster.bands() - 1;
    if (lbp_band < 0 || lbp_band >= raster.bands())
        throw ArgumentError("Rag: LBP band index out of range");

    const BandGrid band = raster.band(lbp_band);
    stats_ = compute_region_stats(labels, raster, band);
    const int n = static_cast<int>(stats_.size());
    alive_.assign(static_cast<std::size_t>(n), 1);
    remap_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        remap_[static_cast<std::size_t>(i)] = i;
    neighbors_.assign(static_cast<std::size_t>(n), {});
    live_ = n;

    const int wd = labels.width();
    const int ht = labels.height();
    for (int r = 0; r < ht; ++r) {
        for (int c = 0; c < wd; ++c) {
            const int lab = labels.at(r, c);
            if (c + 1 < wd && labels.at(r, c + 1) != lab) {
                const int o = labels.at(r, c + 1);
                edges_[{std::min(lab, o), std::max(lab, o)}].shared_boundary += 1;
            }
            if (r + 1 < ht && labels.at(r + 1, c) != lab) {
                const int o = labels.at(r + 1, c);
                edges_[{std::min(lab, o), std::max(lab, o)}].shared_boundary += 1;
            }
        }
    }
    for (auto& [key, edge] : edges_) {
        neighbors_[static_cast<std::size_t>(key.first)].insert(key.second);
        neighbors_[static_cast<std::size_t>(key.second)].insert(key.first);
        edge.cost = merge_cost(stats_[static_cast<std::size_t>(key.first)],
                               stats_[static_cast<std::size_t>(key.second)], edge.shared_boundary, w_);
        queue_.emplace(edge.cost, key.first, key.second);
    }
}

const RegionStats& Rag::stats(int region) const {
    if (region < 0 || region >= static_cast<int>(stats_.size()) ||
        !alive_[static_cast<std::size_t>(region)])
        throw ArgumentError("Rag::stats: region is not live");
    return stats_[static_cast<std::size_t>(region)];
}

double Rag::min_cost() const {
    if (queue_.empty())
        return std::numeric_limits<double>::infinity();
    return std::get<0>(*queue_.begin());
}

void Rag::set_edge_cost(int u, int v) {
    auto it = edges_.find({u, v});
    const double cost = merge_cost(stats_[static_cast<std::size_t>(u)],
                                   stats_[static_cast<std::size_t>(v)], it->second.shared_boundary, w_);
    it->second.cost = cost;
    queue_.emplace(cost, u, v);
}

Rag::MergeStep Rag::step(double scale) {
    if (queue_.empty() || std::get<0>(*queue_.begin()) >= scale)
        return {};
    const auto [cost, u, v] = *queue_.begin();

    // u keeps its identity; v is absorbed.
    const long long sb = edges_.at({u, v}).shared_boundary;
    stats_[static_cast<std::size_t>(u)] =
        combine(stats_[static_cast<std::size_t>(u)], stats_[static_cast<std::size_t>(v)], sb);
    queue_.erase(queue_.begin());
    edges_.erase({u, v});
    neighbors_[static_cast<std::size_t>(u)].erase(v);
    neighbors_[static_cast<std::size_t>(v)].erase(u);

    for (int n : neighbors_[static_cast<std::size_t>(v)]) {
        const std::pair<int, int> old_key{std::min(v, n), std::max(v, n)};
        const auto old_it = edges_.find(old_key);
        const long long nsb = old_it->second.shared_boundary;
        queue_.erase({old_it->second.cost, old_key.first, old_key.second});
        edges_.erase(old_it);
        neighbors_[static_cast<std::size_t>(n)].erase(v);

        const std::pair<int, int> new_key{std::min(u, n), std::max(u, n)};
        auto [new_it, inserted] = edges_.try_emplace(new_key);
        if (!inserted)
            queue_.erase({new_it->second.cost, new_key.first, new_key.second});
        new_it->second.shared_boundary += nsb;
        // Cost refreshed below with u's combined stats.
        neighbors_[static_cast<std::size_t>(u)].insert(n);
        neighbors_[static_cast<std::size_t>(n)].insert(u);
    }
    neighbors_[static_cast<std::size_t>(v)].clear();
    alive_[static_cast<std::size_t>(v)] = 0;
    remap_[static_cast<std::size_t>(v)] = u;
    --live_;

    for (int n : neighbors_[static_cast<std::size_t>(u)]) {
        const std::pair<int, int> key{std::min(u, n), std::max(u, n)};
        const auto it = edges_.find(key);
        queue_.erase({it->second.cost, key.first, key.second});
        set_edge_cost(key.first, key.second);
    }

    return {u, v, cost};
}

LabelMap Rag::current_labels() const {
    auto resolve = [&](int x) {
        while (remap_[static_cast<std::size_t>(x)] != x)
            x = remap_[static_cast<std::size_t>(x)];
        return x;
    };
    LabelMap out(input_.width(), input_.height());
    for (std::size_t i = 0; i < out.labels().size(); ++i)
        out.labels()[i] = resolve(input_.labels()[i]);
    return relabel_dense(out);
}

LabelMap merge_regions(const LabelMap& labels, const MultiBandRaster& raster,
                       const HeterogeneityWeights& w, double scale, int lbp_band) {
    if (scale < 0.0)
        throw ArgumentError("merge_regions: scale must be >= 0");
    Rag rag(labels, raster, w, lbp_band);
    while (rag.live_region_count() > 1 && rag.step(scale).kept >= 0) {
    }
    return rag.current_labels();
}

} // namespace quakeseg
