#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "errors.hpp"
#include "features.hpp"
#include "helpers.hpp"
#include "labelmap.hpp"
#include "ragmerge.hpp"
#include "raster.hpp"
#include "rng.hpp"
#include "segmentation.hpp"

using quakeseg::ArgumentError;
using quakeseg::BandGrid;
using quakeseg::DataError;
using quakeseg::FeatureMatrix;
using quakeseg::LabelMap;
using quakeseg::MultiBandRaster;
using quakeseg::NormBounds;
using quakeseg::RegionStats;
using quakeseg::Rng;

TEST_SUITE_BEGIN("features");

namespace {

MultiBandRaster one_band(const std::vector<std::vector<double>>& rows) {
    MultiBandRaster r(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()), 1);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            r.at(0, static_cast<int>(i), static_cast<int>(j)) = static_cast<float>(rows[i][j]);
    return r;
}

// Two-pass mean/variance over an explicit pixel list; deliberately avoids the
// sum-of-squares shortcut used by the implementation.
std::pair<double, double> two_pass_stats(const BandGrid& band,
                                         const std::vector<std::pair<int, int>>& pixels) {
    double mean = 0.0;
    for (const auto& [r, c] : pixels)
        mean += band.at(r, c);
    mean /= static_cast<double>(pixels.size());
    double var = 0.0;
    for (const auto& [r, c] : pixels) {
        const double d = band.at(r, c) - mean;
        var += d * d;
    }
    var /= static_cast<double>(pixels.size());
    return {mean, var};
}

struct GlcmRef {
    double contrast = 0.0;
    double correlation = 0.0;
    double entropy = 0.0;
    double prob_sum = 0.0;
};

// From-scratch co-occurrence accumulation over the four symmetric offsets.
GlcmRef glcm_reference(const BandGrid& band, const LabelMap& labels, int region, int levels) {
    float lo = 0.0f, hi = 0.0f;
    bool first = true;
    for (int r = 0; r < labels.height(); ++r)
        for (int c = 0; c < labels.width(); ++c)
            if (labels.at(r, c) == region) {
                const float v = band.at(r, c);
                lo = first ? v : std::min(lo, v);
                hi = first ? v : std::max(hi, v);
                first = false;
            }
    auto level_of = [&](float v) {
        if (hi == lo)
            return 0;
        const int q =
            static_cast<int>(static_cast<double>(v - lo) / (hi - lo) * levels);
        return std::min(q, levels - 1);
    };

    std::map<std::pair<int, int>, double> cells;
    const int offs[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
    for (int r = 0; r < labels.height(); ++r)
        for (int c = 0; c < labels.width(); ++c) {
            if (labels.at(r, c) != region)
                continue;
            for (const auto& o : offs) {
                const int rr = r + o[0];
                const int cc = c + o[1];
                if (rr < 0 || rr >= labels.height() || cc < 0 || cc >= labels.width())
                    continue;
                if (labels.at(rr, cc) != region)
                    continue;
                const int a = level_of(band.at(r, c));
                const int b = level_of(band.at(rr, cc));
                cells[{a, b}] += 1.0;
                cells[{b, a}] += 1.0;
            }
        }
    double total = 0.0;
    for (const auto& [cell, count] : cells)
        total += count;
    GlcmRef out;
    if (total == 0.0)
        return out;

    std::vector<double> pi(static_cast<std::size_t>(levels), 0.0);
    std::vector<double> pj(static_cast<std::size_t>(levels), 0.0);
    for (const auto& [cell, count] : cells) {
        const double p = count / total;
        out.prob_sum += p;
        out.contrast += p * (cell.first - cell.second) * (cell.first - cell.second);
        out.entropy -= p * std::log(p);
        pi[static_cast<std::size_t>(cell.first)] += p;
        pj[static_cast<std::size_t>(cell.second)] += p;
    }
    double mi = 0.0, mj = 0.0;
    for (int i = 0; i < levels; ++i) {
        mi += i * pi[static_cast<std::size_t>(i)];
        mj += i * pj[static_cast<std::size_t>(i)];
    }
    double si = 0.0, sj = 0.0;
    for (int i = 0; i < levels; ++i) {
        si += (i - mi) * (i - mi) * pi[static_cast<std::size_t>(i)];
        sj += (i - mj) * (i - mj) * pj[static_cast<std::size_t>(i)];
    }
    if (si > 0.0 && sj > 0.0) {
        for (const auto& [cell, count] : cells)
            out.correlation += (cell.first - mi) * (cell.second - mj) * (count / total);
        out.correlation /= std::sqrt(si) * std::sqrt(sj);
    }
    return out;
}

LabelMap full_region(int width, int height) { return LabelMap(width, height, 0); }

} // namespace

TEST_CASE("spectral stats on constant and two-point regions") {
    const MultiBandRaster r = one_band({{7.0, 7.0}, {7.0, 7.0}});
    const auto stats = quakeseg::spectral_stats(r, full_region(2, 2), 0);
    REQUIRE(stats.size() == 1);
    CHECK(stats[0].first == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(stats[0].second == doctest::Approx(0.0).epsilon(1e-12));

    const MultiBandRaster two = one_band({{1.0, 3.0}});
    const auto ts = quakeseg::spectral_stats(two, full_region(2, 1), 0);
    CHECK(ts[0].first == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ts[0].second == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectral stats match a two-pass oracle on random regions") {
    Rng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 6 + static_cast<int>(rng.uniform_int(10));
        const int h = 6 + static_cast<int>(rng.uniform_int(10));
        const MultiBandRaster raster = qtest::random_raster(w, h, 3, rng);
        std::vector<int> ids(static_cast<std::size_t>(w) * h);
        for (auto& v : ids)
            v = static_cast<int>(rng.uniform_int(2));
        // Random labels rarely form a valid partition, so compare against a
        // half split instead: region = left or right half.
        LabelMap labels(w, h, 0);
        std::vector<std::pair<int, int>> left, right;
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                labels.at(i, j) = j < w / 2 ? 0 : 1;
                (j < w / 2 ? left : right).emplace_back(i, j);
            }
        for (int region = 0; region < 2; ++region) {
            const auto got = quakeseg::spectral_stats(raster, labels, region);
            for (int b = 0; b < 3; ++b) {
                const auto [mean, var] =
                    two_pass_stats(raster.band(b), region == 0 ? left : right);
                CHECK(got[static_cast<std::size_t>(b)].first ==
                      doctest::Approx(mean).epsilon(1e-9));
                CHECK(got[static_cast<std::size_t>(b)].second ==
                      doctest::Approx(var).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("spectral stats reject bad arguments") {
    const MultiBandRaster r = one_band({{1.0, 2.0}});
    CHECK_THROWS_AS((void)quakeseg::spectral_stats(r, full_region(2, 1), 5), ArgumentError);
    CHECK_THROWS_AS((void)quakeseg::spectral_stats(r, full_region(3, 1), 0), ArgumentError);
}

TEST_CASE("shape features of a single pixel") {
    const MultiBandRaster r = one_band({{5.0}});
    const auto stats = quakeseg::compute_region_stats(full_region(1, 1), r, r.band(0));
    const auto f = quakeseg::shape_features(stats[0]);
    CHECK(f.area == doctest::Approx(1.0));
    CHECK(f.shape_index == doctest::Approx(1.0));
    CHECK(f.length_width_ratio == doctest::Approx(1.0));
    CHECK(f.rectangular_fit == doctest::Approx(1.0));
    CHECK(f.roundness == doctest::Approx(std::numbers::pi / 4.0).epsilon(1e-12));
    CHECK(f.density == doctest::Approx(1.0));
}

TEST_CASE("shape features of squares and the 2x8 rectangle") {
    for (int n : {2, 5, 9}) {
        MultiBandRaster r(n, n, 1);
        const auto stats = quakeseg::compute_region_stats(full_region(n, n), r, r.band(0));
        const auto f = quakeseg::shape_features(stats[0]);
        CHECK(f.area == doctest::Approx(static_cast<double>(n) * n));
        CHECK(f.shape_index == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f.rectangular_fit == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f.length_width_ratio == doctest::Approx(1.0).epsilon(1e-9));
    }

    MultiBandRaster r(8, 2, 1);
    const auto stats = quakeseg::compute_region_stats(full_region(8, 2), r, r.band(0));
    const auto f = quakeseg::shape_features(stats[0]);
    // area 16, perimeter 20; coordinate variances 0.25 (rows) and 5.25 (cols).
    CHECK(f.area == doctest::Approx(16.0));
    CHECK(f.shape_index == doctest::Approx(20.0 / 16.0).epsilon(1e-12));
    CHECK(f.length_width_ratio == doctest::Approx(std::sqrt(21.0)).epsilon(1e-9));
    CHECK(f.rectangular_fit == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.roundness == doctest::Approx(64.0 * std::numbers::pi / 400.0).epsilon(1e-12));
    CHECK(f.density == doctest::Approx(4.0 / (1.0 + std::sqrt(5.5))).epsilon(1e-9));
}

TEST_CASE("glcm of a constant region is all zeros") {
    const MultiBandRaster r = one_band({{4.0, 4.0}, {4.0, 4.0}});
    const auto g = quakeseg::glcm_features(r.band(0), full_region(2, 2), 0, 32);
    CHECK(g.contrast == doctest::Approx(0.0));
    CHECK(g.correlation == doctest::Approx(0.0));
    CHECK(g.entropy == doctest::Approx(0.0));
}

TEST_CASE("glcm matches brute force on an 8x8 checkerboard") {
    MultiBandRaster r(8, 8, 1);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            r.at(0, i, j) = (i + j) % 2 ? 30.0f : 10.0f;
    const LabelMap labels = full_region(8, 8);
    for (int levels : {2, 32}) {
        const auto got = quakeseg::glcm_features(r.band(0), labels, 0, levels);
        const GlcmRef want = glcm_reference(r.band(0), labels, 0, levels);
        CHECK(want.prob_sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(got.contrast == doctest::Approx(want.contrast).epsilon(1e-9));
        CHECK(got.correlation == doctest::Approx(want.correlation).epsilon(1e-9));
        CHECK(got.entropy == doctest::Approx(want.entropy).epsilon(1e-9));
    }
}

TEST_CASE("glcm matches brute force on random regions") {
    Rng rng(808);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const int w = 4 + static_cast<int>(rng.uniform_int(8));
        const int h = 4 + static_cast<int>(rng.uniform_int(8));
        MultiBandRaster raster(w, h, 1);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
                raster.at(0, i, j) = static_cast<float>(std::floor(rng.uniform(0.0, 6.0)));
        LabelMap labels(w, h, 0);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
                labels.at(i, j) = i < h / 2 ? 0 : 1;
        const int levels = 2 + static_cast<int>(rng.uniform_int(31));
        for (int region = 0; region < 2; ++region) {
            const auto got = quakeseg::glcm_features(raster.band(0), labels, region, levels);
            const GlcmRef want = glcm_reference(raster.band(0), labels, region, levels);
            CHECK(want.prob_sum == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(got.contrast == doctest::Approx(want.contrast).epsilon(1e-9));
            CHECK(got.correlation == doctest::Approx(want.correlation).epsilon(1e-9));
            CHECK(got.entropy == doctest::Approx(want.entropy).epsilon(1e-9));
            CHECK(got.contrast >= 0.0);
            CHECK(got.entropy >= 0.0);
            CHECK(got.entropy <= std::log(static_cast<double>(levels) * levels) + 1e-12);
            ++checked;
        }
    }
    CHECK(checked == 80);
}

TEST_CASE("glcm entropy equals ln k for k equal-mass cells") {
    // 1x2 strip: a single symmetric pair, two equal cells.
    const MultiBandRaster strip = one_band({{1.0, 9.0}});
    const auto g2 = quakeseg::glcm_features(strip.band(0), full_region(2, 1), 0, 2);
    CHECK(g2.entropy == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // L-shaped region: pairs (a,b), (a,b), (b,b) spread over three equal cells.
    MultiBandRaster l(2, 2, 1);
    l.at(0, 0, 0) = 1.0f;
    l.at(0, 0, 1) = 9.0f;
    l.at(0, 1, 0) = 9.0f;
    l.at(0, 1, 1) = 9.0f;
    LabelMap labels(2, 2, 0);
    labels.at(1, 1) = 1; // exclude the bottom-right pixel
    const auto g3 = quakeseg::glcm_features(l.band(0), labels, 0, 2);
    CHECK(g3.entropy == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("glcm rejects pairless regions and bad arguments") {
    // Two single-pixel regions at opposite corners of a 2-region map.
    MultiBandRaster r = one_band({{1.0, 2.0}});
    LabelMap labels(2, 1, 0);
    labels.at(0, 1) = 1;
    CHECK_THROWS_AS((void)quakeseg::glcm_features(r.band(0), labels, 0, 32), DataError);
    CHECK_THROWS_AS((void)quakeseg::glcm_features(r.band(0), labels, 0, 1), ArgumentError);
    CHECK_THROWS_AS((void)quakeseg::glcm_features(r.band(0), labels, 7, 32), ArgumentError);
}

TEST_CASE("feature names are fixed and 2B+10 long") {
    const auto names = quakeseg::feature_names(2);
    const std::vector<std::string> want = {
        "mean_0", "var_0", "mean_1", "var_1", "area", "shape_index", "length_width_ratio",
        "rectangular_fit", "roundness", "density", "glcm_contrast", "glcm_correlation",
        "glcm_entropy", "ndvi_mean"};
    CHECK(names == want);
    CHECK(quakeseg::feature_names(4).size() == 18);
}

TEST_CASE("feature matrix rows match per-region computation") {
    Rng rng(1212);
    const MultiBandRaster raster = qtest::blocky_raster(24, 18, 3, rng);
    LabelMap labels = quakeseg::fast_scan_partition(raster, 0.08);
    const BandGrid ndvi = quakeseg::compute_ndvi(raster, 2, 1);
    const auto m = quakeseg::build_feature_matrix(raster, labels, ndvi);

    const int n = labels.region_count();
    REQUIRE(static_cast<int>(m.rows.size()) == n);
    CHECK(m.names == quakeseg::feature_names(3));
    CHECK_FALSE(m.labeled());

    const auto stats = quakeseg::compute_region_stats(labels, raster, raster.band(2));
    for (int id = 0; id < n; ++id) {
        const auto& row = m.rows[static_cast<std::size_t>(id)];
        REQUIRE(row.size() == 16);
        const auto spec = quakeseg::spectral_stats(raster, labels, id);
        for (int b = 0; b < 3; ++b) {
            CHECK(row[static_cast<std::size_t>(2 * b)] ==
                  doctest::Approx(spec[static_cast<std::size_t>(b)].first).epsilon(1e-9));
            CHECK(row[static_cast<std::size_t>(2 * b + 1)] ==
                  doctest::Approx(spec[static_cast<std::size_t>(b)].second).epsilon(1e-9));
        }
        const auto sf = quakeseg::shape_features(stats[static_cast<std::size_t>(id)]);
        CHECK(row[6] == doctest::Approx(sf.area));
        CHECK(row[7] == doctest::Approx(sf.shape_index));
        CHECK(row[8] == doctest::Approx(sf.length_width_ratio));
        CHECK(row[9] == doctest::Approx(sf.rectangular_fit));
        CHECK(row[10] == doctest::Approx(sf.roundness));
        CHECK(row[11] == doctest::Approx(sf.density));
        try {
            const auto gf = quakeseg::glcm_features(raster.band(2), labels, id, 32);
            CHECK(row[12] == doctest::Approx(gf.contrast));
            CHECK(row[13] == doctest::Approx(gf.correlation));
            CHECK(row[14] == doctest::Approx(gf.entropy));
        } catch (const DataError&) {
            CHECK(row[12] == 0.0);
            CHECK(row[13] == 0.0);
            CHECK(row[14] == 0.0);
        }
        double nd = 0.0;
        long long cnt = 0;
        for (int i = 0; i < labels.height(); ++i)
            for (int j = 0; j < labels.width(); ++j)
                if (labels.at(i, j) == id) {
                    nd += ndvi.at(i, j);
                    ++cnt;
                }
        CHECK(row[15] == doctest::Approx(nd / static_cast<double>(cnt)).epsilon(1e-9));
        for (double v : row)
            CHECK(std::isfinite(v));
    }
}

TEST_CASE("feature matrix carries truth labels and zeroes degenerate regions") {
    // Region 1 is a single pixel: no co-occurrence pair, so its GLCM triple
    // must be substituted with zeros.
    MultiBandRaster r = one_band({{5.0, 5.0, 5.0}, {5.0, 5.0, 9.0}});
    LabelMap labels(3, 2, 0);
    labels.at(1, 2) = 1;
    const BandGrid ndvi = quakeseg::compute_ndvi(r, 0, 0);
    const std::vector<int> truth = {2, 0};
    const auto m = quakeseg::build_feature_matrix(r, labels, ndvi, truth);
    REQUIRE(m.rows.size() == 2);
    CHECK(m.labeled());
    CHECK(m.labels == truth);
    CHECK(m.rows[1][2] == doctest::Approx(1.0)); // area of the lone pixel
    CHECK(m.rows[1][8] == 0.0);                  // glcm_contrast..entropy zeroed
    CHECK(m.rows[1][9] == 0.0);
    CHECK(m.rows[1][10] == 0.0);

    CHECK_THROWS_AS(
        (void)quakeseg::build_feature_matrix(r, labels, ndvi, std::vector<int>{1}),
        ArgumentError);
    const BandGrid bad(4, 4);
    CHECK_THROWS_AS((void)quakeseg::build_feature_matrix(r, labels, bad), ArgumentError);
    CHECK_THROWS_AS((void)quakeseg::build_feature_matrix(r, labels, ndvi, std::nullopt, 3),
                    ArgumentError);
}

TEST_CASE("nir band -1 selects the last band") {
    Rng rng(77);
    const MultiBandRaster raster = qtest::blocky_raster(12, 10, 3, rng);
    const LabelMap labels(12, 10, 0);
    const BandGrid ndvi = quakeseg::compute_ndvi(raster, 2, 1);
    const auto m_default = quakeseg::build_feature_matrix(raster, labels, ndvi);
    const auto m_last = quakeseg::build_feature_matrix(raster, labels, ndvi, std::nullopt, 2);
    CHECK(m_default.rows == m_last.rows);
}

TEST_CASE("normalization bounds: midpoint, constant column, clamping") {
    FeatureMatrix m;
    m.names = {"a", "b"};
    m.rows = {{2.0, 1.0}, {6.0, 1.0}};
    const NormBounds b = quakeseg::fit_bounds(m);
    const auto mid = quakeseg::apply_bounds(std::vector<double>{4.0, 1.0}, b);
    CHECK(mid[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mid[1] == doctest::Approx(0.5).epsilon(1e-12)); // constant column
    const auto hi = quakeseg::apply_bounds(std::vector<double>{8.0, 1.0}, b);
    CHECK(hi[0] == 1.0);
    const auto lo = quakeseg::apply_bounds(std::vector<double>{-3.0, 1.0}, b);
    CHECK(lo[0] == 0.0);
}

TEST_CASE("bounds are fitted on the selected rows only") {
    FeatureMatrix m;
    m.names = {"a"};
    m.rows = {{0.0}, {10.0}, {100.0}};
    const std::vector<std::size_t> train = {0, 1};
    const NormBounds b = quakeseg::fit_bounds(m, train);
    CHECK(b.min[0] == 0.0);
    CHECK(b.max[0] == 10.0);
    CHECK(quakeseg::apply_bounds(m.rows[2], b)[0] == 1.0); // clamped, not leaked

    CHECK_THROWS_AS((void)quakeseg::fit_bounds(m, std::vector<std::size_t>{}), ArgumentError);
    CHECK_THROWS_AS((void)quakeseg::fit_bounds(m, std::vector<std::size_t>{9}), ArgumentError);
}

TEST_CASE("normalized training columns span exactly [0,1]") {
    Rng rng(31);
    FeatureMatrix m;
    m.names = {"a", "b", "c"};
    for (int i = 0; i < 40; ++i)
        m.rows.push_back({rng.uniform(-5.0, 5.0), rng.uniform(100.0, 200.0), 3.25});
    const NormBounds b = quakeseg::fit_bounds(m);
    std::vector<double> col_min(3, 1e300), col_max(3, -1e300);
    for (const auto& row : m.rows) {
        const auto norm = quakeseg::apply_bounds(row, b);
        for (std::size_t k = 0; k < 3; ++k) {
            col_min[k] = std::min(col_min[k], norm[k]);
            col_max[k] = std::max(col_max[k], norm[k]);
            CHECK(norm[k] >= 0.0);
            CHECK(norm[k] <= 1.0);
        }
    }
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(col_min[k] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(col_max[k] == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(col_min[2] == 0.5); // constant column maps to the midpoint
    CHECK(col_max[2] == 0.5);
}

TEST_CASE("feature CSV round-trips exactly") {
    FeatureMatrix m;
    m.names = {"mean_0", "var_0", "area"};
    m.rows = {{0.1, 1.0 / 3.0, 16.0}, {-2.5e-17, 1e300, 0.0}};
    m.labels = {1, 0};

    qtest::TempFile csv("features");
    quakeseg::save_features_csv(m, csv.str());
    const FeatureMatrix back = quakeseg::load_features_csv(csv.str());
    CHECK(back.names == m.names);
    CHECK(back.labels == m.labels);
    REQUIRE(back.rows.size() == m.rows.size());
    for (std::size_t i = 0; i < m.rows.size(); ++i)
        for (std::size_t k = 0; k < m.rows[i].size(); ++k)
            CHECK(back.rows[i][k] == m.rows[i][k]); // bitwise via %.17g

    m.labels.clear();
    quakeseg::save_features_csv(m, csv.str());
    const FeatureMatrix plain = quakeseg::load_features_csv(csv.str());
    CHECK_FALSE(plain.labeled());
    CHECK(plain.rows == m.rows);
}

TEST_CASE("feature CSV loader rejects malformed input") {
    qtest::TempFile csv("badcsv");
    auto write = [&](const std::string& text) {
        std::FILE* f = std::fopen(csv.c_str(), "wb");
        REQUIRE(f != nullptr);
        std::fputs(text.c_str(), f);
        std::fclose(f);
    };

    write("");
    CHECK_THROWS_AS((void)quakeseg::load_features_csv(csv.str()), DataError);
    write("a,b\n1.0\n");
    CHECK_THROWS_AS((void)quakeseg::load_features_csv(csv.str()), DataError);
    write("a,b\n1.0,oops\n");
    CHECK_THROWS_AS((void)quakeseg::load_features_csv(csv.str()), DataError);
    write("a,class\n1.0,-3\n");
    CHECK_THROWS_AS((void)quakeseg::load_features_csv(csv.str()), DataError);
    CHECK_THROWS_AS((void)quakeseg::load_features_csv("/nonexistent/file.csv"), DataError);
}

TEST_SUITE_END();
