#include "features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "errors.hpp"

namespace quakeseg {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Covariance eigenvalues of the pixel coordinates, descending, clamped at 0.
std::pair<double, double> coord_eigenvalues(const RegionStats& s) {
    const double n = static_cast<double>(s.area);
    const double mr = static_cast<double>(s.sum_r) / n;
    const double mc = static_cast<double>(s.sum_c) / n;
    const double crr = static_cast<double>(s.sum_rr) / n - mr * mr;
    const double ccc = static_cast<double>(s.sum_cc) / n - mc * mc;
    const double crc = static_cast<double>(s.sum_rc) / n - mr * mc;
    const double tr = crr + ccc;
    const double det = crr * ccc - crc * crc;
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    const double l1 = std::max(0.0, (tr + disc) / 2.0);
    const double l2 = std::max(0.0, (tr - disc) / 2.0);
    return {l1, l2};
}

} // namespace

std::vector<std::pair<double, double>> spectral_stats(const MultiBandRaster& raster,
                                                      const LabelMap& labels, int region) {
    if (labels.width() != raster.width() || labels.height() != raster.height())
        throw ArgumentError("spectral_stats: raster/label dimensions differ");
    if (region < 0 || region >= labels.region_count())
        throw ArgumentError("spectral_stats: unknown region id");

    const int bands = raster.bands();
    std::vector<double> sum(static_cast<std::size_t>(bands), 0.0);
    std::vector<double> sumsq(static_cast<std::size_t>(bands), 0.0);
    long long n = 0;
    for (int r = 0; r < labels.height(); ++r) {
        for (int c = 0; c < labels.width(); ++c) {
            if (labels.at(r, c) != region)
                continue;
            ++n;
            for (int b = 0; b < bands; ++b) {
                const double v = raster.at(b, r, c);
                sum[static_cast<std::size_t>(b)] += v;
                sumsq[static_cast<std::size_t>(b)] += v * v;
            }
        }
    }
    if (n == 0)
        throw ArgumentError("spectral_stats: unknown region id");

    std::vector<std::pair<double, double>> out(static_cast<std::size_t>(bands));
    for (int b = 0; b < bands; ++b) {
        const double mean = sum[static_cast<std::size_t>(b)] / static_cast<double>(n);
        const double var =
            std::max(0.0, sumsq[static_cast<std::size_t>(b)] / static_cast<double>(n) - mean * mean);
        out[static_cast<std::size_t>(b)] = {mean, var};
    }
    return out;
}

ShapeFeatures shape_features(const RegionStats& stats) {
    if (stats.area < 1)
        throw ArgumentError("shape_features: empty region");
    const double area = static_cast<double>(stats.area);
    const double perim = static_cast<double>(stats.perimeter);
    const auto [l1, l2] = coord_eigenvalues(stats);
    constexpr double kFloor = 1.0 / 12.0; // variance of a single unit pixel
    const double bbox_w = static_cast<double>(stats.max_col - stats.min_col + 1);
    const double bbox_h = static_cast<double>(stats.max_row - stats.min_row + 1);

    ShapeFeatures f{};
    f.area = area;
    f.shape_index = perim / (4.0 * std::sqrt(area));
    f.length_width_ratio = std::sqrt(std::max(l1, kFloor) / std::max(l2, kFloor));
    f.rectangular_fit = area / (bbox_w * bbox_h);
    f.roundness = 4.0 * std::numbers::pi * area / (perim * perim);
    f.density = std::sqrt(area) / (1.0 + std::sqrt(l1 + l2));
    return f;
}

GlcmFeatures glcm_features(const BandGrid& band, const LabelMap& labels, int region, int levels) {
    if (band.width() != labels.width() || band.height() != labels.height())
        throw ArgumentError("glcm_features: band/label dimensions differ");
    if (region < 0 || region >= labels.region_count())
        throw ArgumentError("glcm_features: unknown region id");
    if (levels < 2)
        throw ArgumentError("glcm_features: need at least 2 quantization levels");

    const int w = labels.width();
    const int h = labels.height();
    float vmin = std::numeric_limits<float>::max();
    float vmax = std::numeric_limits<float>::lowest();
    bool seen = false;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (labels.at(r, c) == region) {
                seen = true;
                vmin = std::min(vmin, band.at(r, c));
                vmax = std::max(vmax, band.at(r, c));
            }
    if (!seen)
        throw ArgumentError("glcm_features: unknown region id");

    auto quantize = [&](float v) {
        if (vmax == vmin)
            return 0;
        const int q = static_cast<int>(static_cast<double>(v - vmin) / (vmax - vmin) * levels);
        return std::min(q, levels - 1);
    };

    std::vector<double> glcm(static_cast<std::size_t>(levels) * levels, 0.0);
    static constexpr int kOffsets[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
    double total = 0.0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (labels.at(r, c) != region)
                continue;
            const int qi = quantize(band.at(r, c));
            for (const auto& off : kOffsets) {
                const int rr = r + off[0];
                const int cc = c + off[1];
                if (rr < 0 || cc < 0 || rr >= h || cc >= w || labels.at(rr, cc) != region)
                    continue;
                const int qj = quantize(band.at(rr, cc));
                glcm[static_cast<std::size_t>(qi) * levels + qj] += 1.0;
                glcm[static_cast<std::size_t>(qj) * levels + qi] += 1.0;
                total += 2.0;
            }
        }
    }
    if (total == 0.0)
        throw DataError("glcm_features: region has no co-occurrence pair");

    double contrast = 0.0;
    double entropy = 0.0;
    std::vector<double> pi(static_cast<std::size_t>(levels), 0.0);
    std::vector<double> pj(static_cast<std::size_t>(levels), 0.0);
    for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < levels; ++j) {
            const double p = glcm[static_cast<std::size_t>(i) * levels + j] / total;
            if (p == 0.0)
                continue;
            contrast += p * (i - j) * (i - j);
            entropy -= p * std::log(p);
            pi[static_cast<std::size_t>(i)] += p;
            pj[static_cast<std::size_t>(j)] += p;
        }
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
    si = std::sqrt(si);
    sj = std::sqrt(sj);
    double correlation = 0.0;
    if (si * sj > 0.0) {
        for (int i = 0; i < levels; ++i)
            for (int j = 0; j < levels; ++j) {
                const double p = glcm[static_cast<std::size_t>(i) * levels + j] / total;
                correlation += (i - mi) * (j - mj) * p;
            }
        correlation /= si * sj;
    }
    return {contrast, correlation, entropy};
}

std::vector<std::string> feature_names(int bands) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(2 * bands + 10));
    for (int b = 0; b < bands; ++b) {
        names.push_back("mean_" + std::to_string(b));
        names.push_back("var_" + std::to_string(b));
    }
    for (const char* n : {"area", "shape_index", "length_width_ratio", "rectangular_fit",
                          "roundness", "density", "glcm_contrast", "glcm_correlation",
                          "glcm_entropy", "ndvi_mean"})
        names.push_back(n);
    return names;
}

FeatureMatrix build_feature_matrix(const MultiBandRaster& raster, const LabelMap& labels,
                                   const BandGrid& ndvi, const std::optional<std::vector<int>>& truth,
                                   int nir_band, int glcm_levels) {
    if (labels.width() != raster.width() || labels.height() != raster.height() ||
        ndvi.width() != raster.width() || ndvi.height() != raster.height())
        throw ArgumentError("build_feature_matrix: dimension mismatch");
    if (nir_band == -1)
        nir_band = raster.bands() - 1;
    if (nir_band < 0 || nir_band >= raster.bands())
        throw ArgumentError("build_feature_matrix: NIR band index out of range");

    const int n_regions = validate_label_map(labels);
    if (truth && static_cast<int>(truth->size()) != n_regions)
        throw ArgumentError("build_feature_matrix: truth size does not match region count");

    const BandGrid nir = raster.band(nir_band);
    const std::vector<RegionStats> stats = compute_region_stats(labels, raster, nir);

    std::vector<double> ndvi_sum(static_cast<std::size_t>(n_regions), 0.0);
    for (int r = 0; r < labels.height(); ++r)
        for (int c = 0; c < labels.width(); ++c)
            ndvi_sum[static_cast<std::size_t>(labels.at(r, c))] += ndvi.at(r, c);

    const int bands = raster.bands();
    FeatureMatrix m;
    m.names = feature_names(bands);
    m.rows.reserve(static_cast<std::size_t>(n_regions));
    for (int id = 0; id < n_regions; ++id) {
        const RegionStats& s = stats[static_cast<std::size_t>(id)];
        std::vector<double> row;
        row.reserve(m.names.size());
        const double n = static_cast<double>(s.area);
        for (int b = 0; b < bands; ++b) {
            const double mean = s.band_sum[static_cast<std::size_t>(b)] / n;
            const double var =
                std::max(0.0, s.band_sumsq[static_cast<std::size_t>(b)] / n - mean * mean);
            row.push_back(mean);
            row.push_back(var);
        }
        const ShapeFeatures sf = shape_features(s);
        row.insert(row.end(), {sf.area, sf.shape_index, sf.length_width_ratio, sf.rectangular_fit,
                               sf.roundness, sf.density});
        GlcmFeatures gf{0.0, 0.0, 0.0};
        try {
            gf = glcm_features(nir, labels, id, glcm_levels);
        } catch (const DataError&) {
            // degenerate region: zero texture
        }
        row.insert(row.end(), {gf.contrast, gf.correlation, gf.entropy});
        row.push_back(ndvi_sum[static_cast<std::size_t>(id)] / n);
        m.rows.push_back(std::move(row));
    }
    if (truth)
        m.labels = *truth;
    return m;
}

NormBounds fit_bounds(const FeatureMatrix& m, std::span<const std::size_t> rows_idx) {
    if (rows_idx.empty())
        throw ArgumentError("fit_bounds: no training rows");
    const std::size_t d = m.feature_count();
    NormBounds b;
    b.min.assign(d, std::numeric_limits<double>::infinity());
    b.max.assign(d, -std::numeric_limits<double>::infinity());
    for (std::size_t idx : rows_idx) {
        if (idx >= m.rows.size())
            throw ArgumentError("fit_bounds: row index out of range");
        const auto& row = m.rows[idx];
        for (std::size_t k = 0; k < d; ++k) {
            b.min[k] = std::min(b.min[k], row[k]);
            b.max[k] = std::max(b.max[k], row[k]);
        }
    }
    return b;
}

NormBounds fit_bounds(const FeatureMatrix& m) {
    std::vector<std::size_t> all(m.rows.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    return fit_bounds(m, all);
}

std::vector<double> apply_bounds(std::span<const double> row, const NormBounds& b) {
    if (row.size() != b.min.size() || b.min.size() != b.max.size())
        throw ArgumentError("apply_bounds: dimension mismatch");
    std::vector<double> out(row.size());
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (b.min[k] == b.max[k]) {
            out[k] = 0.5;
        } else {
            out[k] = std::clamp((row[k] - b.min[k]) / (b.max[k] - b.min[k]), 0.0, 1.0);
        }
    }
    return out;
}

void save_features_csv(const FeatureMatrix& m, const std::string& path) {
    if (m.labeled() && m.labels.size() != m.rows.size())
        throw ArgumentError("save_features_csv: label count does not match rows");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f)
        throw DataError("cannot open for writing: " + path);

    for (std::size_t k = 0; k < m.names.size(); ++k)
        std::fprintf(f.get(), "%s%s", k ? "," : "", m.names[k].c_str());
    if (m.labeled())
        std::fputs(",class", f.get());
    std::fputc('\n', f.get());

    char buf[64];
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        if (m.rows[i].size() != m.names.size())
            throw ArgumentError("save_features_csv: ragged row");
        for (std::size_t k = 0; k < m.rows[i].size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", m.rows[i][k]);
            std::fprintf(f.get(), "%s%s", k ? "," : "", buf);
        }
        if (m.labeled())
            std::fprintf(f.get(), ",%d", m.labels[i]);
        std::fputc('\n', f.get());
    }
    if (std::ferror(f.get()))
        throw DataError("write failed: " + path);
}

FeatureMatrix load_features_csv(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f)
        throw DataError("cannot open: " + path);
    std::string content;
    char chunk[4096];
    std::size_t got;
    while ((got = std::fread(chunk, 1, sizeof chunk, f.get())) > 0)
        content.append(chunk, got);
    if (std::ferror(f.get()))
        throw DataError("read failed: " + path);

    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw DataError("feature CSV has no header: " + path);
    if (!line.empty() && line.back() == '\r')
        line.pop_back();

    FeatureMatrix m;
    bool labeled = false;
    {
        std::istringstream hs(line);
        std::string cell;
        std::vector<std::string> cols;
        while (std::getline(hs, cell, ','))
            cols.push_back(cell);
        if (cols.empty())
            throw DataError("feature CSV header is empty: " + path);
        labeled = cols.back() == "class";
        if (labeled)
            cols.pop_back();
        if (cols.empty())
            throw DataError("feature CSV has no feature columns: " + path);
        m.names = std::move(cols);
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> row;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        const std::size_t want = m.names.size() + (labeled ? 1 : 0);
        if (cells.size() != want)
            throw DataError("feature CSV row " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " + std::to_string(want));
        row.reserve(m.names.size());
        for (std::size_t k = 0; k < m.names.size(); ++k) {
            char* end = nullptr;
            const double v = std::strtod(cells[k].c_str(), &end);
            if (end == cells[k].c_str() || *end != '\0' || !std::isfinite(v))
                throw DataError("feature CSV row " + std::to_string(line_no) +
                                ": bad numeric cell '" + cells[k] + "'");
            row.push_back(v);
        }
        if (labeled) {
            char* end = nullptr;
            const long cls = std::strtol(cells.back().c_str(), &end, 10);
            if (end == cells.back().c_str() || *end != '\0' || cls < 0)
                throw DataError("feature CSV row " + std::to_string(line_no) + ": bad class '" +
                                cells.back() + "'");
            m.labels.push_back(static_cast<int>(cls));
        }
        m.rows.push_back(std::move(row));
    }
    return m;
}

} // namespace quakeseg
