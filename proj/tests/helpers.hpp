#ifndef QUAKESEG_TEST_HELPERS_HPP
#define QUAKESEG_TEST_HELPERS_HPP

#include <cstdio>
#include <deque>
#include <filesystem>
#include <string>
#include <vector>

#include "labelmap.hpp"
#include "raster.hpp"
#include "rng.hpp"

namespace qtest {

// Unique scratch path; the file is removed when the holder dies.
class TempFile {
public:
    explicit TempFile(const std::string& tag) {
        static int counter = 0;
        path_ = (std::filesystem::temp_directory_path() /
                 ("qks_test_" + tag + "_" + std::to_string(++counter)))
                    .string();
    }
    ~TempFile() { std::remove(path_.c_str()); }
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;

    const std::string& str() const { return path_; }
    const char* c_str() const { return path_.c_str(); }

private:
    std::string path_;
};

// Independent partition check: total, labels dense 0..R-1, each label one
// 4-connected component. Returns an empty string when valid, else a reason.
inline std::string partition_defect(const quakeseg::LabelMap& labels) {
    const int w = labels.width();
    const int h = labels.height();
    int max_label = -1;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            if (labels.at(i, j) < 0) return "negative label";
            max_label = std::max(max_label, labels.at(i, j));
        }
    const int n = max_label + 1;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<char> visited(static_cast<std::size_t>(w) * h, 0);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const int id = labels.at(i, j);
            if (visited[static_cast<std::size_t>(i) * w + j]) continue;
            if (seen[static_cast<std::size_t>(id)]) return "label " + std::to_string(id) + " split";
            seen[static_cast<std::size_t>(id)] = 1;
            std::deque<std::pair<int, int>> queue{{i, j}};
            visited[static_cast<std::size_t>(i) * w + j] = 1;
            while (!queue.empty()) {
                const auto [r, c] = queue.front();
                queue.pop_front();
                const int dr[] = {-1, 1, 0, 0};
                const int dc[] = {0, 0, -1, 1};
                for (int d = 0; d < 4; ++d) {
                    const int nr = r + dr[d];
                    const int nc = c + dc[d];
                    if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                    if (visited[static_cast<std::size_t>(nr) * w + nc]) continue;
                    if (labels.at(nr, nc) != id) continue;
                    visited[static_cast<std::size_t>(nr) * w + nc] = 1;
                    queue.emplace_back(nr, nc);
                }
            }
        }
    for (int id = 0; id < n; ++id)
        if (!seen[static_cast<std::size_t>(id)]) return "label " + std::to_string(id) + " missing";
    return "";
}

// Random multi-band raster with values in [lo, hi).
inline quakeseg::MultiBandRaster random_raster(int width, int height, int bands, quakeseg::Rng& rng,
                                               double lo = 0.0, double hi = 100.0) {
    quakeseg::MultiBandRaster raster(width, height, bands);
    for (int b = 0; b < bands; ++b)
        for (int i = 0; i < height; ++i)
            for (int j = 0; j < width; ++j)
                raster.at(b, i, j) = static_cast<float>(rng.uniform(lo, hi));
    return raster;
}

// Random blocky raster: piecewise-constant tiles plus mild noise, the kind of
// input the segmentation stages are designed for.
inline quakeseg::MultiBandRaster blocky_raster(int width, int height, int bands,
                                               quakeseg::Rng& rng) {
    const int tile = 4 + static_cast<int>(rng.uniform_int(8));
    std::vector<std::vector<double>> palette;
    for (int p = 0; p < 4; ++p) {
        std::vector<double> spectrum;
        for (int b = 0; b < bands; ++b) spectrum.push_back(rng.uniform(20.0, 120.0));
        palette.push_back(std::move(spectrum));
    }
    quakeseg::MultiBandRaster raster(width, height, bands);
    for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j) {
            const std::size_t which =
                static_cast<std::size_t>(((i / tile) * 31 + (j / tile) * 17) % 4);
            for (int b = 0; b < bands; ++b)
                raster.at(b, i, j) =
                    static_cast<float>(palette[which][static_cast<std::size_t>(b)] + rng.uniform(-1.0, 1.0));
        }
    return raster;
}

} // namespace qtest

#endif
