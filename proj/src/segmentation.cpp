#include "segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <set>

#include "errors.hpp"

namespace quakeseg {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double euclid(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Union-find over region ids with per-region pixel count and band sums.
struct RegionForest {
    explicit RegionForest(int bands) : bands(bands) {}

    int make(std::span<const double> spectrum) {
        const int id = static_cast<int>(parent.size());
        parent.push_back(id);
        count.push_back(1);
        sums.insert(sums.end(), spectrum.begin(), spectrum.end());
        return id;
    }

    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }

    // Merge the two roots; the smaller id stays the root so the scan order
    // relabeling is independent of union mechanics.
    int unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b)
            return a;
        if (b < a)
            std::swap(a, b);
        parent[static_cast<std::size_t>(b)] = a;
        count[static_cast<std::size_t>(a)] += count[static_cast<std::size_t>(b)];
        for (int k = 0; k < bands; ++k)
            sums[static_cast<std::size_t>(a) * bands + k] += sums[static_cast<std::size_t>(b) * bands + k];
        return a;
    }

    void add_pixel(int root, std::span<const double> spectrum) {
        count[static_cast<std::size_t>(root)] += 1;
        for (int k = 0; k < bands; ++k)
            sums[static_cast<std::size_t>(root) * bands + k] += spectrum[static_cast<std::size_t>(k)];
    }

    void mean_of(int root, std::vector<double>& out) const {
        out.resize(static_cast<std::size_t>(bands));
        const double n = static_cast<double>(count[static_cast<std::size_t>(root)]);
        for (int k = 0; k < bands; ++k)
            out[static_cast<std::size_t>(k)] = sums[static_cast<std::size_t>(root) * bands + k] / n;
    }

    int bands;
    std::vector<int> parent;
    std::vector<long long> count;
    std::vector<double> sums;
};

} // namespace

double sam_angle(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ArgumentError("sam_angle: vector lengths differ");
    if (a.empty())
        throw ArgumentError("sam_angle: empty vectors");
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na == 0.0 || nb == 0.0)
        throw ArgumentError("sam_angle: zero spectral vector");
    const double cosv = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
    return std::acos(cosv);
}

LabelMap fast_scan_partition(const MultiBandRaster& raster, double init_threshold) {
    if (!(init_threshold > 0.0))
        throw ArgumentError("fast_scan_partition: threshold must be > 0");

    const int w = raster.width();
    const int h = raster.height();
    const int bands = raster.bands();
    RegionForest forest(bands);
    std::vector<int> assigned(static_cast<std::size_t>(w) * h, -1);

    std::vector<double> spectrum, left_mean, up_mean;
    constexpr double kNoAngle = std::numeric_limits<double>::infinity();

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            spectrum = raster.pixel_spectrum(r, c);
            const bool pixel_zero = norm2(spectrum) == 0.0;

            int left = c > 0 ? forest.find(assigned[static_cast<std::size_t>(r) * w + c - 1]) : -1;
            int up = r > 0 ? forest.find(assigned[(static_cast<std::size_t>(r) - 1) * w + c]) : -1;
            if (left >= 0)
                forest.mean_of(left, left_mean);
            if (up >= 0)
                forest.mean_of(up, up_mean);

            int target = -1;
            if (!pixel_zero) {
                // SAM is undefined against a zero-mean region; such a
                // candidate simply does not qualify for a non-zero pixel.
                double angle_left = kNoAngle;
                double angle_up = kNoAngle;
                if (left >= 0 && norm2(left_mean) > 0.0)
                    angle_left = sam_angle(spectrum, left_mean);
                if (up >= 0 && up != left && norm2(up_mean) > 0.0)
                    angle_up = sam_angle(spectrum, up_mean);
                else if (up >= 0 && up == left)
                    angle_up = kNoAngle; // same region, nothing to union

                const bool left_ok = angle_left <= init_threshold;
                const bool up_ok = angle_up <= init_threshold;
                if (left_ok && up_ok) {
                    target = forest.unite(left, up);
                } else if (left_ok) {
                    target = left;
                } else if (up_ok) {
                    target = up;
                }
            } else {
                // All-zero pixel: Euclidean nearest-mean fallback keeps the
                // partition from sprouting singleton black regions.
                double best = std::numeric_limits<double>::infinity();
                if (left >= 0) {
                    best = euclid(spectrum, left_mean);
                    target = left;
                }
                if (up >= 0 && up != left) {
                    const double d = euclid(spectrum, up_mean);
                    if (d < best) {
                        best = d;
                        target = up;
                    }
                }
            }

            if (target < 0) {
                target = forest.make(spectrum);
            } else {
                forest.add_pixel(target, spectrum);
            }
            assigned[static_cast<std::size_t>(r) * w + c] = target;
        }
    }

    LabelMap out(w, h);
    for (std::size_t i = 0; i < assigned.size(); ++i)
        out.labels()[i] = forest.find(assigned[i]);
    return relabel_dense(out);
}

LabelMap adaptive_merge_small(const LabelMap& labels, const MultiBandRaster& raster, int min_size) {
    if (labels.width() != raster.width() || labels.height() != raster.height())
        throw ArgumentError("adaptive_merge_small: label/raster dimensions differ");
    if (min_size < 1)
        throw ArgumentError("adaptive_merge_small: min_size must be >= 1");

    const int w = labels.width();
    const int h = labels.height();
    const int bands = raster.bands();
    const int n_regions = validate_label_map(labels);

    std::vector<long long> area(static_cast<std::size_t>(n_regions), 0);
    std::vector<double> sums(static_cast<std::size_t>(n_regions) * bands, 0.0);
    std::vector<std::set<int>> adj(static_cast<std::size_t>(n_regions));

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int lab = labels.at(r, c);
            area[static_cast<std::size_t>(lab)] += 1;
            for (int b = 0; b < bands; ++b)
                sums[static_cast<std::size_t>(lab) * bands + b] += raster.at(b, r, c);
            if (c + 1 < w && labels.at(r, c + 1) != lab) {
                adj[static_cast<std::size_t>(lab)].insert(labels.at(r, c + 1));
                adj[static_cast<std::size_t>(labels.at(r, c + 1))].insert(lab);
            }
            if (r + 1 < h && labels.at(r + 1, c) != lab) {
                adj[static_cast<std::size_t>(lab)].insert(labels.at(r + 1, c));
                adj[static_cast<std::size_t>(labels.at(r + 1, c))].insert(lab);
            }
        }
    }

    std::vector<int> remap(static_cast<std::size_t>(n_regions));
    for (int i = 0; i < n_regions; ++i)
        remap[static_cast<std::size_t>(i)] = i;
    std::vector<char> alive(static_cast<std::size_t>(n_regions), 1);
    int live = n_regions;

    // Min-heap of (area, id); stale entries are skipped when the stored area
    // no longer matches.
    using Entry = std::pair<long long, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    for (int i = 0; i < n_regions; ++i)
        if (area[static_cast<std::size_t>(i)] < min_size)
            heap.emplace(area[static_cast<std::size_t>(i)], i);

    auto mean_of = [&](int id, std::vector<double>& out) {
        out.resize(static_cast<std::size_t>(bands));
        for (int b = 0; b < bands; ++b)
            out[static_cast<std::size_t>(b)] =
                sums[static_cast<std::size_t>(id) * bands + b] / static_cast<double>(area[static_cast<std::size_t>(id)]);
    };

    bool merged_any = false;
    std::vector<double> mean_a, mean_n;
    constexpr double kPi = std::numbers::pi;

    while (live > 1 && !heap.empty()) {
        const auto [a_area, a] = heap.top();
        heap.pop();
        if (!alive[static_cast<std::size_t>(a)] || area[static_cast<std::size_t>(a)] != a_area)
            continue;
        if (a_area >= min_size)
            continue;

        mean_of(a, mean_a);
        const bool a_zero = norm2(mean_a) == 0.0;

        // Rank neighbors by spectral angle; degenerate (zero-mean) pairs sort
        // after every defined angle, ordered among themselves by Euclidean
        // distance between means. Ties prefer the smaller neighbor id.
        int best = -1;
        double best_key = std::numeric_limits<double>::infinity();
        for (int n : adj[static_cast<std::size_t>(a)]) {
            mean_of(n, mean_n);
            double key;
            if (!a_zero && norm2(mean_n) > 0.0)
                key = sam_angle(mean_a, mean_n);
            else
                key = kPi + euclid(mean_a, mean_n);
            if (key < best_key) {
                best_key = key;
                best = n;
            }
        }
        if (best < 0)
            break; // no neighbor: the whole image is one region

        // Absorb a into best.
        area[static_cast<std::size_t>(best)] += area[static_cast<std::size_t>(a)];
        for (int b = 0; b < bands; ++b)
            sums[static_cast<std::size_t>(best) * bands + b] += sums[static_cast<std::size_t>(a) * bands + b];
        adj[static_cast<std::size_t>(best)].erase(a);
        for (int n : adj[static_cast<std::size_t>(a)]) {
            if (n == best)
                continue;
            adj[static_cast<std::size_t>(n)].erase(a);
            adj[static_cast<std::size_t>(n)].insert(best);
            adj[static_cast<std::size_t>(best)].insert(n);
        }
        adj[static_cast<std::size_t>(a)].clear();
        alive[static_cast<std::size_t>(a)] = 0;
        remap[static_cast<std::size_t>(a)] = best;
        --live;
        merged_any = true;
        if (area[static_cast<std::size_t>(best)] < min_size)
            heap.emplace(area[static_cast<std::size_t>(best)], best);
    }

    if (!merged_any)
        return labels;

    // Path-compress the remap chain, rewrite, and renumber densely.
    auto resolve = [&](int x) {
        while (remap[static_cast<std::size_t>(x)] != x)
            x = remap[static_cast<std::size_t>(x)];
        return x;
    };
    LabelMap out(w, h);
    for (std::size_t i = 0; i < out.labels().size(); ++i)
        out.labels()[i] = resolve(labels.labels()[i]);
    return relabel_dense(out);
}

} // namespace quakeseg
